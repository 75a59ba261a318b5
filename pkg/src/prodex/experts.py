"""Expert models: flow experts with closed-form velocity fields, tabular
autoregressive experts, and scalar log-reward experts.

Flow experts expose velocity as the primitive; scores are always derived
through the conversion in :mod:`prodex.flowmath`, so every sampler run
exercises that identity.  The built-in zoo is analytic (Gaussian and Gaussian
mixture data distributions); arbitrary velocity callables plug in through
:func:`velocity_field_expert` without any API change.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Any, Callable

import numpy as np

from .core import Scheduler, LINEAR_SCHEDULER

TABLE_TOL = 1e-12


# ---------------------------------------------------------------------------
# Flow experts
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class FlowExpert:
    """A generative expert defined by a velocity field on remapped time.

    ``velocity(x, time)`` must accept states of shape ``(..., dim)`` and
    return the same shape.  ``region_weight`` is a mask in [0,1]^dim limiting
    where the expert speaks (``None`` means everywhere); masks are normalized
    across experts at composition time.  ``jacobian(x, time)``, when present,
    returns the state Jacobian of the velocity (shape ``(..., dim, dim)`` or a
    constant ``(dim, dim)``); otherwise central finite differences with step
    ``fd_step`` are used for conditional corrections.
    """

    velocity: Callable[[np.ndarray, float], np.ndarray]
    dim: int
    region_weight: np.ndarray | None = None
    parents: tuple[str, ...] = ()
    name: str = ""
    context: Any = None
    jacobian: Callable[[np.ndarray, float], np.ndarray] | None = None
    fd_step: float = 1e-4

    def __post_init__(self):
        if self.region_weight is not None:
            w = np.asarray(self.region_weight, dtype=np.float64)
            if w.shape != (self.dim,):
                raise ValueError(f"region_weight must have shape ({self.dim},), got {w.shape}")
            if w.min() < 0 or w.max() > 1:
                raise ValueError("region_weight entries must lie in [0, 1]")
            object.__setattr__(self, "region_weight", w)

    def velocity_jacobian(self, x: np.ndarray, time: float) -> np.ndarray:
        """Analytic Jacobian when available, else central finite differences."""
        if self.jacobian is not None:
            return np.asarray(self.jacobian(x, time), dtype=np.float64)
        h = self.fd_step
        x = np.asarray(x, dtype=np.float64)
        cols = []
        for k in range(self.dim):
            e = np.zeros(self.dim)
            e[k] = h
            cols.append((self.velocity(x + e, time) - self.velocity(x - e, time)) / (2 * h))
        return np.stack(cols, axis=-1)


def _check_spd(cov: np.ndarray, what: str) -> np.ndarray:
    cov = np.asarray(cov, dtype=np.float64)
    if cov.ndim == 0:
        cov = cov.reshape(1, 1)
    if cov.ndim != 2 or cov.shape[0] != cov.shape[1]:
        raise ValueError(f"{hint_name(what)} must be a square matrix, got shape {cov.shape}")
    if not np.allclose(cov, cov.T, atol=1e-10):
        raise ValueError(f"{hint_name(what)} must be symmetric")
    try:
        np.linalg.cholesky(cov)
    except np.linalg.LinAlgError:
        raise ValueError(f"{hint_name(what)} must be positive definite") from None
    return cov


def hint_name(what: str) -> str:
    return what or "covariance"


def _gaussian_affine(mu: np.ndarray, cov: np.ndarray, scheduler: Scheduler, time: float):
    """Velocity of the Gaussian-data path is affine: v(x) = A x + b."""
    d = mu.shape[0]
    a, s = scheduler.alpha(time), scheduler.sigma(time)
    ad, sd = scheduler.alpha_dot(time), scheduler.sigma_dot(time)
    marg_cov = a * a * cov + s * s * np.eye(d)
    inv = np.linalg.inv(marg_cov)
    A = (ad * a * cov + sd * s * np.eye(d)) @ inv
    b = ad * mu - A @ (a * mu)
    return A, b


def gaussian_flow_expert(
    mu: np.ndarray,
    cov: np.ndarray,
    scheduler: Scheduler = LINEAR_SCHEDULER,
    *,
    region_weight: np.ndarray | None = None,
    parents: tuple[str, ...] = (),
    name: str = "gaussian",
) -> FlowExpert:
    """Flow expert whose data distribution is N(mu, cov).

    The velocity is the exact marginal velocity of the interpolation path, so
    the expert behaves like a perfectly trained flow model for this target.
    """
    mu = np.atleast_1d(np.asarray(mu, dtype=np.float64))
    cov = _check_spd(cov, "cov")
    if cov.shape[0] != mu.shape[0]:
        raise ValueError(f"mu has dim {mu.shape[0]} but cov is {cov.shape}")
    d = mu.shape[0]

    def velocity(x: np.ndarray, time: float) -> np.ndarray:
        A, b = _gaussian_affine(mu, cov, scheduler, time)
        return np.asarray(x, dtype=np.float64) @ A.T + b

    def jacobian(x: np.ndarray, time: float) -> np.ndarray:
        A, _ = _gaussian_affine(mu, cov, scheduler, time)
        return A

    return FlowExpert(
        velocity=velocity,
        dim=d,
        region_weight=region_weight,
        parents=tuple(parents),
        name=name,
        context={"mu": mu, "cov": cov},
        jacobian=jacobian,
    )


def _mixture_parts(weights, mus, covs, scheduler, x, time):
    """Responsibilities, per-component velocities/scores of the diffused mixture."""
    x = np.atleast_2d(np.asarray(x, dtype=np.float64))
    d = x.shape[-1]
    a, s = scheduler.alpha(time), scheduler.sigma(time)
    log_resp = np.empty((x.shape[0], len(weights)))
    comp_v = np.empty((x.shape[0], len(weights), d))
    comp_s = np.empty((x.shape[0], len(weights), d))
    comp_A = []
    for k, (w, mu_k, cov_k) in enumerate(zip(weights, mus, covs)):
        m_k = a * mu_k
        C_k = a * a * cov_k + s * s * np.eye(d)
        inv = np.linalg.inv(C_k)
        diff = x - m_k
        _, logdet = np.linalg.slogdet(C_k)
        log_resp[:, k] = np.log(w) - 0.5 * (np.einsum("li,ij,lj->l", diff, inv, diff) + logdet)
        A_k, b_k = _gaussian_affine(mu_k, cov_k, scheduler, time)
        comp_A.append(A_k)
        comp_v[:, k, :] = x @ A_k.T + b_k
        comp_s[:, k, :] = -diff @ inv.T
    log_resp -= log_resp.max(axis=1, keepdims=True)
    resp = np.exp(log_resp)
    resp /= resp.sum(axis=1, keepdims=True)
    return resp, comp_v, comp_s, comp_A


def gmm_flow_expert(
    weights: np.ndarray,
    mus: list[np.ndarray],
    covs: list[np.ndarray],
    scheduler: Scheduler = LINEAR_SCHEDULER,
    *,
    region_weight: np.ndarray | None = None,
    parents: tuple[str, ...] = (),
    name: str = "gmm",
) -> FlowExpert:
    """Flow expert whose data distribution is a Gaussian mixture.

    The velocity is the responsibility-weighted combination of the component
    velocities, which is the exact marginal velocity of the mixture path.
    """
    weights = np.asarray(weights, dtype=np.float64)
    if weights.ndim != 1 or np.any(weights < 0) or abs(weights.sum() - 1.0) > 1e-9:
        raise ValueError("mixture weights must be a probability vector")
    mus = [np.atleast_1d(np.asarray(m, dtype=np.float64)) for m in mus]
    covs = [_check_spd(c, f"covs[{k}]") for k, c in enumerate(covs)]
    if not (len(weights) == len(mus) == len(covs)):
        raise ValueError("weights, mus, covs must have matching lengths")
    d = mus[0].shape[0]
    for k, (m, c) in enumerate(zip(mus, covs)):
        if m.shape[0] != d or c.shape[0] != d:
            raise ValueError(f"component {k} has inconsistent dimension")

    def velocity(x: np.ndarray, time: float) -> np.ndarray:
        flat = np.asarray(x, dtype=np.float64)
        resp, comp_v, _, _ = _mixture_parts(weights, mus, covs, scheduler, flat, time)
        v = np.einsum("lk,lkd->ld", resp, comp_v)
        return v.reshape(np.shape(flat))

    def jacobian(x: np.ndarray, time: float) -> np.ndarray:
        flat = np.atleast_2d(np.asarray(x, dtype=np.float64))
        resp, comp_v, comp_s, comp_A = _mixture_parts(weights, mus, covs, scheduler, flat, time)
        vbar = np.einsum("lk,lkd->ld", resp, comp_v)
        sbar = np.einsum("lk,lkd->ld", resp, comp_s)
        J = np.einsum("lk,kij->lij", resp, np.stack(comp_A))
        J += np.einsum("lk,lki,lkj->lij", resp, comp_v - vbar[:, None, :], comp_s - sbar[:, None, :])
        if np.asarray(x).ndim == 1:
            return J[0]
        return J

    return FlowExpert(
        velocity=velocity,
        dim=d,
        region_weight=region_weight,
        parents=tuple(parents),
        name=name,
        context={"weights": weights, "mus": mus, "covs": covs},
        jacobian=jacobian,
    )


def velocity_field_expert(
    fn: Callable[[np.ndarray, float], np.ndarray],
    dim: int,
    *,
    region_weight: np.ndarray | None = None,
    parents: tuple[str, ...] = (),
    name: str = "blackbox",
    jacobian: Callable[[np.ndarray, float], np.ndarray] | None = None,
    fd_step: float = 1e-4,
) -> FlowExpert:
    """Wrap an arbitrary velocity callable as a flow expert.

    Without an analytic ``jacobian`` the conditional-correction machinery
    falls back to central finite differences with step ``fd_step``.
    """
    return FlowExpert(
        velocity=fn,
        dim=dim,
        region_weight=region_weight,
        parents=tuple(parents),
        name=name,
        jacobian=jacobian,
        fd_step=fd_step,
    )


# ---------------------------------------------------------------------------
# Autoregressive experts
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class ARExpert:
    """Tabular autoregressive expert over sequences of slices.

    A slice takes one of ``alphabet ** slice_shape`` joint values, encoded
    row-major over its symbols.  ``tables[u]`` holds the conditional
    distribution of slice ``u`` given the encoded prefix, with shape
    ``(values ** u, values)``.
    """

    num_slices: int
    alphabet: int
    slice_shape: int
    tables: tuple[np.ndarray, ...]
    name: str = ""
    full_table_available: bool = field(default=True)

    @property
    def slice_values(self) -> int:
        return self.alphabet**self.slice_shape

    def conditional(self, prefix_code: int, position: int) -> np.ndarray:
        """Distribution over the next slice value given the encoded prefix."""
        return self.tables[position][prefix_code]

    def encode_slice(self, symbols: np.ndarray) -> int:
        code = 0
        for sym in np.asarray(symbols).ravel():
            code = code * self.alphabet + int(sym)
        return code

    def decode_slice(self, code: int) -> np.ndarray:
        out = np.zeros(self.slice_shape, dtype=np.int64)
        for i in range(self.slice_shape - 1, -1, -1):
            out[i] = code % self.alphabet
            code //= self.alphabet
        return out


def tabular_ar_expert(
    num_slices: int,
    alphabet: int,
    tables: list[np.ndarray],
    slice_shape: int = 1,
    name: str = "ar",
) -> ARExpert:
    """Validate conditional tables and build a tabular AR expert."""
    if num_slices < 1 or alphabet < 2 or slice_shape < 1:
        raise ValueError("need num_slices >= 1, alphabet >= 2, slice_shape >= 1")
    if len(tables) != num_slices:
        raise ValueError(f"expected {num_slices} tables, got {len(tables)}")
    values = alphabet**slice_shape
    checked = []
    for u, tab in enumerate(tables):
        tab = np.asarray(tab, dtype=np.float64)
        if tab.shape != (values**u, values):
            raise ValueError(f"tables[{u}] must have shape {(values**u, values)}, got {tab.shape}")
        if np.any(tab < 0):
            bad = int(np.argwhere(tab.min(axis=1) < 0)[0][0])
            raise ValueError(f"tables[{u}] has negative entries at prefix {bad}")
        sums = tab.sum(axis=1)
        if np.any(np.abs(sums - 1.0) > TABLE_TOL):
            bad = int(np.argmax(np.abs(sums - 1.0) > TABLE_TOL))
            raise ValueError(f"tables[{u}] row for prefix {bad} sums to {sums[bad]!r}, not 1")
        checked.append(tab)
    return ARExpert(
        num_slices=num_slices,
        alphabet=alphabet,
        slice_shape=slice_shape,
        tables=tuple(checked),
        name=name,
    )


def random_ar_tables(
    num_slices: int,
    alphabet: int,
    slice_shape: int = 1,
    seed: int = 0,
    sharpness: float = 0.3,
    coupling: float = 1.0,
) -> list[np.ndarray]:
    """Seeded random conditional tables.

    Rows are Dirichlet(sharpness) draws.  ``coupling`` blends each prefix-
    specific row toward a shared per-position base row; small values weaken
    the dependence on the prefix, which keeps Gibbs sweeps fast-mixing.
    """
    if not 0.0 <= coupling <= 1.0:
        raise ValueError("coupling must lie in [0, 1]")
    rng = np.random.default_rng(seed)
    values = alphabet**slice_shape
    tables = []
    for u in range(num_slices):
        base = rng.dirichlet(sharpness * np.ones(values))
        pert = rng.dirichlet(sharpness * np.ones(values), size=values**u)
        tables.append((1.0 - coupling) * base[None, :] + coupling * pert)
    return tables


# ---------------------------------------------------------------------------
# Reward experts
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class RewardExpert:
    """A scalar log-reward; the implied unnormalized density is exp(reward).

    ``log_reward(x)`` must accept states of shape ``(..., d)`` and return
    shape ``(...)``; -inf encodes a hard constraint violation.
    """

    log_reward: Callable[[np.ndarray], np.ndarray]
    name: str = "reward"

    def __call__(self, x: np.ndarray) -> np.ndarray:
        return np.asarray(self.log_reward(np.asarray(x, dtype=np.float64)), dtype=np.float64)


def linear_reward(a: np.ndarray, name: str = "linear") -> RewardExpert:
    """log-reward r(x) = a . x (exponential tilt)."""
    a = np.atleast_1d(np.asarray(a, dtype=np.float64))
    if not np.all(np.isfinite(a)):
        raise ValueError("linear reward coefficients must be finite")
    return RewardExpert(log_reward=lambda x: x @ a, name=name)


def quadratic_reward(A: np.ndarray, b: np.ndarray, name: str = "quadratic") -> RewardExpert:
    """log-reward r(x) = -x^T A x + b . x."""
    A = np.atleast_2d(np.asarray(A, dtype=np.float64))
    b = np.atleast_1d(np.asarray(b, dtype=np.float64))
    if not (np.all(np.isfinite(A)) and np.all(np.isfinite(b))):
        raise ValueError("quadratic reward parameters must be finite")

    def r(x: np.ndarray) -> np.ndarray:
        return -np.einsum("...i,ij,...j->...", x, A, x) + x @ b

    return RewardExpert(log_reward=r, name=name)


def region_indicator_reward(
    predicate: Callable[[np.ndarray], np.ndarray],
    sharpness: float,
    name: str = "indicator",
) -> RewardExpert:
    """log-reward r(x) = sharpness * 1[predicate(x)].

    The predicate must be vectorized over the leading axes.
    """
    if not np.isfinite(sharpness):
        raise ValueError("sharpness must be finite")

    def r(x: np.ndarray) -> np.ndarray:
        return sharpness * np.asarray(predicate(x), dtype=np.float64)

    return RewardExpert(log_reward=r, name=name)


def threshold_predicate(coord: int, op: str, value: float) -> Callable[[np.ndarray], np.ndarray]:
    """Coordinate-threshold predicate for config-declared indicator rewards."""
    ops = {
        ">": lambda c: c > value,
        ">=": lambda c: c >= value,
        "<": lambda c: c < value,
        "<=": lambda c: c <= value,
    }
    if op not in ops:
        raise ValueError(f"unknown comparison {op!r}; expected one of {sorted(ops)}")
    fn = ops[op]
    return lambda x: fn(np.asarray(x)[..., coord])
