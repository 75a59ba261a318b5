"""Independent ground truth for verification: closed-form products, grid
quadrature, rejection sampling, and total-variation distances.

Nothing here shares numerical kernels with the sampler modules; densities go
through scipy.stats and plain quadrature so that agreement between sampler and
oracle is evidence, not tautology.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np
from scipy import stats

from .core import Scheduler
from .errors import DegenerateProductError, EnvelopeError


# ---------------------------------------------------------------------------
# Exact densities
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class GaussianDensity:
    mean_vec: np.ndarray
    cov: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "mean_vec", np.atleast_1d(np.asarray(self.mean_vec, dtype=np.float64)))
        c = np.atleast_2d(np.asarray(self.cov, dtype=np.float64))
        object.__setattr__(self, "cov", c)

    @property
    def dim(self) -> int:
        return self.mean_vec.shape[0]

    def logpdf(self, x: np.ndarray) -> np.ndarray:
        return stats.multivariate_normal(self.mean_vec, self.cov).logpdf(np.asarray(x))

    def pdf(self, x: np.ndarray) -> np.ndarray:
        return np.exp(self.logpdf(x))

    def score(self, x: np.ndarray) -> np.ndarray:
        inv = np.linalg.inv(self.cov)
        return -(np.asarray(x, dtype=np.float64) - self.mean_vec) @ inv.T

    def sample(self, n: int, rng: np.random.Generator) -> np.ndarray:
        return rng.multivariate_normal(self.mean_vec, self.cov, size=n)

    def mean(self) -> np.ndarray:
        return self.mean_vec

    def covariance(self) -> np.ndarray:
        return self.cov


@dataclass(frozen=True)
class MixtureDensity:
    weights: np.ndarray
    components: tuple[GaussianDensity, ...]

    def __post_init__(self):
        object.__setattr__(self, "weights", np.asarray(self.weights, dtype=np.float64))
        object.__setattr__(self, "components", tuple(self.components))

    @property
    def dim(self) -> int:
        return self.components[0].dim

    def logpdf(self, x: np.ndarray) -> np.ndarray:
        parts = np.stack([np.log(w) + c.logpdf(x) for w, c in zip(self.weights, self.components)])
        m = parts.max(axis=0)
        return m + np.log(np.exp(parts - m).sum(axis=0))

    def pdf(self, x: np.ndarray) -> np.ndarray:
        return np.exp(self.logpdf(x))

    def score(self, x: np.ndarray) -> np.ndarray:
        x = np.asarray(x, dtype=np.float64)
        logs = np.stack([np.log(w) + c.logpdf(x) for w, c in zip(self.weights, self.components)])
        logs -= logs.max(axis=0)
        resp = np.exp(logs)
        resp /= resp.sum(axis=0)
        comp_scores = np.stack([c.score(x) for c in self.components])
        return np.einsum("k...,k...d->...d", resp, comp_scores)

    def sample(self, n: int, rng: np.random.Generator) -> np.ndarray:
        counts = rng.multinomial(n, self.weights)
        parts = [c.sample(k, rng) for c, k in zip(self.components, counts) if k > 0]
        out = np.concatenate(parts, axis=0)
        return out[rng.permutation(n)]

    def mean(self) -> np.ndarray:
        return np.einsum("k,kd->d", self.weights, np.stack([c.mean() for c in self.components]))


@dataclass(frozen=True)
class GridDensity:
    """Normalized density tabulated on a rectangular 1D or 2D grid."""

    axes: tuple[np.ndarray, ...]
    values: np.ndarray
    normalizer: float

    @property
    def dim(self) -> int:
        return len(self.axes)

    def pdf_on_grid(self) -> np.ndarray:
        return self.values

    def mean(self) -> np.ndarray:
        if self.dim == 1:
            x = self.axes[0]
            return np.array([np.trapezoid(x * self.values, x)])
        gx, gy = np.meshgrid(*self.axes, indexing="ij")
        mx = np.trapezoid(np.trapezoid(gx * self.values, self.axes[1], axis=1), self.axes[0])
        my = np.trapezoid(np.trapezoid(gy * self.values, self.axes[1], axis=1), self.axes[0])
        return np.array([mx, my])

    def variance(self) -> float:
        if self.dim != 1:
            raise ValueError("variance is defined for 1D grids; use moments per axis in 2D")
        x = self.axes[0]
        m = self.mean()[0]
        return float(np.trapezoid((x - m) ** 2 * self.values, x))

    def mass(self, lo: float, hi: float) -> float:
        """Probability mass on [lo, hi] (1D)."""
        if self.dim != 1:
            raise ValueError("interval mass is defined for 1D grids")
        x = self.axes[0]
        inside = (x >= lo) & (x <= hi)
        if inside.sum() < 2:
            return 0.0
        return float(np.trapezoid(self.values[inside], x[inside]))

    def cdf_inverse(self, q: np.ndarray) -> np.ndarray:
        """Quantiles by linear interpolation of the trapezoid CDF (1D)."""
        if self.dim != 1:
            raise ValueError("quantiles are defined for 1D grids")
        x = self.axes[0]
        cdf = np.concatenate([[0.0], np.cumsum(0.5 * (self.values[1:] + self.values[:-1]) * np.diff(x))])
        cdf /= cdf[-1]
        return np.interp(q, cdf, x)

    def sample(self, n: int, rng: np.random.Generator) -> np.ndarray:
        if self.dim != 1:
            raise ValueError("grid sampling is implemented for 1D grids")
        return self.cdf_inverse(rng.random(n))[:, None]

    def to_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh)
            if self.dim == 1:
                writer.writerow(["x", "density"])
                for xv, dv in zip(self.axes[0], self.values):
                    writer.writerow([repr(float(xv)), repr(float(dv))])
            else:
                writer.writerow(["x", "y", "density"])
                for i, xv in enumerate(self.axes[0]):
                    for j, yv in enumerate(self.axes[1]):
                        writer.writerow([repr(float(xv)), repr(float(yv)), repr(float(self.values[i, j]))])


@dataclass(frozen=True)
class TableDensity:
    """Probability table over an enumerated finite state space."""

    probs: np.ndarray

    def __post_init__(self):
        p = np.asarray(self.probs, dtype=np.float64)
        if np.any(p < 0) or abs(p.sum() - 1.0) > 1e-9:
            raise ValueError("table must be nonnegative and sum to 1")
        object.__setattr__(self, "probs", p)

    def sample(self, n: int, rng: np.random.Generator) -> np.ndarray:
        return rng.choice(self.probs.shape[0], size=n, p=self.probs)


# ---------------------------------------------------------------------------
# Products
# ---------------------------------------------------------------------------

def gaussian_product(factors: Sequence[tuple[np.ndarray, np.ndarray]]) -> GaussianDensity:
    """Product of Gaussian densities via precision addition."""
    if not factors:
        raise ValueError("need at least one Gaussian factor")
    precision = None
    shift = None
    for mu, cov in factors:
        mu = np.atleast_1d(np.asarray(mu, dtype=np.float64))
        cov = np.atleast_2d(np.asarray(cov, dtype=np.float64))
        try:
            np.linalg.cholesky(cov)
        except np.linalg.LinAlgError:
            raise ValueError("all factor covariances must be positive definite") from None
        inv = np.linalg.inv(cov)
        precision = inv if precision is None else precision + inv
        term = inv @ mu
        shift = term if shift is None else shift + term
    cov_out = np.linalg.inv(precision)
    return GaussianDensity(cov_out @ shift, cov_out)


def gaussian_path_marginal(
    mu: np.ndarray, cov: np.ndarray, scheduler: Scheduler, time: float
) -> GaussianDensity:
    """Marginal of the interpolation path for Gaussian data at a remapped time."""
    mu = np.atleast_1d(np.asarray(mu, dtype=np.float64))
    cov = np.atleast_2d(np.asarray(cov, dtype=np.float64))
    a, s = scheduler.alpha(time), scheduler.sigma(time)
    return GaussianDensity(a * mu, a * a * cov + s * s * np.eye(mu.shape[0]))


def mixture_path_marginal(
    weights: np.ndarray,
    mus: Sequence[np.ndarray],
    covs: Sequence[np.ndarray],
    scheduler: Scheduler,
    time: float,
) -> MixtureDensity:
    comps = tuple(gaussian_path_marginal(m, c, scheduler, time) for m, c in zip(mus, covs))
    return MixtureDensity(np.asarray(weights, dtype=np.float64), comps)


def grid_product(
    densities: Sequence[Callable[[np.ndarray], np.ndarray]],
    axes: Sequence[np.ndarray],
) -> GridDensity:
    """Pointwise product of density callables, renormalized by the trapezoid rule.

    ``axes`` defines a rectangular 1D or 2D grid with at least 512 points per
    dimension; callables receive points of shape (n, dim).
    """
    axes = tuple(np.asarray(a, dtype=np.float64) for a in axes)
    if len(axes) not in (1, 2):
        raise ValueError("grid products support 1D and 2D supports only")
    for a in axes:
        if a.ndim != 1 or a.shape[0] < 512:
            raise ValueError("each grid axis needs at least 512 points")
    if len(axes) == 1:
        pts = axes[0][:, None]
        vals = np.ones(axes[0].shape[0])
        for f in densities:
            vals = vals * np.asarray(f(pts), dtype=np.float64).reshape(vals.shape)
        norm = float(np.trapezoid(vals, axes[0]))
        if norm <= 0:
            raise DegenerateProductError("pointwise product has zero mass on the grid")
        return GridDensity(axes, vals / norm, normalizer=norm)
    gx, gy = np.meshgrid(*axes, indexing="ij")
    pts = np.stack([gx.ravel(), gy.ravel()], axis=1)
    vals = np.ones(pts.shape[0])
    for f in densities:
        vals = vals * np.asarray(f(pts), dtype=np.float64).reshape(vals.shape)
    vals = vals.reshape(gx.shape)
    norm = float(np.trapezoid(np.trapezoid(vals, axes[1], axis=1), axes[0]))
    if norm <= 0:
        raise DegenerateProductError("pointwise product has zero mass on the grid")
    return GridDensity(axes, vals / norm, normalizer=norm)


# ---------------------------------------------------------------------------
# Rejection sampling
# ---------------------------------------------------------------------------

def rejection_sample(
    target: Callable[[np.ndarray], np.ndarray],
    proposal,
    envelope: float,
    n: int,
    rng: np.random.Generator,
    probe: np.ndarray | None = None,
) -> tuple[np.ndarray, float]:
    """Exact samples from an unnormalized target by rejection.

    ``proposal`` must expose ``sample(n, rng)`` and ``pdf(x)``.  The envelope
    condition ``target <= envelope * proposal.pdf`` is verified on ``probe``
    points before sampling.

    Returns (samples, acceptance_rate).
    """
    if probe is not None:
        ratio = np.asarray(target(probe), dtype=np.float64) / (envelope * np.asarray(proposal.pdf(probe)))
        worst = float(np.nanmax(ratio))
        if worst > 1.0 + 1e-9:
            raise EnvelopeError(f"envelope violated on probe grid: max target/(M*proposal) = {worst:.6f}")
    accepted: list[np.ndarray] = []
    drawn = 0
    while sum(a.shape[0] for a in accepted) < n:
        batch = max(n, 1024)
        x = np.asarray(proposal.sample(batch, rng), dtype=np.float64)
        if x.ndim == 1:
            x = x[:, None]
        u = rng.random(batch)
        ratio = np.asarray(target(x), dtype=np.float64) / (envelope * np.asarray(proposal.pdf(x)))
        keep = u < ratio
        accepted.append(x[keep])
        drawn += batch
    out = np.concatenate(accepted, axis=0)[:n]
    total_accepted = sum(a.shape[0] for a in accepted)
    return out, total_accepted / drawn


# ---------------------------------------------------------------------------
# Distances
# ---------------------------------------------------------------------------

def tv_distance_tables(p: np.ndarray, q: np.ndarray) -> float:
    """Half L1 distance between two probability tables."""
    p = np.asarray(p, dtype=np.float64)
    q = np.asarray(q, dtype=np.float64)
    if p.shape != q.shape:
        raise ValueError(f"tables must share a state space, got {p.shape} vs {q.shape}")
    return float(0.5 * np.abs(p - q).sum())


def tv_distance_continuous(
    samples: np.ndarray,
    exact,
    bins: int = 64,
) -> float:
    """TV between 1D samples and an exact density using equal-mass bins.

    Bin edges are the exact density's quantiles, so every bin carries mass
    1/bins under the truth and tails contribute stably.
    """
    x = np.asarray(samples, dtype=np.float64).ravel()
    qs = np.linspace(0.0, 1.0, bins + 1)
    if isinstance(exact, GaussianDensity):
        if exact.dim != 1:
            raise ValueError("binned TV is defined for 1D densities")
        edges = stats.norm.ppf(qs, loc=exact.mean_vec[0], scale=np.sqrt(exact.cov[0, 0]))
    elif isinstance(exact, GridDensity):
        edges = exact.cdf_inverse(qs)
    elif isinstance(exact, MixtureDensity):
        grid = _mixture_grid(exact)
        edges = grid.cdf_inverse(qs)
    else:
        raise TypeError(f"unsupported exact density {type(exact).__name__}")
    edges[0], edges[-1] = -np.inf, np.inf
    counts, _ = np.histogram(x, bins=edges)
    emp = counts / x.shape[0]
    return float(0.5 * np.abs(emp - 1.0 / bins).sum())


def _mixture_grid(mix: MixtureDensity, points: int = 4096) -> GridDensity:
    lo = min(c.mean_vec[0] - 8 * np.sqrt(c.cov[0, 0]) for c in mix.components)
    hi = max(c.mean_vec[0] + 8 * np.sqrt(c.cov[0, 0]) for c in mix.components)
    axis = np.linspace(lo, hi, points)
    vals = mix.pdf(axis[:, None])
    norm = float(np.trapezoid(vals, axis))
    return GridDensity((axis,), vals / norm, normalizer=norm)


def tv_distance(empirical, exact, bins: int = 64) -> float:
    """Dispatching TV distance.

    - table vs table: half L1 over states;
    - integer samples vs TableDensity: empirical frequencies vs table;
    - real samples vs 1D density: equal-mass binning.
    """
    if isinstance(exact, TableDensity):
        emp = np.asarray(empirical)
        if emp.dtype.kind in "iu" or emp.ndim == 1 and emp.dtype.kind in "iu":
            freq = np.bincount(emp.astype(np.int64), minlength=exact.probs.shape[0]) / emp.shape[0]
            return tv_distance_tables(freq, exact.probs)
        return tv_distance_tables(np.asarray(empirical, dtype=np.float64), exact.probs)
    return tv_distance_continuous(np.asarray(empirical, dtype=np.float64), exact, bins=bins)


def density_tv(d1, d2, axes: Sequence[np.ndarray]) -> float:
    """TV between two densities by quadrature on a shared grid."""
    axes = tuple(np.asarray(a, dtype=np.float64) for a in axes)
    if len(axes) == 1:
        pts = axes[0][:, None]
        diff = np.abs(np.asarray(d1.pdf(pts)).ravel() - np.asarray(d2.pdf(pts)).ravel())
        return float(0.5 * np.trapezoid(diff, axes[0]))
    gx, gy = np.meshgrid(*axes, indexing="ij")
    pts = np.stack([gx.ravel(), gy.ravel()], axis=1)
    diff = np.abs(np.asarray(d1.pdf(pts)) - np.asarray(d2.pdf(pts))).reshape(gx.shape)
    return float(0.5 * np.trapezoid(np.trapezoid(diff, axes[1], axis=1), axes[0]))
