"""Autoregressive instantiation of the annealed product.

The annealed intermediates of an AR expert are its prefix joints: at stage t
of a schedule with ``num_steps = num_slices + 1`` stages, ``num_steps - t``
slices are committed.  The propagation kernel appends the next slice from the
normalized elementwise product of all experts' conditionals; the MCMC kernel
is a Gibbs sweep whose site conditionals are exact under the product of
prefix joints (each candidate value is scored by every expert's conditional
factors at that site and every later committed site).

Sequences are manipulated as arrays of slice-value codes (one integer per
slice, base ``alphabet ** slice_shape``) so the kernels vectorize over many
chains; the single-sample kernels wrap the batch of one.

Stream protocol: one append consumes 1 uniform; one Gibbs sweep over f filled
slices consumes f uniforms (plus f more for the site permutation when
``sweep_order="random"``).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .core import DiscreteSample
from .errors import CapacityError, DegenerateProductError, IncompatibleExpertsError
from .experts import ARExpert
from .oracle import TableDensity

ENUMERATION_CAP = 10**7


@dataclass
class PrefixState:
    """A partially committed sequence at an annealing stage."""

    sample: DiscreteSample
    step: int


def check_shared_geometry(experts: list[ARExpert]) -> ARExpert:
    if not experts:
        raise ValueError("need at least one AR expert")
    first = experts[0]
    for e in experts[1:]:
        if (e.num_slices, e.alphabet, e.slice_shape) != (
            first.num_slices,
            first.alphabet,
            first.slice_shape,
        ):
            raise ValueError(
                "AR experts in a product must share slice geometry; got "
                f"({first.num_slices},{first.alphabet},{first.slice_shape}) vs "
                f"({e.num_slices},{e.alphabet},{e.slice_shape})"
            )
    return first


# ---------------------------------------------------------------------------
# Code-level batch kernels
# ---------------------------------------------------------------------------

def prefix_codes(seqs: np.ndarray, upto: int, values: int) -> np.ndarray:
    """Base-``values`` encoding of the first ``upto`` slice codes per chain."""
    codes = np.zeros(seqs.shape[0], dtype=np.int64)
    for u in range(upto):
        codes = codes * values + seqs[:, u]
    return codes


def product_conditional(experts: list[ARExpert], codes: np.ndarray, position: int) -> np.ndarray:
    """Normalized elementwise product of expert conditionals, batched.

    Raises IncompatibleExpertsError when the product row is identically zero
    for some chain, naming the offending prefix code.
    """
    q = np.ones((codes.shape[0], experts[0].slice_values))
    for e in experts:
        q = q * e.tables[position][codes]
    totals = q.sum(axis=1)
    if np.any(totals <= 0.0):
        bad = int(np.argmax(totals <= 0.0))
        raise IncompatibleExpertsError(
            f"expert conditionals have empty product support at position {position}, "
            f"prefix code {int(codes[bad])}"
        )
    return q / totals[:, None]


def _sample_rows(probs: np.ndarray, uniforms: np.ndarray) -> np.ndarray:
    """Inverse-CDF draw per row from normalized probability rows."""
    cdf = np.cumsum(probs, axis=1)
    cdf[:, -1] = 1.0
    return np.argmax(cdf > uniforms[:, None], axis=1)


def append_batch(
    seqs: np.ndarray,
    experts: list[ARExpert],
    filled: int,
    uniforms: np.ndarray,
    map_mode: bool = False,
) -> None:
    """Append slice ``filled`` in place, drawn from the product conditional.

    ``map_mode`` takes the argmax of the product conditional instead of
    sampling (ties broken toward the lowest code); the uniform is still
    consumed so the stream layout does not depend on the mode.
    """
    values = experts[0].slice_values
    codes = prefix_codes(seqs, filled, values)
    q = product_conditional(experts, codes, filled)
    if map_mode:
        seqs[:, filled] = np.argmax(q, axis=1)
    else:
        seqs[:, filled] = _sample_rows(q, uniforms)


def gibbs_sweep_batch(
    seqs: np.ndarray,
    experts: list[ARExpert],
    filled: int,
    uniforms: np.ndarray,
    positions: np.ndarray | None = None,
) -> None:
    """One Gibbs sweep in place over the committed slices of every chain.

    Site conditionals are exact for the product of prefix joints: candidate
    values at site j are weighted by all expert factors at positions j..f-1.
    ``uniforms`` supplies one draw per site in sweep order.
    """
    values = experts[0].slice_values
    n = seqs.shape[0]
    if positions is None:
        positions = np.arange(filled)
    for k, j in enumerate(positions):
        j = int(j)
        base = prefix_codes(seqs, j, values)
        weights = np.empty((n, values))
        for cand in range(values):
            w = np.ones(n)
            code = base.copy()
            for u in range(j, filled):
                v_u = np.full(n, cand, dtype=np.int64) if u == j else seqs[:, u]
                for e in experts:
                    w = w * e.tables[u][code, v_u]
                code = code * values + v_u
            weights[:, cand] = w
        totals = weights.sum(axis=1)
        if np.any(totals <= 0.0):
            bad = int(np.argmax(totals <= 0.0))
            raise IncompatibleExpertsError(
                f"all-zero Gibbs conditional at site {j} for prefix code {int(base[bad])}"
            )
        weights /= totals[:, None]
        seqs[:, j] = _sample_rows(weights, uniforms[:, k])


def stage_uniform_count(mcmc_steps: int, filled: int) -> int:
    """Uniform draws one chain consumes at a stage with ``filled`` slices."""
    return 1 + mcmc_steps * filled


def run_ar_stage_batch(
    seqs: np.ndarray,
    experts: list[ARExpert],
    filled_after: int,
    mcmc_steps: int,
    blocks: np.ndarray,
    orders: list[np.ndarray] | None = None,
    map_mode: bool = False,
) -> None:
    """Append then ``mcmc_steps`` Gibbs sweeps, consuming per-chain blocks.

    ``blocks`` has shape (chains, stage_uniform_count(mcmc_steps, filled_after)).
    ``orders`` gives the site order per sweep (sequential when omitted); in
    batched runs a random order is shared across chains and drawn from the
    population stream by the caller.
    """
    f = filled_after
    append_batch(seqs, experts, f - 1, blocks[:, 0], map_mode=map_mode)
    cursor = 1
    for k in range(mcmc_steps):
        order = np.arange(f) if orders is None else orders[k]
        gibbs_sweep_batch(seqs, experts, f, blocks[:, cursor : cursor + f], positions=order)
        cursor += f


def greedy_completion(seqs: np.ndarray, experts: list[ARExpert], filled: int) -> np.ndarray:
    """Complete sequences by argmax of the product conditional at each slice.

    This is the discrete analogue of endpoint prediction used for
    intermediate rewards; ties break toward the lowest slice code.
    """
    out = seqs.copy()
    values = experts[0].slice_values
    num_slices = experts[0].num_slices
    for u in range(filled, num_slices):
        codes = prefix_codes(out, u, values)
        q = product_conditional(experts, codes, u)
        out[:, u] = np.argmax(q, axis=1)
    return out


# ---------------------------------------------------------------------------
# Sample-level kernels
# ---------------------------------------------------------------------------

def _to_codes(sample: DiscreteSample, expert: ARExpert) -> np.ndarray:
    seq = np.zeros((1, sample.num_slices), dtype=np.int64)
    for u in range(sample.filled):
        seq[0, u] = expert.encode_slice(sample.slices[u])
    return seq


def _from_codes(seqs: np.ndarray, filled: int, expert: ARExpert) -> DiscreteSample:
    slices = np.zeros((expert.num_slices, expert.slice_shape), dtype=np.int64)
    for u in range(filled):
        slices[u] = expert.decode_slice(int(seqs[0, u]))
    return DiscreteSample(slices, filled=filled, alphabet=expert.alphabet)


def append_kernel(
    state: PrefixState,
    experts: list[ARExpert],
    rng: np.random.Generator,
    map_mode: bool = False,
) -> PrefixState:
    """Draw the next slice from the product of expert conditionals."""
    geom = check_shared_geometry(experts)
    f = state.sample.filled
    if f >= geom.num_slices:
        raise ValueError("sequence is already complete")
    seqs = _to_codes(state.sample, geom)
    append_batch(seqs, experts, f, rng.random(1), map_mode=map_mode)
    return PrefixState(sample=_from_codes(seqs, f + 1, geom), step=state.step - 1)


def gibbs_kernel(
    state: PrefixState,
    experts: list[ARExpert],
    sweep_order: str = "sequential",
    rng: np.random.Generator | None = None,
) -> PrefixState:
    """One full Gibbs sweep over the committed slices."""
    geom = check_shared_geometry(experts)
    f = state.sample.filled
    if f < 1:
        raise ValueError("need at least one committed slice to sweep")
    if rng is None:
        raise ValueError("rng is required")
    seqs = _to_codes(state.sample, geom)
    if sweep_order == "random":
        order = np.argsort(rng.random(f))
    elif sweep_order == "sequential":
        order = np.arange(f)
    else:
        raise ValueError(f"unknown sweep_order {sweep_order!r}")
    gibbs_sweep_batch(seqs, experts, f, rng.random(f).reshape(1, f), positions=order)
    return PrefixState(sample=_from_codes(seqs, f, geom), step=state.step)


def expert_joint(expert: ARExpert) -> np.ndarray:
    """Exact joint over all full sequences by the chain rule."""
    states = expert.slice_values**expert.num_slices
    if states > ENUMERATION_CAP:
        raise CapacityError(f"state space of size {states} exceeds enumeration cap {ENUMERATION_CAP}")
    p = np.ones(1)
    for u in range(expert.num_slices):
        p = (p[:, None] * expert.tables[u]).reshape(-1)
    return p


def exact_product_enumeration(experts: list[ARExpert]) -> TableDensity:
    """Normalized product distribution over all full sequences."""
    geom = check_shared_geometry(experts)
    states = geom.slice_values**geom.num_slices
    if states > ENUMERATION_CAP:
        raise CapacityError(f"state space of size {states} exceeds enumeration cap {ENUMERATION_CAP}")
    p = np.ones(states)
    for e in experts:
        p = p * expert_joint(e)
    total = p.sum()
    if total <= 0:
        raise DegenerateProductError("product of AR experts has zero mass everywhere")
    return TableDensity(p / total)


def sequence_codes(seqs: np.ndarray, values: int) -> np.ndarray:
    """Full-sequence state index for comparing against enumeration tables."""
    return prefix_codes(seqs, seqs.shape[1], values)
