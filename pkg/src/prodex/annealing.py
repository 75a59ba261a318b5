"""Stage driver for the annealed product of generative experts.

Each stage ``t`` (counting down from ``num_steps - 1`` to 1) first applies the
propagation kernel — an Euler step along the composed velocity for flows, a
slice append for AR products — and then ``mcmc_steps`` applications of the
stage-t MCMC kernel: unadjusted Langevin on the composed score, or Gibbs
sweeps.

Composition conventions: the Euler velocity is the convex combination of
expert velocities under normalized region weights, while the Langevin target
is the product of the stage marginals, whose score is the region-masked *sum*
of expert scores (masks default to all-ones).  For a partition of the state
the two coincide.

Stages where the score conversion is singular (``sigma_t = 0``, the data end
of the schedule) skip their MCMC applications: the marginal velocity carries
no score information there and the propagation step already lands on the
stage distribution.  Skipped stages consume no randomness.
"""

from __future__ import annotations

import time as _time
from dataclasses import dataclass

import numpy as np

from .ar import run_ar_stage_batch, stage_uniform_count
from .conditional import ConditioningGraph, apply_corrections
from .core import AnnealSchedule, ContinuousSample, DiscreteSample, Sample
from .experts import ARExpert, FlowExpert
from .flowmath import (
    composed_fields,
    langevin_update,
    normalized_region_weights,
    require_finite_array,
    score_from_velocity,
)


@dataclass
class StageTrace:
    """Diagnostics for one annealing stage of one chain."""

    step: int
    pre_mcmc: np.ndarray
    post_mcmc: np.ndarray
    score_norm: float
    wallclock: float
    mcmc_skipped: bool = False


def named_experts(experts: list[FlowExpert]) -> dict[str, FlowExpert]:
    out: dict[str, FlowExpert] = {}
    for i, e in enumerate(experts):
        name = e.name or f"expert{i}"
        if name in out:
            raise ValueError(f"duplicate expert name {name!r}")
        out[name] = e
    return out


def _composition_weights(experts: dict[str, FlowExpert]) -> tuple[list[np.ndarray], list[np.ndarray]]:
    """(convex velocity weights, raw score masks) in expert order."""
    dims = {e.dim for e in experts.values()}
    if len(dims) != 1:
        raise ValueError(f"flow experts must share the state dimension, got {sorted(dims)}")
    dim = dims.pop()
    masks = [e.region_weight for e in experts.values()]
    velocity_weights = normalized_region_weights(masks, dim)
    score_masks = [np.ones(dim) if m is None else np.asarray(m, dtype=np.float64) for m in masks]
    return velocity_weights, score_masks


def corrected_velocities(
    X: np.ndarray,
    time: float,
    experts: dict[str, FlowExpert],
    graph: ConditioningGraph,
) -> dict[str, np.ndarray]:
    vels = {name: e.velocity(X, time) for name, e in experts.items()}
    return apply_corrections(vels, X, time, experts, graph)


def composed_velocity_batch(
    X: np.ndarray,
    t: int,
    experts: dict[str, FlowExpert],
    graph: ConditioningGraph,
    sched: AnnealSchedule,
) -> np.ndarray:
    """Convex-composed, conditionally corrected velocity at stage t."""
    weights, _ = _composition_weights(experts)
    vels = corrected_velocities(X, float(sched.times[t]), experts, graph)
    return composed_fields(list(vels.values()), weights)


def flow_stage_batch(
    X: np.ndarray,
    t: int,
    experts: dict[str, FlowExpert],
    graph: ConditioningGraph,
    sched: AnnealSchedule,
    noise: np.ndarray | None,
) -> tuple[np.ndarray, float, bool]:
    """One annealing stage over a particle batch.

    ``noise`` holds the pre-drawn Langevin normals, shape (L, mcmc_steps, d);
    pass None when the stage skips MCMC.  Returns (states, last score norm,
    mcmc_skipped).
    """
    velocity_weights, score_masks = _composition_weights(experts)
    tau_prev = float(sched.times[t + 1])
    vels = corrected_velocities(X, tau_prev, experts, graph)
    v = composed_fields(list(vels.values()), velocity_weights)
    X = require_finite_array(X + v * sched.delta(t), f"euler step into stage {t}")

    skip = sched.mcmc_steps == 0 or sched.score_singular(t)
    score_norm = 0.0
    if not skip:
        tau = float(sched.times[t])
        step = float(sched.step_sizes[t])
        for k in range(sched.mcmc_steps):
            vels = corrected_velocities(X, tau, experts, graph)
            scores = [score_from_velocity(v_i, X, sched, t) for v_i in vels.values()]
            s = sum(m * sc for m, sc in zip(score_masks, scores))
            X = require_finite_array(
                langevin_update(X, s, step, noise[:, k, :]), f"langevin step at stage {t}"
            )
        score_norm = float(np.mean(np.linalg.norm(s, axis=-1)))
    return X, score_norm, skip


def flow_stage_noise(
    gens: list[np.random.Generator], sched: AnnealSchedule, t: int, dim: int
) -> np.ndarray | None:
    """Per-particle Langevin noise block for stage t (None when skipped).

    Each particle's stream contributes an (mcmc_steps, dim) block, identical
    to drawing mcmc_steps vectors of dim normals one Langevin step at a time.
    """
    if sched.mcmc_steps == 0 or sched.score_singular(t):
        return None
    out = np.empty((len(gens), sched.mcmc_steps, dim))
    for i, g in enumerate(gens):
        out[i] = g.standard_normal((sched.mcmc_steps, dim))
    return out


def ar_stage_noise(
    gens: list[np.random.Generator], sched: AnnealSchedule, filled_after: int
) -> np.ndarray:
    count = stage_uniform_count(sched.mcmc_steps, filled_after)
    out = np.empty((len(gens), count))
    for i, g in enumerate(gens):
        out[i] = g.random(count)
    return out


# ---------------------------------------------------------------------------
# Single-chain API
# ---------------------------------------------------------------------------

def run_stage(
    x: Sample,
    t: int,
    experts: list[FlowExpert] | list[ARExpert],
    graph: ConditioningGraph,
    sched: AnnealSchedule,
    rng: np.random.Generator,
) -> tuple[Sample, StageTrace]:
    """Propagation kernel into stage t followed by the stage's MCMC steps."""
    if not 1 <= t <= sched.num_steps - 1:
        raise ValueError(f"stage t must lie in [1, {sched.num_steps - 1}], got {t}")
    started = _time.perf_counter()
    if isinstance(x, ContinuousSample):
        named = named_experts(experts)
        X = x.data[None, :]
        pre = x.data.copy()
        noise = flow_stage_noise([rng], sched, t, x.dim)
        X, score_norm, skipped = flow_stage_batch(X, t, named, graph, sched, noise)
        out: Sample = ContinuousSample(X[0], regions=x.regions)
        post = out.data.copy()
    elif isinstance(x, DiscreteSample):
        from .ar import check_shared_geometry, _to_codes, _from_codes

        geom = check_shared_geometry(experts)
        filled_after = sched.num_steps - t
        if x.filled != filled_after - 1:
            raise ValueError(
                f"discrete sample has {x.filled} committed slices; stage {t} expects {filled_after - 1}"
            )
        seqs = _to_codes(x, geom)
        pre = seqs[0].copy()
        blocks = ar_stage_noise([rng], sched, filled_after)
        run_ar_stage_batch(seqs, experts, filled_after, sched.mcmc_steps, blocks)
        out = _from_codes(seqs, filled_after, geom)
        post = seqs[0].copy()
        score_norm, skipped = 0.0, sched.mcmc_steps == 0
    else:
        raise TypeError(f"unsupported sample type {type(x).__name__}")
    trace = StageTrace(
        step=t,
        pre_mcmc=pre,
        post_mcmc=post,
        score_norm=score_norm,
        wallclock=_time.perf_counter() - started,
        mcmc_skipped=skipped,
    )
    return out, trace


def run_chain(
    x0: Sample,
    experts: list[FlowExpert] | list[ARExpert],
    graph: ConditioningGraph,
    sched: AnnealSchedule,
    rng: np.random.Generator,
) -> tuple[Sample, list[StageTrace]]:
    """Sequential composition of all stages from num_steps - 1 down to 1."""
    x = x0
    traces = []
    for t in range(sched.num_steps - 1, 0, -1):
        x, trace = run_stage(x, t, experts, graph, sched, rng)
        traces.append(trace)
    return x, traces
