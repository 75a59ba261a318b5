"""Closed-form flow kernels: score conversion, field composition, endpoint
prediction, and the Euler / Langevin updates.

All functions operate on arrays whose last axis is the state dimension, so the
same code path serves one sample (shape ``(d,)``) and a particle batch
(shape ``(L, d)``).  The wrapper ops at the bottom carry the step index along
with the evaluated vectors.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .core import AnnealSchedule, ContinuousSample, require_nonsingular
from .errors import CompositionError, NumericalError

WEIGHT_SUM_TOL = 1e-9


@dataclass(frozen=True)
class VelocityEval:
    """A velocity field evaluated at one point and stage."""

    v: np.ndarray
    t: int
    x: np.ndarray


@dataclass(frozen=True)
class ScoreEval:
    """A marginal log-density gradient evaluated at one point and stage."""

    s: np.ndarray
    t: int


# ---------------------------------------------------------------------------
# Array-level kernels
# ---------------------------------------------------------------------------

def score_from_velocity(v: np.ndarray, x: np.ndarray, sched: AnnealSchedule, t: int) -> np.ndarray:
    """Convert a velocity evaluation into the marginal score at stage t.

    score = (-alpha_t * v + alpha_dot_t * x) / (sigma_dot_t * sigma_t * alpha_t
    - alpha_dot_t * sigma_t^2).  The denominator vanishes where sigma_t = 0,
    i.e. at the data end of the schedule.
    """
    den = require_nonsingular(sched.score_denominator(t), t, "score conversion")
    return (-sched.alpha[t] * v + sched.alpha_dot[t] * x) / den


def endpoint_from_velocity(v: np.ndarray, x: np.ndarray, sched: AnnealSchedule, t: int) -> np.ndarray:
    """Predicted clean data point implied by a velocity evaluation at stage t.

    At the data end (sigma_t = 0 for the linear pair) the prediction is the
    state itself; that limit is taken explicitly instead of dividing 0/0.
    """
    if sched.endpoint_singular(t):
        if abs(sched.sigma[t]) < 1e-9:
            return np.array(x, copy=True)
        require_nonsingular(sched.endpoint_denominator(t), t, "endpoint prediction")
    den = sched.endpoint_denominator(t)
    return (sched.sigma[t] * v - sched.sigma_dot[t] * x) / den


def euler_update(x: np.ndarray, v: np.ndarray, dt: float) -> np.ndarray:
    """One deterministic Euler step ``x + v * dt``."""
    return x + v * dt


def langevin_update(
    x: np.ndarray, score: np.ndarray, step_size: float, noise: np.ndarray
) -> np.ndarray:
    """One unadjusted Langevin step with pre-drawn standard-normal noise."""
    return x + 0.5 * step_size**2 * score + step_size * noise


def composed_fields(
    velocities: list[np.ndarray], weights: list[np.ndarray | float]
) -> np.ndarray:
    """Weighted sum of velocity (or score) fields.

    Weights must sum to one elementwise; violations raise CompositionError
    reporting the largest deviation.
    """
    if not velocities:
        raise ValueError("need at least one field to compose")
    if len(velocities) != len(weights):
        raise ValueError("one weight per field required")
    total = np.zeros_like(np.asarray(velocities[0], dtype=np.float64))
    wsum = np.zeros(np.shape(velocities[0])[-1])
    for v, w in zip(velocities, weights):
        w_arr = np.asarray(w, dtype=np.float64)
        total = total + w_arr * v
        wsum = wsum + np.broadcast_to(w_arr, wsum.shape)
    dev = float(np.max(np.abs(wsum - 1.0)))
    if dev > WEIGHT_SUM_TOL:
        raise CompositionError(f"composition weights must sum to 1 elementwise; max deviation {dev:.3e}")
    return total


def normalized_region_weights(masks: list[np.ndarray | None], dim: int) -> list[np.ndarray]:
    """Turn raw per-expert region masks into convex combination weights.

    ``None`` means the expert covers the whole state.  The returned weights
    sum to one at every index (uniform 1/N wherever all masks are flat).
    """
    dense = [np.ones(dim) if m is None else np.asarray(m, dtype=np.float64) for m in masks]
    total = np.sum(dense, axis=0)
    if np.any(total <= 0):
        raise CompositionError("region masks leave part of the state uncovered")
    return [m / total for m in dense]


# ---------------------------------------------------------------------------
# Sample-level ops
# ---------------------------------------------------------------------------

def velocity_to_score(v: VelocityEval, x: ContinuousSample, sched: AnnealSchedule, t: int) -> ScoreEval:
    """Score of the stage-t marginal implied by a velocity evaluation."""
    return ScoreEval(s=score_from_velocity(v.v, x.data, sched, t), t=t)


def compose_fields(
    evals: list[tuple[VelocityEval, np.ndarray | float]],
    sched: AnnealSchedule,
) -> tuple[VelocityEval, ScoreEval]:
    """Convex combination of expert velocities and of the matching scores."""
    if not evals:
        raise ValueError("need at least one evaluation to compose")
    t = evals[0][0].t
    x = evals[0][0].x
    vs = [e.v for e, _ in evals]
    ws = [w for _, w in evals]
    v = composed_fields(vs, ws)
    scores = [score_from_velocity(e.v, e.x, sched, t) for e, _ in evals]
    s = composed_fields(scores, ws)
    return VelocityEval(v=v, t=t, x=x), ScoreEval(s=s, t=t)


def endpoint_predict(v: VelocityEval, x: ContinuousSample, sched: AnnealSchedule, t: int) -> ContinuousSample:
    return ContinuousSample(endpoint_from_velocity(v.v, x.data, sched, t), regions=x.regions)


def euler_step(x: ContinuousSample, v: VelocityEval, sched: AnnealSchedule, t: int) -> ContinuousSample:
    """Transition into stage t from stage t+1 along the composed velocity."""
    out = ContinuousSample(euler_update(x.data, v.v, sched.delta(t)), regions=x.regions)
    out.require_finite(f"euler step into stage {t}")
    return out


def langevin_step(
    x: ContinuousSample, s: ScoreEval, step_size: float, rng: np.random.Generator
) -> ContinuousSample:
    """One unadjusted Langevin step; draws d standard normals from ``rng``."""
    if step_size <= 0:
        raise ValueError(f"step_size must be positive, got {step_size}")
    noise = rng.standard_normal(x.dim)
    out = ContinuousSample(langevin_update(x.data, s.s, step_size, noise), regions=x.regions)
    out.require_finite("langevin step")
    return out


def require_finite_array(x: np.ndarray, context: str) -> np.ndarray:
    if not np.all(np.isfinite(x)):
        raise NumericalError(f"non-finite values in {context}")
    return x
