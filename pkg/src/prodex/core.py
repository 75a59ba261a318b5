"""Shared domain types: samples, annealing schedules, and RNG streams.

Time conventions
----------------
An annealing schedule has ``num_steps`` stages indexed ``t = num_steps, ..., 1``
(the loop of the sampler counts down).  Each stage maps to a remapped time
``times[t]`` in [0, 1] with ``times[num_steps] = 0`` (pure noise) and
``times[1] = 1`` (data).  The interpolation pair ``(alpha, sigma)`` and its
analytic derivatives are tabulated on that grid.

RNG stream protocol
-------------------
All randomness flows from one 64-bit master seed.  Streams are derived with
``numpy.random.SeedSequence`` spawn keys so that stream ``(generation, index)``
is independent of how many other streams exist.  Within a chain the stream is
consumed in a fixed block order (documented on the kernels), which makes every
run bit-reproducible from ``(seed, stream, call sequence)``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Union

import numpy as np

from .errors import SingularScheduleError

# Guard for near-zero schedule denominators (score conversion, endpoint).
DENOM_TOL = 1e-12


# ---------------------------------------------------------------------------
# Samples
# ---------------------------------------------------------------------------

@dataclass
class ContinuousSample:
    """A point in R^d, optionally annotated with named index regions."""

    data: np.ndarray
    regions: dict[str, np.ndarray] | None = None

    def __post_init__(self):
        self.data = np.asarray(self.data, dtype=np.float64)
        if self.data.ndim != 1:
            raise ValueError(f"continuous sample must be a flat vector, got shape {self.data.shape}")
        if self.regions:
            d = self.data.shape[0]
            for name, idx in self.regions.items():
                idx = np.asarray(idx, dtype=np.intp)
                if idx.size and (idx.min() < 0 or idx.max() >= d):
                    raise ValueError(f"region {name!r} has indices outside [0, {d})")
                self.regions[name] = idx

    @property
    def kind(self) -> str:
        return "continuous"

    @property
    def dim(self) -> int:
        return self.data.shape[0]

    def require_finite(self, context: str = "") -> None:
        if not np.all(np.isfinite(self.data)):
            from .errors import NumericalError

            raise NumericalError(f"non-finite sample entries{' in ' + context if context else ''}")


@dataclass
class DiscreteSample:
    """A sequence of slices over a finite alphabet, filled left to right.

    ``slices`` has shape (num_slices, slice_shape); entries beyond
    ``filled`` are placeholders (zero) and carry no meaning.
    """

    slices: np.ndarray
    filled: int = 0
    alphabet: int = 2

    def __post_init__(self):
        self.slices = np.asarray(self.slices, dtype=np.int64)
        if self.slices.ndim != 2:
            raise ValueError(f"discrete sample needs (num_slices, slice_shape) ints, got shape {self.slices.shape}")
        if not 0 <= self.filled <= self.slices.shape[0]:
            raise ValueError(f"filled={self.filled} outside [0, {self.slices.shape[0]}]")
        used = self.slices[: self.filled]
        if used.size and (used.min() < 0 or used.max() >= self.alphabet):
            raise ValueError("symbols outside alphabet bounds")

    @property
    def kind(self) -> str:
        return "discrete"

    @property
    def num_slices(self) -> int:
        return self.slices.shape[0]

    @property
    def slice_shape(self) -> int:
        return self.slices.shape[1]


Sample = Union[ContinuousSample, DiscreteSample]


# ---------------------------------------------------------------------------
# Interpolation schedulers (continuous-time alpha/sigma pairs)
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class Scheduler:
    """Interpolation pair alpha/sigma on remapped time in [0, 1] with analytic
    derivatives.  Boundary values alpha(0)=0, sigma(0)=1 give the standard
    Gaussian at the noise end of every schedule."""

    name: str
    alpha: Callable[[float], float]
    sigma: Callable[[float], float]
    alpha_dot: Callable[[float], float]
    sigma_dot: Callable[[float], float]


LINEAR_SCHEDULER = Scheduler(
    name="linear",
    alpha=lambda s: s,
    sigma=lambda s: 1.0 - s,
    alpha_dot=lambda s: 1.0,
    sigma_dot=lambda s: -1.0,
)

# Trigonometric (variance-preserving) pair; exposed as the DDPM-style
# alternative, not the default.
TRIG_SCHEDULER = Scheduler(
    name="cosine",
    alpha=lambda s: math.sin(0.5 * math.pi * s),
    sigma=lambda s: math.cos(0.5 * math.pi * s),
    alpha_dot=lambda s: 0.5 * math.pi * math.cos(0.5 * math.pi * s),
    sigma_dot=lambda s: -0.5 * math.pi * math.sin(0.5 * math.pi * s),
)

_SCHEDULERS = {"uniform": LINEAR_SCHEDULER, "linear": LINEAR_SCHEDULER, "cosine": TRIG_SCHEDULER}


# ---------------------------------------------------------------------------
# Annealing schedule
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class AnnealSchedule:
    """Discretized annealing schedule.

    Arrays are indexed directly by the step ``t`` in ``1..num_steps``
    (index 0 is unused padding).
    """

    num_steps: int
    times: np.ndarray
    alpha: np.ndarray
    sigma: np.ndarray
    alpha_dot: np.ndarray
    sigma_dot: np.ndarray
    step_sizes: np.ndarray          # Langevin step size per stage
    mcmc_steps: int                 # MCMC applications per stage
    scheduler: Scheduler = field(repr=False, default=LINEAR_SCHEDULER)

    def delta(self, t: int) -> float:
        """Time increment for the transition into stage t from stage t+1."""
        if not 1 <= t <= self.num_steps - 1:
            raise ValueError(f"no transition into stage t={t} for num_steps={self.num_steps}")
        return float(self.times[t] - self.times[t + 1])

    def score_denominator(self, t: int) -> float:
        """Denominator of the velocity-to-score conversion at stage t."""
        return float(
            self.sigma_dot[t] * self.sigma[t] * self.alpha[t] - self.alpha_dot[t] * self.sigma[t] ** 2
        )

    def endpoint_denominator(self, t: int) -> float:
        """Denominator of the endpoint prediction at stage t."""
        return float(self.alpha_dot[t] * self.sigma[t] - self.sigma_dot[t] * self.alpha[t])

    def score_singular(self, t: int) -> bool:
        return abs(self.score_denominator(t)) < DENOM_TOL

    def endpoint_singular(self, t: int) -> bool:
        return abs(self.endpoint_denominator(t)) < DENOM_TOL


def make_schedule(
    num_steps: int,
    kind: str = "uniform",
    step_rule: tuple[float, float] = (0.5, 1e-3),
    mcmc_steps: int = 0,
) -> AnnealSchedule:
    """Build an annealing schedule on the uniform Euler grid.

    Parameters
    ----------
    num_steps : int
        Number of stages; must be >= 2.
    kind : {"uniform", "cosine"}
        Interpolation pair.  "uniform" is the rectified linear pair
        alpha(s)=s, sigma(s)=1-s; "cosine" is the trigonometric pair aligned
        with DDPM-style schedules.
    step_rule : (scale, floor)
        Langevin step size per stage: ``scale * sigma_t + floor``.  Both must
        give strictly positive step sizes when ``mcmc_steps > 0``.
    mcmc_steps : int
        MCMC applications per annealing stage (non-negative).
    """
    if num_steps < 2:
        raise ValueError(f"num_steps must be >= 2, got {num_steps}")
    if mcmc_steps < 0:
        raise ValueError(f"mcmc_steps must be non-negative, got {mcmc_steps}")
    if kind not in _SCHEDULERS:
        raise ValueError(f"unknown schedule kind {kind!r}; expected one of {sorted(set(_SCHEDULERS))}")
    scheduler = _SCHEDULERS[kind]

    T = num_steps
    times = np.zeros(T + 1)
    for t in range(1, T + 1):
        times[t] = (T - t) / (T - 1)
    if not np.all(np.diff(times[1:]) < 0):
        raise ValueError("remapped times must be strictly decreasing in the step index")

    alpha = np.zeros(T + 1)
    sigma = np.zeros(T + 1)
    alpha_dot = np.zeros(T + 1)
    sigma_dot = np.zeros(T + 1)
    for t in range(1, T + 1):
        s = times[t]
        alpha[t] = scheduler.alpha(s)
        sigma[t] = scheduler.sigma(s)
        alpha_dot[t] = scheduler.alpha_dot(s)
        sigma_dot[t] = scheduler.sigma_dot(s)

    scale, floor = step_rule
    step_sizes = np.zeros(T + 1)
    step_sizes[1:] = scale * sigma[1:] + floor
    if mcmc_steps > 0 and np.any(step_sizes[1:] <= 0):
        bad = int(np.argmax(step_sizes[1:] <= 0)) + 1
        raise ValueError(f"step rule {step_rule} yields non-positive Langevin step at stage {bad}")

    return AnnealSchedule(
        num_steps=T,
        times=times,
        alpha=alpha,
        sigma=sigma,
        alpha_dot=alpha_dot,
        sigma_dot=sigma_dot,
        step_sizes=step_sizes,
        mcmc_steps=mcmc_steps,
        scheduler=scheduler,
    )


def require_nonsingular(value: float, t: int, what: str) -> float:
    if abs(value) < DENOM_TOL:
        raise SingularScheduleError(f"{what} denominator is {value!r} at stage t={t}")
    return value


# ---------------------------------------------------------------------------
# RNG streams
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class RngHandle:
    """Identifies one reproducible random stream.

    ``key`` is a spawn-key path under the master seed; particle streams use
    ``(1, generation, index)`` and the population-level stream uses ``(0, 0)``.
    """

    seed: int
    key: tuple[int, ...] = ()

    def generator(self) -> np.random.Generator:
        return np.random.Generator(np.random.PCG64(np.random.SeedSequence(self.seed, spawn_key=self.key)))


def population_stream(seed: int) -> np.random.Generator:
    """Stream for population-level draws (resampling)."""
    return RngHandle(seed, (0, 0)).generator()


def particle_stream(seed: int, generation: int, index: int) -> np.random.Generator:
    """Independent stream for one particle; stable under changes to the
    particle count."""
    return RngHandle(seed, (1, generation, index)).generator()


def particle_streams(seed: int, generation: int, count: int) -> list[np.random.Generator]:
    return [particle_stream(seed, generation, i) for i in range(count)]


# ---------------------------------------------------------------------------
# Initial samples
# ---------------------------------------------------------------------------

def sample_initial(dim: int, rng: np.random.Generator) -> ContinuousSample:
    """Draw the continuous starting point from the standard Gaussian N(0, I)."""
    if dim < 1:
        raise ValueError(f"dim must be >= 1, got {dim}")
    return ContinuousSample(rng.standard_normal(dim))


def sample_initial_discrete(num_slices: int, slice_shape: int, alphabet: int) -> DiscreteSample:
    """Empty discrete sequence (no slices committed)."""
    if num_slices < 1 or slice_shape < 1 or alphabet < 2:
        raise ValueError("need num_slices >= 1, slice_shape >= 1, alphabet >= 2")
    return DiscreteSample(np.zeros((num_slices, slice_shape), dtype=np.int64), filled=0, alphabet=alphabet)
