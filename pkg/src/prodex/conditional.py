"""Conditional expert composition: parent graphs, velocity agreement
corrections, and regional weight utilities.

A conditioning graph makes each expert's velocity prediction drift toward the
predictions of its parents.  The correction is a gradient step on the squared
deviation between the expert's velocity and the (held fixed) parent velocity,
taken through the expert's own field only:

    v  <-  v - 2 * rate * J^T (v - v_parent)

iterated ``num_updates`` times per kernel application.  Experts living on
different regions are compared on the index intersection after zero padding;
an empty intersection contributes nothing.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from graphlib import CycleError, TopologicalSorter

import numpy as np
from scipy import ndimage

from .errors import GraphError, NumericalError
from .experts import FlowExpert


@dataclass(frozen=True)
class ConditioningGraph:
    """Parent structure over named experts plus correction hyperparameters."""

    parents: dict[str, tuple[str, ...]] = field(default_factory=dict)
    rate: float = 0.1
    num_updates: int = 2

    def __post_init__(self):
        if self.rate < 0:
            raise GraphError(f"correction rate must be non-negative, got {self.rate}")
        if self.num_updates < 0:
            raise GraphError(f"num_updates must be non-negative, got {self.num_updates}")
        clean = {k: tuple(v) for k, v in self.parents.items()}
        known = set(clean)
        for child, ps in clean.items():
            for p in ps:
                if p not in known:
                    raise GraphError(f"expert {child!r} names unknown parent {p!r}")
        object.__setattr__(self, "parents", clean)
        object.__setattr__(self, "_order", self._toposort())

    def _toposort(self) -> tuple[str, ...]:
        ts = TopologicalSorter({k: list(v) for k, v in self.parents.items()})
        try:
            return tuple(ts.static_order())
        except CycleError as exc:
            raise GraphError(f"conditioning graph has a cycle: {exc.args[1]}") from None

    @property
    def order(self) -> tuple[str, ...]:
        """Deterministic topological evaluation order (parents first)."""
        return self._order

    @property
    def active(self) -> bool:
        return self.rate > 0 and self.num_updates > 0 and any(self.parents.values())

    @staticmethod
    def from_experts(experts: dict[str, FlowExpert], rate: float = 0.1, num_updates: int = 2) -> "ConditioningGraph":
        parents = {name: tuple(e.parents) for name, e in experts.items()}
        return ConditioningGraph(parents=parents, rate=rate, num_updates=num_updates)


def _region_mask(expert: FlowExpert) -> np.ndarray:
    if expert.region_weight is None:
        return np.ones(expert.dim)
    return np.asarray(expert.region_weight, dtype=np.float64)


def _correct_one(
    name: str,
    velocities: dict[str, np.ndarray],
    x: np.ndarray,
    time: float,
    experts: dict[str, FlowExpert],
    graph: ConditioningGraph,
) -> np.ndarray:
    expert = experts[name]
    v = np.asarray(velocities[name], dtype=np.float64)
    parent_names = graph.parents.get(name, ())
    if not parent_names or graph.rate == 0 or graph.num_updates == 0:
        return v
    for p in parent_names:
        if p not in velocities:
            raise GraphError(f"missing parent evaluation {p!r} for expert {name!r}")
    jac = expert.velocity_jacobian(x, time)
    own_mask = _region_mask(expert) > 0
    for _ in range(graph.num_updates):
        grad = np.zeros_like(v)
        for p in parent_names:
            overlap = own_mask & (_region_mask(experts[p]) > 0)
            if not overlap.any():
                continue
            residual = (v - velocities[p]) * overlap
            if jac.ndim == 2:
                grad = grad + 2.0 * residual @ jac
            else:
                grad = grad + 2.0 * np.einsum("...ji,...j->...i", jac, residual)
        update = graph.rate * grad
        if not np.all(np.isfinite(update)):
            raise NumericalError(f"non-finite conditional correction for expert {name!r}")
        v = v - update
    return v


def conditional_velocity(
    name: str,
    velocities: dict[str, np.ndarray],
    x: np.ndarray,
    time: float,
    experts: dict[str, FlowExpert],
    graph: ConditioningGraph,
) -> np.ndarray:
    """Corrected velocity for one expert given all experts' raw evaluations.

    The parent term is held constant during differentiation; the gradient of
    the squared deviation flows through the expert's own Jacobian (analytic
    where available, finite differences otherwise).
    """
    return _correct_one(name, velocities, x, time, experts, graph)


def apply_corrections(
    velocities: dict[str, np.ndarray],
    x: np.ndarray,
    time: float,
    experts: dict[str, FlowExpert],
    graph: ConditioningGraph,
) -> dict[str, np.ndarray]:
    """Correct all experts in topological order; corrected parents feed children."""
    if not graph.active:
        return velocities
    out = dict(velocities)
    for name in graph.order:
        if name in out:
            out[name] = _correct_one(name, out, x, time, experts, graph)
    return out


def zero_pad_region(values: np.ndarray, dim: int, region: np.ndarray) -> np.ndarray:
    """Scatter a regional vector into the full state dimension.

    Entries outside the region are zero; supports batched inputs with the
    region on the last axis.
    """
    values = np.asarray(values, dtype=np.float64)
    region = np.asarray(region, dtype=np.intp)
    if values.shape[-1:] != region.shape:
        raise ValueError(f"values last axis {values.shape[-1:]} must match region size {region.shape}")
    if region.size and (region.min() < 0 or region.max() >= dim):
        raise ValueError(f"region indices must lie in [0, {dim})")
    out = np.zeros(values.shape[:-1] + (dim,))
    out[..., region] = values
    return out


def blur_mask(mask: np.ndarray, shape: tuple[int, ...], radius: float) -> tuple[np.ndarray, np.ndarray]:
    """Gaussian-blur a binary mask over a grid; returns (mask, complement).

    The blur standard deviation equals ``radius``; reflective boundaries keep
    constants exact, so the pair sums to one at every grid point.
    """
    if radius < 0:
        raise ValueError("radius must be non-negative")
    flat = np.asarray(mask, dtype=np.float64)
    if set(np.unique(flat)) - {0.0, 1.0}:
        raise ValueError("mask must be binary")
    grid = flat.reshape(shape)
    blurred = ndimage.gaussian_filter(grid, sigma=radius, mode="reflect") if radius > 0 else grid
    blurred = np.clip(blurred, 0.0, 1.0)
    out = blurred.reshape(flat.shape)
    return out, 1.0 - out
