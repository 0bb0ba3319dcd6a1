"""Time grids, sample paths, process simulation, and Girsanov likelihood weights.

Two observation models live here: a Brownian motion shifted by an absolutely
continuous drift, and a Cox (doubly stochastic Poisson) counting process whose
random intensity is a scalar multiple of a deterministic base rate.  All
simulation is replication-parallel: every replication draws from its own
counter-based stream keyed by (master seed, namespace, replication index), so
results never depend on batching or scheduling order.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

__all__ = [
    "NumericalError",
    "TimeGrid",
    "RealPath",
    "CountingPath",
    "DriftSpec",
    "IntensitySpec",
    "uniform_grid",
    "replication_stream",
    "simulate_brownian",
    "simulate_brownian_values",
    "apply_drift",
    "girsanov_weight_gaussian",
    "girsanov_weights_gaussian",
    "simulate_cox",
    "simulate_cox_counts",
    "girsanov_weight_cox",
]

_MASK64 = (1 << 64) - 1
_INDEX_BITS = 48


class NumericalError(RuntimeError):
    """A numeric guarantee failed (bound violation, factorization breakdown)."""


def replication_stream(seed: int, index: int, namespace: int = 0) -> np.random.Generator:
    """Independent Philox stream for one replication.

    The key packs (seed, namespace, index); distinct triples give statistically
    independent streams, and the mapping is pure, so any worker may own any
    replication without affecting its draws.
    """
    if index < 0 or index >= (1 << _INDEX_BITS):
        raise ValueError(f"replication index out of range: {index}")
    if namespace < 0 or namespace >= (1 << (64 - _INDEX_BITS)):
        raise ValueError(f"stream namespace out of range: {namespace}")
    key = np.array(
        [seed & _MASK64, (namespace << _INDEX_BITS) | index], dtype=np.uint64
    )
    return np.random.Generator(np.random.Philox(key=key))


@dataclass(frozen=True, eq=False)
class TimeGrid:
    """Strictly increasing partition 0 = tau_0 < ... < tau_m = T of [0, T]."""

    nodes: np.ndarray

    def __post_init__(self):
        nodes = np.asarray(self.nodes, dtype=float)
        if nodes.ndim != 1 or nodes.size < 3:
            raise ValueError("grid needs at least 2 cells (3 nodes)")
        if nodes[0] != 0.0:
            raise ValueError("first node must be exactly 0")
        if not np.all(np.diff(nodes) > 0):
            raise ValueError("nodes must be strictly increasing")
        nodes.setflags(write=False)
        object.__setattr__(self, "nodes", nodes)

    @property
    def horizon(self) -> float:
        return float(self.nodes[-1])

    @property
    def cells(self) -> int:
        return self.nodes.size - 1

    @property
    def widths(self) -> np.ndarray:
        return np.diff(self.nodes)

    @property
    def is_uniform(self) -> bool:
        w = self.widths
        return bool(np.allclose(w, w[0], rtol=1e-12, atol=0.0))


def uniform_grid(horizon: float, cells: int) -> TimeGrid:
    """Uniform grid with nodes k*T/m, k = 0..m."""
    if not horizon > 0:
        raise ValueError("horizon must be positive")
    if cells < 2:
        raise ValueError("cell count must be >= 2")
    return TimeGrid(np.arange(cells + 1) * (horizon / cells))


@dataclass(frozen=True, eq=False)
class RealPath:
    """Real-valued path sampled at the grid nodes; simulated paths start at 0."""

    grid: TimeGrid
    values: np.ndarray

    def __post_init__(self):
        values = np.asarray(self.values, dtype=float)
        if values.shape != self.grid.nodes.shape:
            raise ValueError("values length must match the node count")
        values.setflags(write=False)
        object.__setattr__(self, "values", values)


@dataclass(frozen=True, eq=False)
class CountingPath:
    """Counting process observed on a grid, stored through its jump times.

    ``intensity_scale`` records the realized random multiplier of the base
    rate for simulated paths (1.0 when the intensity is deterministic); the
    estimand of a replication is ``intensity_scale * base_primitive``.
    """

    grid: TimeGrid
    jump_times: np.ndarray
    intensity_scale: float = 1.0

    def __post_init__(self):
        times = np.asarray(self.jump_times, dtype=float)
        if times.ndim != 1:
            raise ValueError("jump times must be one-dimensional")
        if times.size and not (
            np.all(np.diff(times) > 0)
            and times[0] > 0.0
            and times[-1] <= self.grid.horizon
        ):
            raise ValueError("jump times must be strictly increasing in (0, T]")
        times.setflags(write=False)
        object.__setattr__(self, "jump_times", times)

    def counts(self) -> np.ndarray:
        """N(tau_k) per node; a jump exactly at a node is counted at that node."""
        return np.searchsorted(self.jump_times, self.grid.nodes, side="right").astype(
            float
        )


@dataclass(frozen=True, eq=False)
class DriftSpec:
    """Absolutely continuous drift u(t) = int_0^t du, given through its rate du.

    ``kind`` selects a closed form (zero / constant / linear / sine) or grid
    samples of the rate; the primitive of sampled rates is the cumulative
    trapezoid on the sample nodes.
    """

    kind: str
    coefficient: float = 1.0
    frequency: float = math.pi
    sample_nodes: Optional[np.ndarray] = None
    rate_samples: Optional[np.ndarray] = None
    _sample_primitive: Optional[np.ndarray] = field(default=None, repr=False)

    _KINDS = ("zero", "constant", "linear", "sine", "samples")

    def __post_init__(self):
        if self.kind not in self._KINDS:
            raise ValueError(f"unknown drift kind: {self.kind!r}")
        if self.kind == "samples":
            nodes = np.asarray(self.sample_nodes, dtype=float)
            rates = np.asarray(self.rate_samples, dtype=float)
            if nodes.ndim != 1 or nodes.shape != rates.shape or nodes.size < 2:
                raise ValueError("sampled drift needs matching node/rate arrays")
            if not np.all(np.diff(nodes) > 0):
                raise ValueError("sample nodes must be strictly increasing")
            if not np.all(np.isfinite(rates)):
                raise ValueError("rate samples must be finite")
            prim = np.concatenate(
                [[0.0], np.cumsum(0.5 * (rates[1:] + rates[:-1]) * np.diff(nodes))]
            )
            for arr in (nodes, rates, prim):
                arr.setflags(write=False)
            object.__setattr__(self, "sample_nodes", nodes)
            object.__setattr__(self, "rate_samples", rates)
            object.__setattr__(self, "_sample_primitive", prim)

    @classmethod
    def zero(cls) -> "DriftSpec":
        return cls("zero", coefficient=0.0)

    @classmethod
    def constant_rate(cls, rate: float) -> "DriftSpec":
        """u(t) = rate * t."""
        return cls("constant", coefficient=rate)

    @classmethod
    def linear_rate(cls, slope: float) -> "DriftSpec":
        """du(t) = slope * t, so u(t) = slope * t^2 / 2."""
        return cls("linear", coefficient=slope)

    @classmethod
    def sine(cls, amplitude: float = 1.0, frequency: float = math.pi) -> "DriftSpec":
        """u(t) = amplitude * sin(frequency t) / frequency."""
        return cls("sine", coefficient=amplitude, frequency=frequency)

    @classmethod
    def from_samples(cls, nodes, rates) -> "DriftSpec":
        return cls("samples", sample_nodes=np.asarray(nodes), rate_samples=np.asarray(rates))

    def rate(self, t) -> np.ndarray:
        t = np.asarray(t, dtype=float)
        if self.kind == "zero":
            return np.zeros_like(t)
        if self.kind == "constant":
            return np.full_like(t, self.coefficient)
        if self.kind == "linear":
            return self.coefficient * t
        if self.kind == "sine":
            return self.coefficient * np.cos(self.frequency * t)
        return np.interp(t, self.sample_nodes, self.rate_samples)

    def primitive(self, t) -> np.ndarray:
        t = np.asarray(t, dtype=float)
        if self.kind == "zero":
            return np.zeros_like(t)
        if self.kind == "constant":
            return self.coefficient * t
        if self.kind == "linear":
            return 0.5 * self.coefficient * t * t
        if self.kind == "sine":
            return self.coefficient * np.sin(self.frequency * t) / self.frequency
        return np.interp(t, self.sample_nodes, self._sample_primitive)

    def rate_bound(self, horizon: float) -> float:
        """Upper bound for the rate on [0, horizon] (used as a thinning cap)."""
        if self.kind == "zero":
            return 0.0
        if self.kind == "constant":
            return abs(self.coefficient)
        if self.kind == "linear":
            return abs(self.coefficient) * horizon
        if self.kind == "sine":
            return abs(self.coefficient)
        mask = self.sample_nodes <= horizon + 1e-12
        return float(np.max(np.abs(self.rate_samples[mask])))


@dataclass(frozen=True, eq=False)
class IntensitySpec:
    """Counting-process intensity Z * base_rate(t).

    ``multiplier_shape``/``multiplier_scale`` define a gamma law for the
    positive multiplier Z, drawn once per replication (time-zero measurable);
    leave them unset for a deterministic intensity (Z = 1).  ``max_base_rate``
    optionally overrides the per-unit-multiplier thinning cap.
    """

    base: DriftSpec
    multiplier_shape: Optional[float] = None
    multiplier_scale: Optional[float] = None
    max_base_rate: Optional[float] = None

    def __post_init__(self):
        random = (self.multiplier_shape is None) != (self.multiplier_scale is None)
        if random:
            raise ValueError("gamma multiplier needs both shape and scale")
        if self.multiplier_shape is not None and (
            self.multiplier_shape <= 0 or self.multiplier_scale <= 0
        ):
            raise ValueError("gamma multiplier parameters must be positive")

    @property
    def is_random(self) -> bool:
        return self.multiplier_shape is not None

    @property
    def mean_multiplier(self) -> float:
        if self.is_random:
            return self.multiplier_shape * self.multiplier_scale
        return 1.0

    def mean_rate(self, t) -> np.ndarray:
        return self.mean_multiplier * self.base.rate(t)

    def mean_primitive(self, t) -> np.ndarray:
        return self.mean_multiplier * self.base.primitive(t)

    def base_bound(self, horizon: float) -> float:
        if self.max_base_rate is not None:
            return self.max_base_rate
        return self.base.rate_bound(horizon)

    def draw_multiplier(self, rng: np.random.Generator) -> float:
        if self.is_random:
            return float(rng.gamma(self.multiplier_shape, self.multiplier_scale))
        return 1.0


def simulate_brownian(grid: TimeGrid, rng: np.random.Generator) -> RealPath:
    """Brownian path on the grid: independent N(0, dtau_k) increments from 0."""
    increments = rng.normal(0.0, np.sqrt(grid.widths))
    values = np.concatenate([[0.0], np.cumsum(increments)])
    return RealPath(grid, values)


def simulate_brownian_values(
    grid: TimeGrid, seed: int, indices, namespace: int = 0
) -> np.ndarray:
    """Stack of Brownian paths, one independent stream per replication index."""
    indices = np.asarray(indices, dtype=np.int64)
    scale = np.sqrt(grid.widths)
    out = np.empty((indices.size, grid.cells + 1))
    out[:, 0] = 0.0
    for row, idx in enumerate(indices):
        rng = replication_stream(seed, int(idx), namespace)
        np.cumsum(rng.normal(0.0, scale), out=out[row, 1:])
    return out


def apply_drift(path: RealPath, drift: DriftSpec) -> RealPath:
    """Shift the path by the drift primitive at every node."""
    return RealPath(path.grid, path.values + drift.primitive(path.grid.nodes))


def girsanov_weight_gaussian(path: RealPath, drift: DriftSpec) -> float:
    """Likelihood ratio exp(int du dX - 1/2 int du^2 dt), left-point Ito sums.

    The path must be a sample under the driftless base measure; the weight
    then has expectation one for any admissible drift.
    """
    rates = drift.rate(path.grid.nodes[:-1])
    increments = np.diff(path.values)
    return float(
        np.exp(rates @ increments - 0.5 * (rates * rates) @ path.grid.widths)
    )


def girsanov_weights_gaussian(
    values: np.ndarray, grid: TimeGrid, drift: DriftSpec
) -> np.ndarray:
    """Vectorized Girsanov weights for a stack of base-measure paths."""
    rates = drift.rate(grid.nodes[:-1])
    increments = np.diff(values, axis=1)
    return np.exp(increments @ rates - 0.5 * (rates * rates) @ grid.widths)


def _thinned_jump_times(
    grid: TimeGrid,
    intensity: IntensitySpec,
    rng: np.random.Generator,
) -> tuple[np.ndarray, float]:
    horizon = grid.horizon
    multiplier = intensity.draw_multiplier(rng)
    cap = multiplier * intensity.base_bound(horizon)
    if cap == 0.0:
        return np.empty(0), multiplier
    count = rng.poisson(cap * horizon)
    candidates = np.sort(rng.uniform(0.0, horizon, count))
    candidates = candidates[candidates > 0.0]
    realized = multiplier * intensity.base.rate(candidates)
    if np.any(realized < 0.0):
        raise ValueError("intensity must be nonnegative on [0, T]")
    if np.any(realized > cap * (1.0 + 1e-12)):
        raise NumericalError("realized intensity exceeds the thinning cap")
    keep = rng.uniform(0.0, 1.0, candidates.size) * cap <= realized
    return candidates[keep], multiplier


def simulate_cox(
    grid: TimeGrid, intensity: IntensitySpec, rng: np.random.Generator
) -> CountingPath:
    """Cox path by thinning: dominate with the per-replication cap, then accept
    each homogeneous candidate with probability rate/cap."""
    jumps, multiplier = _thinned_jump_times(grid, intensity, rng)
    return CountingPath(grid, jumps, intensity_scale=multiplier)


def simulate_cox_counts(
    grid: TimeGrid, intensity: IntensitySpec, seed: int, indices, namespace: int = 0
) -> tuple[np.ndarray, np.ndarray]:
    """Node counts and realized multipliers for a block of replications."""
    indices = np.asarray(indices, dtype=np.int64)
    counts = np.empty((indices.size, grid.cells + 1))
    multipliers = np.empty(indices.size)
    for row, idx in enumerate(indices):
        rng = replication_stream(seed, int(idx), namespace)
        jumps, mult = _thinned_jump_times(grid, intensity, rng)
        counts[row] = np.searchsorted(jumps, grid.nodes, side="right")
        multipliers[row] = mult
    return counts, multipliers


def girsanov_weight_cox(path: CountingPath, rate: DriftSpec) -> float:
    """Likelihood ratio prod rate(T_k) * exp(-int (rate - 1) dt) for a counting
    path simulated under the unit-rate base measure; the time integral uses the
    trapezoid rule on the grid."""
    at_jumps = rate.rate(path.jump_times)
    if np.any(at_jumps <= 0.0):
        raise ValueError("rate must be positive at every jump time")
    nodes = path.grid.nodes
    integral = float(np.trapezoid(rate.rate(nodes) - 1.0, nodes))
    return float(np.exp(np.sum(np.log(at_jumps)) - integral))
