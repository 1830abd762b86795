"""Sampled paths and level-2 rough paths on a time partition.

A :class:`GridRoughPath` stores one increment per cell; increments over longer
intervals are obtained with Chen products, so the multiplicative property holds
by construction up to rounding.
"""
from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

import numpy as np

from . import csvio
from .errors import (
    EmptyPathError,
    IndexRangeError,
    InvalidDimensionError,
    InvalidParameterError,
    InvalidPartitionError,
)
from .tensor_algebra import LevelTwoElement, chen_defect, t2_identity, t2_product

__all__ = [
    "SampledPath",
    "GridRoughPath",
    "increment",
    "lift_piecewise_linear",
    "p_variation",
    "pairwise_costs",
    "dp_distance",
    "max_chen_defect",
    "read_sampled_path",
    "write_sampled_path",
]


def _check_times(times: np.ndarray) -> None:
    if times.ndim != 1:
        raise InvalidPartitionError("times must be one-dimensional")
    if times.size >= 2 and not np.all(np.diff(times) > 0):
        raise InvalidPartitionError("times must be strictly increasing")


@dataclass(frozen=True, eq=False)
class SampledPath:
    """Values of an R^n-valued path at strictly increasing times.

    ``values`` has shape ``(len(times), n)``; a 1-D array is read as a scalar path.
    """

    times: np.ndarray
    values: np.ndarray

    def __post_init__(self):
        t = np.asarray(self.times, dtype=float)
        v = np.asarray(self.values, dtype=float)
        if v.ndim == 1:
            v = v[:, None]
        _check_times(t)
        if v.ndim != 2 or v.shape[0] != t.shape[0]:
            raise InvalidDimensionError(
                f"values shape {v.shape} does not match {t.shape[0]} sample times"
            )
        object.__setattr__(self, "times", t)
        object.__setattr__(self, "values", v)

    @property
    def dim(self) -> int:
        return self.values.shape[1]

    def __len__(self):
        return self.times.shape[0]

    def with_time_channel(self) -> "SampledPath":
        """Prepend channel 0 carrying the time itself (u[0] = t)."""
        return SampledPath(self.times, np.column_stack([self.times, self.values]))

    def value_at(self, t: float) -> np.ndarray:
        """Piecewise-linear interpolation at time ``t``."""
        return np.array([np.interp(t, self.times, self.values[:, i]) for i in range(self.dim)])


@dataclass(frozen=True, eq=False)
class GridRoughPath:
    """Level-2 rough path sampled on ``times``.

    ``level1[k]`` and ``level2[k]`` hold the increment over ``[times[k], times[k+1]]``;
    level 0 is 1 for every cell.
    """

    times: np.ndarray
    level1: np.ndarray
    level2: np.ndarray

    def __post_init__(self):
        t = np.asarray(self.times, dtype=float)
        l1 = np.asarray(self.level1, dtype=float)
        l2 = np.asarray(self.level2, dtype=float)
        _check_times(t)
        if t.size < 2:
            raise EmptyPathError("a rough path needs at least one cell")
        n_cells = t.size - 1
        if l1.ndim != 2 or l1.shape[0] != n_cells:
            raise InvalidDimensionError(f"level1 shape {l1.shape}, expected ({n_cells}, d)")
        d = l1.shape[1]
        if l2.shape != (n_cells, d, d):
            raise InvalidDimensionError(f"level2 shape {l2.shape}, expected {(n_cells, d, d)}")
        object.__setattr__(self, "times", t)
        object.__setattr__(self, "level1", l1)
        object.__setattr__(self, "level2", l2)

    @classmethod
    def from_increments(cls, times, increments: Sequence[LevelTwoElement]) -> "GridRoughPath":
        if not increments:
            raise EmptyPathError("no increments")
        for inc in increments:
            if inc.level0 != 1.0:
                raise InvalidParameterError("increments must have level0 == 1")
        return cls(
            times,
            np.stack([inc.level1 for inc in increments]),
            np.stack([inc.level2 for inc in increments]),
        )

    @property
    def dim(self) -> int:
        return self.level1.shape[1]

    @property
    def n_cells(self) -> int:
        return self.level1.shape[0]

    def cell(self, k: int) -> LevelTwoElement:
        return LevelTwoElement(1.0, self.level1[k], self.level2[k])

    @property
    def increments(self) -> list[LevelTwoElement]:
        return [self.cell(k) for k in range(self.n_cells)]

    def level1_positions(self) -> np.ndarray:
        """Level-1 path relative to its start, at every grid time."""
        return np.vstack([np.zeros(self.dim), np.cumsum(self.level1, axis=0)])

    def pair_increments(self, start: int) -> tuple[np.ndarray, np.ndarray]:
        """Increments over ``[times[start], times[b]]`` for every ``b > start``.

        Returns arrays of shape ``(N - start, d)`` and ``(N - start, d, d)``; row ``r``
        corresponds to ``b = start + r + 1``. Equivalent to successive Chen products.
        """
        l1 = self.level1[start:]
        l2 = self.level2[start:]
        run = np.cumsum(l1, axis=0)
        before = np.vstack([np.zeros((1, self.dim)), run[:-1]])
        cross = before[:, :, None] * l1[:, None, :]
        return run, np.cumsum(l2 + cross, axis=0)

    def to_csv(self, path: str | Path, comments=None) -> Path:
        d = self.dim
        header = ["t_start", "t_end"]
        header += [f"u1_{i}" for i in range(d)]
        header += [f"u2_{i}_{j}" for i in range(d) for j in range(d)]
        data = np.column_stack(
            [self.times[:-1], self.times[1:], self.level1, self.level2.reshape(self.n_cells, -1)]
        )
        return csvio.write_array(path, header, data, comments)

    @classmethod
    def from_csv(cls, path: str | Path) -> "GridRoughPath":
        header, data, _ = csvio.read_table(path)
        d = sum(1 for h in header if h.startswith("u1_"))
        times = np.append(data[:, 0], data[-1, 1])
        return cls(times, data[:, 2 : 2 + d], data[:, 2 + d :].reshape(-1, d, d))


def increment(path: GridRoughPath, i: int, j: int) -> LevelTwoElement:
    """Chen product of the cells between grid indices ``i`` and ``j``."""
    if not (0 <= i <= j <= path.n_cells):
        raise IndexRangeError(f"need 0 <= i <= j <= {path.n_cells}, got i={i}, j={j}")
    out = t2_identity(path.dim)
    for k in range(i, j):
        out = t2_product(out, path.cell(k))
    return out


def max_chen_defect(path: GridRoughPath) -> float:
    """Largest Chen defect over all triples ``i <= k <= j`` of grid indices. O(N^3)."""
    n = path.n_cells
    whole = {}
    for i in range(n + 1):
        for j in range(i, n + 1):
            whole[i, j] = increment(path, i, j)
    worst = 0.0
    for i in range(n + 1):
        for k in range(i, n + 1):
            for j in range(k, n + 1):
                worst = max(worst, chen_defect(whole[i, k], whole[k, j], whole[i, j]))
    return worst


def lift_piecewise_linear(signal: SampledPath) -> GridRoughPath:
    """Exact level-2 lift of the piecewise-linear interpolation of ``signal``.

    On a straight segment with increment D the iterated integral is D (x) D / 2.
    """
    if len(signal) < 2:
        raise EmptyPathError("need at least two samples to lift a path")
    delta = np.diff(signal.values, axis=0)
    return GridRoughPath(signal.times, delta, 0.5 * delta[:, :, None] * delta[:, None, :])


def _grid_sup(n_points: int, cost_from) -> float:
    """max over subdivisions 0 = a_0 < ... < a_r = n_points - 1 of the summed costs.

    ``cost_from(j)`` returns costs of the pieces ``[m, j]`` for all ``m < j``.
    """
    best = np.zeros(n_points)
    for j in range(1, n_points):
        best[j] = np.max(best[:j] + cost_from(j))
    return float(best[-1])


def pairwise_costs(values, p: float) -> np.ndarray:
    """``cost[a, b] = |x_b - x_a|^p`` (Euclidean) for ``a < b``; ``-inf`` elsewhere."""
    x = np.asarray(values, dtype=float)
    n = x.shape[0]
    d = x[None, :, :] - x[:, None, :]
    cost = np.sqrt(np.sum(d * d, axis=2)) ** p
    cost[np.tril_indices(n)] = -np.inf
    return cost


def p_variation(signal: SampledPath, p: float) -> float:
    """p-variation with the supremum restricted to subdivisions through sample points.

    This is a lower bound for the continuous-time value; exact at breakpoints
    of piecewise-linear paths when p = 1.
    """
    if not p >= 1:
        raise InvalidParameterError(f"p must be >= 1, got {p}")
    if len(signal) < 2:
        return 0.0
    cost = pairwise_costs(signal.values, p)
    return _grid_sup(len(signal), lambda j: cost[:j, j]) ** (1.0 / p)


def dp_distance(x: GridRoughPath, y: GridRoughPath, p: float) -> float:
    """Grid-restricted d_p distance between two level-2 rough paths.

    Level 1 is measured in the Euclidean norm, level 2 in the entrywise max-norm.
    The result is a lower bound for the supremum over all subdivisions.
    """
    if not 2 <= p < 3:
        raise InvalidParameterError(f"p must lie in [2, 3), got {p}")
    if x.times.shape != y.times.shape or not np.array_equal(x.times, y.times):
        raise InvalidPartitionError("rough paths live on different partitions")
    if x.dim != y.dim:
        raise InvalidDimensionError(f"dimension mismatch {x.dim} != {y.dim}")
    n = x.n_cells + 1
    # cost1[a, b], cost2[a, b] for a < b
    cost1 = np.full((n, n), -np.inf)
    cost2 = np.full((n, n), -np.inf)
    for a in range(n - 1):
        x1, x2 = x.pair_increments(a)
        y1, y2 = y.pair_increments(a)
        cost1[a, a + 1 :] = np.linalg.norm(x1 - y1, axis=1) ** p
        cost2[a, a + 1 :] = np.max(np.abs(x2 - y2), axis=(1, 2)) ** (p / 2)
    d1 = _grid_sup(n, lambda j: cost1[:j, j]) ** (1.0 / p)
    d2 = _grid_sup(n, lambda j: cost2[:j, j]) ** (1.0 / p)
    return max(d1, d2)


def read_sampled_path(path: str | Path) -> SampledPath:
    header, data, _ = csvio.read_table(path)
    if not header or header[0] != "t":
        raise InvalidPartitionError(f"{path}: first column must be 't'")
    return SampledPath(data[:, 0], data[:, 1:])


def write_sampled_path(signal: SampledPath, path: str | Path, comments=None) -> Path:
    header = ["t"] + [f"x{i + 1}" for i in range(signal.dim)]
    return csvio.write_array(path, header, np.column_stack([signal.times, signal.values]), comments)
