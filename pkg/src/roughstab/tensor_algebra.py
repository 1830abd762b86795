"""Truncated tensor algebra T^2(R^n).

An element is a triple (scalar, vector, matrix). The product is

    C^0 = A^0 B^0
    C^1 = A^0 B^1 + A^1 B^0
    C^2 = A^0 B^2 + A^1 (x) B^1 + A^2 B^0

which for increments (level0 == 1) reduces to Chen's composition rule.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import InvalidDimensionError

__all__ = [
    "LevelTwoElement",
    "t2_identity",
    "t2_product",
    "chen_defect",
]


@dataclass(frozen=True, eq=False)
class LevelTwoElement:
    """Element of T^2(R^n) with level-2 stored densely (row-major)."""

    level0: float
    level1: np.ndarray
    level2: np.ndarray

    def __post_init__(self):
        l1 = np.asarray(self.level1, dtype=float).reshape(-1)
        l2 = np.asarray(self.level2, dtype=float)
        n = l1.shape[0]
        if n < 1:
            raise InvalidDimensionError("dimension must be >= 1")
        if l2.shape != (n, n):
            raise InvalidDimensionError(f"level2 has shape {l2.shape}, expected {(n, n)}")
        l1.setflags(write=False)
        l2.setflags(write=False)
        object.__setattr__(self, "level0", float(self.level0))
        object.__setattr__(self, "level1", l1)
        object.__setattr__(self, "level2", l2)

    @property
    def dim(self) -> int:
        return self.level1.shape[0]

    def __mul__(self, other: "LevelTwoElement") -> "LevelTwoElement":
        return t2_product(self, other)

    def __eq__(self, other):
        if not isinstance(other, LevelTwoElement):
            return NotImplemented
        return (
            self.dim == other.dim
            and self.level0 == other.level0
            and np.array_equal(self.level1, other.level1)
            and np.array_equal(self.level2, other.level2)
        )

    __hash__ = None

    def allclose(self, other: "LevelTwoElement", atol: float = 1e-12, rtol: float = 0.0) -> bool:
        _check_same_dim(self, other)
        return (
            np.isclose(self.level0, other.level0, atol=atol, rtol=rtol)
            and np.allclose(self.level1, other.level1, atol=atol, rtol=rtol)
            and np.allclose(self.level2, other.level2, atol=atol, rtol=rtol)
        )

    def __repr__(self):
        return (
            f"LevelTwoElement(level0={self.level0!r}, level1={self.level1.tolist()!r}, "
            f"level2={self.level2.tolist()!r})"
        )


def _check_same_dim(*elements: LevelTwoElement) -> int:
    dims = {e.dim for e in elements}
    if len(dims) != 1:
        raise InvalidDimensionError(f"dimension mismatch: {sorted(dims)}")
    return dims.pop()


def t2_identity(dim: int) -> LevelTwoElement:
    """Neutral element (1, 0, 0) of the product in dimension ``dim``."""
    if int(dim) < 1:
        raise InvalidDimensionError(f"dimension must be >= 1, got {dim}")
    return LevelTwoElement(1.0, np.zeros(dim), np.zeros((dim, dim)))


def t2_product(a: LevelTwoElement, b: LevelTwoElement) -> LevelTwoElement:
    _check_same_dim(a, b)
    return LevelTwoElement(
        a.level0 * b.level0,
        a.level0 * b.level1 + a.level1 * b.level0,
        a.level0 * b.level2 + np.outer(a.level1, b.level1) + a.level2 * b.level0,
    )


def chen_defect(x_st: LevelTwoElement, x_tu: LevelTwoElement, x_su: LevelTwoElement) -> float:
    """Max-norm of ``x_st * x_tu - x_su`` over levels 1 and 2."""
    _check_same_dim(x_st, x_tu, x_su)
    c = t2_product(x_st, x_tu)
    return float(
        max(
            np.max(np.abs(c.level1 - x_su.level1)),
            np.max(np.abs(c.level2 - x_su.level2)),
        )
    )
