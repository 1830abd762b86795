"""Builtin systems.

``motivational-2d``: bilinear system on R^2 with
    g_0(x) = diag(-7, 1) x,  g_1(x) = [[0, 0], [1, 0]] x,  g_2(x) = [[0, 1], [-4, 0]] x.

``example-1d``: scalar system with g_0 = 0, g_1 = 1, g_2(x) = -x^2.
"""
from __future__ import annotations

import numpy as np

from . import _kernels
from .dynamics import VectorFieldSystem
from .errors import InvalidConfigError

DRIFT_2D = np.array([[-7.0, 0.0], [0.0, 1.0]])
A1_2D = np.array([[0.0, 0.0], [1.0, 0.0]])
A2_2D = np.array([[0.0, 1.0], [-4.0, 0.0]])


class LinearField:
    """x -> A x, batched over leading axes."""

    def __init__(self, matrix):
        self.matrix = np.asarray(matrix, dtype=float)

    def __call__(self, x):
        return np.asarray(x, dtype=float) @ self.matrix.T

    def jacobian(self, x):
        x = np.asarray(x, dtype=float)
        return np.broadcast_to(self.matrix, x.shape[:-1] + self.matrix.shape)

    def __repr__(self):
        return f"LinearField({self.matrix.tolist()})"


def linear_system(drift, *diffusions, name: str = "linear") -> VectorFieldSystem:
    fields = [LinearField(a) for a in (drift, *diffusions)]
    return VectorFieldSystem(
        n=fields[0].matrix.shape[0],
        fields=tuple(fields),
        jacobians=tuple(f.jacobian for f in fields),
        name=name,
    )


def motivational_2d() -> VectorFieldSystem:
    sys = linear_system(DRIFT_2D, A1_2D, A2_2D, name="motivational-2d")
    return VectorFieldSystem(sys.n, sys.fields, sys.jacobians, sys.name, kernel=_kernels.MOTIVATIONAL_2D)


def _zero(x):
    return np.zeros_like(np.asarray(x, dtype=float))


def _one(x):
    return np.ones_like(np.asarray(x, dtype=float))


def _minus_square(x):
    x = np.asarray(x, dtype=float)
    return -(x * x)


def _zero_jac(x):
    x = np.asarray(x, dtype=float)
    return np.zeros(x.shape + (1,))


def _minus_square_jac(x):
    x = np.asarray(x, dtype=float)
    return (-2.0 * x)[..., None]


def example_1d() -> VectorFieldSystem:
    return VectorFieldSystem(
        n=1,
        fields=(_zero, _one, _minus_square),
        jacobians=(_zero_jac, _zero_jac, _minus_square_jac),
        name="example-1d",
        kernel=_kernels.EXAMPLE_1D,
    )


BUILTIN = {"motivational-2d": motivational_2d, "example-1d": example_1d}


def builtin_system(name: str) -> VectorFieldSystem:
    try:
        return BUILTIN[name]()
    except KeyError:
        raise InvalidConfigError(f"unknown builtin system {name!r}; choose from {sorted(BUILTIN)}") from None
