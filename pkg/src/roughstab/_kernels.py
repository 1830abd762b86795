"""Compiled RK4 loop for the builtin systems driven by the oscillatory input.

Builtin vector fields are selected by an integer id so that the compiled code
does not take function arguments and can be cached on disk.
"""
import math

import numba
import numpy as np

MOTIVATIONAL_2D = 0
EXAMPLE_1D = 1


@numba.njit(cache=True)
def _fields(kind, x, G):
    """Fill G (shape (n, 3)) with the columns g_0(x), g_1(x), g_2(x)."""
    if kind == MOTIVATIONAL_2D:
        G[0, 0] = -7.0 * x[0]
        G[1, 0] = x[1]
        G[0, 1] = 0.0
        G[1, 1] = x[0]
        G[0, 2] = x[1]
        G[1, 2] = -4.0 * x[0]
    else:
        G[0, 0] = 0.0
        G[0, 1] = 1.0
        G[0, 2] = -x[0] * x[0]


@numba.njit(cache=True)
def _rhs(kind, G, x, t, eta, b1, b2):
    w = eta * eta
    _fields(kind, x, G)
    out = G[:, 0].copy()
    out += G[:, 1] * (-b1 * eta * math.sin(w * t))
    out += G[:, 2] * (b2 * eta * math.cos(w * t))
    return out


@numba.njit(cache=True)
def rk4_oscillatory(kind, x0, t0, h, steps, eta, b1, b2, bound):
    """Returns ``(states, status)``; ``status`` is -1 on success, else the first bad step index."""
    n = x0.shape[0]
    G = np.zeros((n, 3))
    states = np.empty((steps + 1, n))
    states[0] = x0
    x = x0.copy()
    for i in range(steps):
        t = t0 + i * h
        k1 = _rhs(kind, G, x, t, eta, b1, b2)
        k2 = _rhs(kind, G, x + 0.5 * h * k1, t + 0.5 * h, eta, b1, b2)
        k3 = _rhs(kind, G, x + 0.5 * h * k2, t + 0.5 * h, eta, b1, b2)
        k4 = _rhs(kind, G, x + h * k3, t + h, eta, b1, b2)
        x = x + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
        states[i + 1] = x
        for a in range(n):
            if not (abs(x[a]) <= bound):
                return states[: i + 2], i + 1
    return states, -1
