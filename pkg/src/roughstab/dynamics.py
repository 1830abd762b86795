"""Vector-field systems, the level-2 rough Euler scheme, limit drifts and reference integrators.

Fields follow the convention ``g[j](x) -> R^n`` where ``x`` may carry leading
batch axes (shape ``(..., n)``); Jacobians return shape ``(..., n, n)``.
Channel 0 multiplies dt.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Callable, Sequence

import numpy as np

from . import csvio
from .errors import (
    BlowUpError,
    InvalidConfigError,
    InvalidDimensionError,
    InvalidParameterError,
    NumericalFailureError,
)
from .paths import GridRoughPath
from .signals import OscillatoryNoise, RateMatrix

Field = Callable[[np.ndarray], np.ndarray]

DEFAULT_BOUND = 1e6

__all__ = [
    "VectorFieldSystem",
    "Trajectory",
    "EnsembleResult",
    "jacobian_fd",
    "rough_euler_simulate",
    "limit_drift",
    "stratonovich_to_ito_drift",
    "ito_equivalent",
    "ode_simulate",
    "richardson_error",
    "oscillatory_simulate",
    "oscillatory_step",
    "sde_simulate",
    "sde_ensemble",
]


def jacobian_fd(f: Field, x, scale: float = 1e-6) -> np.ndarray:
    """Central-difference Jacobian with step ``scale * max(1, |x|)``.

    Works on batched ``x`` of shape ``(..., n)`` and returns ``(..., n_out, n)``.
    """
    x = np.asarray(x, dtype=float)
    n = x.shape[-1]
    step = scale * np.maximum(1.0, np.linalg.norm(x, axis=-1, keepdims=True))
    cols = []
    for i in range(n):
        e = np.zeros(n)
        e[i] = 1.0
        cols.append((np.asarray(f(x + step * e)) - np.asarray(f(x - step * e))) / (2 * step))
    jac = np.stack(cols, axis=-1)
    if not np.all(np.isfinite(jac)):
        raise NumericalFailureError("non-finite value in finite-difference Jacobian")
    return jac


@dataclass(frozen=True)
class VectorFieldSystem:
    """The tuple g = (g_0, g_1, ..., g_m) of vector fields on R^n.

    ``jacobians`` may hold analytic Jacobians (or ``None`` entries, which fall
    back to central differences). ``kernel`` is the id of a compiled builtin
    evaluator used by :func:`oscillatory_simulate`; see ``roughstab._kernels``.
    """

    n: int
    fields: tuple
    jacobians: tuple | None = None
    name: str = "custom"
    kernel: object = field(default=None, compare=False, repr=False)

    def __post_init__(self):
        object.__setattr__(self, "fields", tuple(self.fields))
        if len(self.fields) < 1:
            raise InvalidDimensionError("need at least the drift field g_0")
        if self.jacobians is not None:
            jac = tuple(self.jacobians)
            if len(jac) != len(self.fields):
                raise InvalidDimensionError("one Jacobian entry per field is required")
            object.__setattr__(self, "jacobians", jac)

    @property
    def m(self) -> int:
        return len(self.fields) - 1

    def field(self, j: int, x) -> np.ndarray:
        return np.asarray(self.fields[j](np.asarray(x, dtype=float)), dtype=float)

    def jacobian(self, j: int, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        if self.jacobians is not None and self.jacobians[j] is not None:
            return np.asarray(self.jacobians[j](x), dtype=float)
        return jacobian_fd(self.fields[j], x)

    def stack(self, x) -> np.ndarray:
        """Columns g_0(x), ..., g_m(x) as an array of shape ``(..., n, m + 1)``."""
        return np.stack([self.field(j, x) for j in range(self.m + 1)], axis=-1)

    def with_drift(self, drift: Field, name: str | None = None) -> "VectorFieldSystem":
        jac = None if self.jacobians is None else (None,) + self.jacobians[1:]
        return replace(
            self, fields=(drift,) + self.fields[1:], jacobians=jac, name=name or self.name, kernel=None
        )


@dataclass(eq=False)
class Trajectory:
    times: np.ndarray
    states: np.ndarray
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        self.times = np.asarray(self.times, dtype=float)
        self.states = np.asarray(self.states, dtype=float)
        if self.states.ndim == 1:
            self.states = self.states[:, None]

    @property
    def final(self) -> np.ndarray:
        return self.states[-1]

    def at(self, times) -> np.ndarray:
        """States at grid times that belong to this trajectory (matched to 1e-9 relative)."""
        idx = np.searchsorted(self.times, np.asarray(times) - 1e-9 * max(1.0, self.times[-1]))
        idx = np.clip(idx, 0, len(self.times) - 1)
        if not np.allclose(self.times[idx], times, rtol=1e-9, atol=1e-12):
            raise InvalidParameterError("requested times are not on the trajectory grid")
        return self.states[idx]

    def to_csv(self, path: str | Path) -> Path:
        header = ["t"] + [f"x{i + 1}" for i in range(self.states.shape[1])]
        return csvio.write_array(path, header, np.column_stack([self.times, self.states]), self.meta)

    @classmethod
    def from_csv(cls, path: str | Path) -> "Trajectory":
        _, data, comments = csvio.read_table(path)
        return cls(data[:, 0], data[:, 1:], dict(comments))


def _guard(x: np.ndarray, t: float, bound: float) -> None:
    # NaN fails the comparison, so the finite check only runs on the slow path
    if np.abs(x).max() <= bound:
        return
    if not np.all(np.isfinite(x)):
        raise NumericalFailureError(f"non-finite state at t = {t:.17g}")
    raise BlowUpError(t, bound)


def _as_state(x0, n: int | None = None) -> np.ndarray:
    x = np.atleast_1d(np.asarray(x0, dtype=float)).copy()
    if n is not None and x.shape != (n,):
        raise InvalidDimensionError(f"initial state has shape {x.shape}, expected ({n},)")
    return x


def _uniform_steps(T: float, h: float) -> tuple[int, float]:
    if not (T > 0 and h > 0):
        raise InvalidParameterError(f"need T > 0 and h > 0, got T={T}, h={h}")
    steps = max(1, math.ceil(T / h - 1e-9))
    return steps, T / steps


def rough_euler_simulate(
    g: VectorFieldSystem, U: GridRoughPath, x0, bound: float = DEFAULT_BOUND
) -> Trajectory:
    """Level-2 Euler scheme with left-point evaluation.

    Per cell: x += sum_j g_j(x) dU1[j] + sum_{j,k} (dg_j/dx)(x) g_k(x) dU2[k, j].
    """
    if U.dim != g.m + 1:
        raise InvalidDimensionError(f"rough path has dimension {U.dim}, system needs {g.m + 1}")
    x = _as_state(x0, g.n)
    _guard(x, U.times[0], bound)
    states = np.empty((U.n_cells + 1, g.n))
    states[0] = x
    # channels j whose dU2[:, j] column is identically zero never need a Jacobian
    active = [j for j in range(g.m + 1) if np.any(U.level2[:, :, j])]
    for k in range(U.n_cells):
        G = g.stack(x)
        dx = G @ U.level1[k]
        mixed = G @ U.level2[k]  # column j: sum_k g_k dU2[k, j]
        for j in active:
            if np.any(mixed[:, j]):
                dx = dx + g.jacobian(j, x) @ mixed[:, j]
        x = x + dx
        _guard(x, U.times[k + 1], bound)
        states[k + 1] = x
    return Trajectory(U.times.copy(), states, {"integrator": "rough-euler", "cells": U.n_cells})


def limit_drift(g: VectorFieldSystem, gamma: RateMatrix | np.ndarray) -> Field:
    """Drift of the limit ODE for a constant-rate rough driver.

    x -> g_0(x) + sum_{j,k} (dg_j/dx)(x) g_k(x) gamma[k, j].
    """
    gam = np.asarray(gamma, dtype=float)
    if gam.shape != (g.m + 1, g.m + 1):
        raise InvalidDimensionError(f"rate matrix shape {gam.shape}, expected {(g.m + 1,) * 2}")
    terms = [(j, k, gam[k, j]) for j in range(g.m + 1) for k in range(g.m + 1) if gam[k, j] != 0]

    def drift(x):
        x = np.asarray(x, dtype=float)
        out = g.field(0, x)
        for j, k, w in terms:
            out = out + w * np.einsum("...ab,...b->...a", g.jacobian(j, x), g.field(k, x))
        return out

    return drift


def stratonovich_to_ito_drift(g: VectorFieldSystem) -> Field:
    """f(x) = g_0(x) + 1/2 sum_{j>=1} (dg_j/dx)(x) g_j(x)."""
    if g.m < 1:
        raise InvalidDimensionError("need at least one diffusion field")

    def drift(x):
        x = np.asarray(x, dtype=float)
        out = g.field(0, x)
        for j in range(1, g.m + 1):
            out = out + 0.5 * np.einsum("...ab,...b->...a", g.jacobian(j, x), g.field(j, x))
        return out

    return drift


def ito_equivalent(g: VectorFieldSystem) -> VectorFieldSystem:
    """Same diffusion fields with the Stratonovich drift replaced by the Ito drift."""
    return g.with_drift(stratonovich_to_ito_drift(g), name=f"{g.name}-ito")


def _rk4(rhs, x0, t0: float, T: float, h: float, bound: float, record_every: int = 1):
    steps, h = _uniform_steps(T, h)
    x = _as_state(x0)
    _guard(x, t0, bound)
    keep = list(range(0, steps + 1, record_every))
    if keep[-1] != steps:
        keep.append(steps)
    out = np.empty((len(keep), x.size))
    out[0] = x
    slot = 1
    for i in range(steps):
        t = t0 + i * h
        k1 = rhs(t, x)
        k2 = rhs(t + 0.5 * h, x + 0.5 * h * k1)
        k3 = rhs(t + 0.5 * h, x + 0.5 * h * k2)
        k4 = rhs(t + h, x + h * k3)
        x = x + (h / 6.0) * (k1 + 2 * k2 + 2 * k3 + k4)
        _guard(x, t0 + (i + 1) * h, bound)
        if slot < len(keep) and keep[slot] == i + 1:
            out[slot] = x
            slot += 1
    times = t0 + h * np.asarray(keep, dtype=float)
    return times, out, h


def ode_simulate(
    drift: Field, x0, T: float, h: float, bound: float = DEFAULT_BOUND, record_every: int = 1
) -> Trajectory:
    """Classical fixed-step RK4 for x' = drift(x) on [0, T].

    If T/h is not an integer the step is shrunk to T / ceil(T/h).
    """
    times, states, h_used = _rk4(lambda t, x: np.asarray(drift(x), dtype=float), x0, 0.0, T, h, bound, record_every)
    return Trajectory(times, states, {"integrator": "rk4", "h": h_used})


def richardson_error(drift: Field, x0, T: float, h: float) -> float:
    """Step-halving error estimate |x_h(T) - x_{h/2}(T)| / 15 for RK4."""
    a = ode_simulate(drift, x0, T, h).final
    b = ode_simulate(drift, x0, T, h / 2).final
    return float(np.linalg.norm(a - b)) / 15.0


def oscillatory_step(noise: OscillatoryNoise, h: float = 1e-3) -> float:
    """Largest admissible step: at most ``h`` and at least 50 steps per period 2 pi / eta^2."""
    return min(h, noise.period / 50.0)


def oscillatory_simulate(
    g: VectorFieldSystem,
    noise: OscillatoryNoise,
    x0,
    T: float,
    h: float | None = None,
    bound: float = DEFAULT_BOUND,
    compiled: bool | None = None,
) -> Trajectory:
    """Finite-eta system x' = g_0 + g_1 u[1]' + g_2 u[2]' with the analytic derivative of the input.

    Classical RK4 on a uniform grid; the default step is :func:`oscillatory_step`.
    A compiled loop is used when the system carries a kernel.
    """
    if g.m != 2:
        raise InvalidDimensionError("the oscillatory driver has two noise channels")
    h = oscillatory_step(noise) if h is None else h
    x = _as_state(x0, g.n)
    use_kernel = g.kernel is not None if compiled is None else compiled
    if use_kernel:
        from ._kernels import rk4_oscillatory

        steps, h_used = _uniform_steps(T, h)
        states, status = rk4_oscillatory(
            g.kernel, x, 0.0, h_used, steps, float(noise.eta), float(noise.b1), float(noise.b2), float(bound)
        )
        if status >= 0:
            bad = states[-1]
            t_bad = status * h_used
            if not np.all(np.isfinite(bad)):
                raise NumericalFailureError(f"non-finite state at t = {t_bad:.17g}")
            raise BlowUpError(t_bad, bound)
        times = h_used * np.arange(steps + 1)
    else:
        from .signals import oscillatory_derivative

        def rhs(t, y):
            return g.stack(y) @ oscillatory_derivative(noise, t)

        times, states, h_used = _rk4(rhs, x, 0.0, T, h, bound)
    meta = {"integrator": "rk4-oscillatory", "h": h_used, "eta": noise.eta, "b1": noise.b1, "b2": noise.b2}
    return Trajectory(times, states, meta)


@dataclass(eq=False)
class EnsembleResult:
    """Outcome of a batch of SDE paths, one row per seed.

    ``blowup_time`` is NaN for paths that stayed in the bounding box; for the
    others the state is frozen at its last admissible value.
    """

    seeds: np.ndarray
    final: np.ndarray
    max_abs: np.ndarray
    blowup_time: np.ndarray
    noise_total: np.ndarray | None = None
    paths: np.ndarray | None = None
    times: np.ndarray | None = None

    @property
    def ok(self) -> np.ndarray:
        return np.isnan(self.blowup_time)


def _wiener_increments(seed: int, steps: int, m: int, h: float) -> np.ndarray:
    return np.random.default_rng(seed).standard_normal((steps, m)) * math.sqrt(h)


def _diffusion(g: VectorFieldSystem, x: np.ndarray) -> np.ndarray:
    return np.stack([g.field(j, x) for j in range(1, g.m + 1)], axis=-1)


def sde_ensemble(
    g: VectorFieldSystem,
    mode: str,
    x0,
    T: float,
    h: float,
    seeds: Sequence[int],
    bound: float = DEFAULT_BOUND,
    record: bool = False,
    return_noise: bool = False,
    chunk: int = 1000,
) -> EnsembleResult:
    """Simulate one path per seed, vectorised over seeds.

    ``mode='ito'`` reads g_0 as the Ito drift and uses Euler-Maruyama;
    ``mode='stratonovich'`` reads the system in Stratonovich form and uses the
    Heun predictor-corrector. Path ``i`` depends only on ``seeds[i]``.
    Fields must accept batched states of shape ``(P, n)``.
    """
    if mode not in ("ito", "stratonovich"):
        raise InvalidConfigError(f"unknown SDE mode {mode!r}")
    if g.m < 1:
        raise InvalidDimensionError("need at least one diffusion field")
    steps, h = _uniform_steps(T, h)
    x0 = _as_state(x0, g.n)
    seeds = np.asarray(list(seeds), dtype=np.int64)
    P = seeds.size
    final = np.empty((P, g.n))
    max_abs = np.empty(P)
    blowup = np.full(P, np.nan)
    noise_total = np.empty((P, g.m)) if return_noise else None
    paths = np.empty((P, steps + 1, g.n)) if record else None
    for lo in range(0, P, chunk):
        sl = slice(lo, min(P, lo + chunk))
        dW = np.stack([_wiener_increments(int(s), steps, g.m, h) for s in seeds[sl]], axis=1)
        if return_noise:
            noise_total[sl] = dW.sum(axis=0)
        x = np.tile(x0, (dW.shape[1], 1))
        alive = np.ones(x.shape[0], dtype=bool)
        peak = np.max(np.abs(x), axis=1)
        bt = np.full(x.shape[0], np.nan)
        if record:
            paths[sl, 0] = x
        with np.errstate(all="ignore"):
            for i in range(steps):
                dw = dW[i]
                if mode == "ito":
                    new = x + g.field(0, x) * h + np.einsum("pnm,pm->pn", _diffusion(g, x), dw)
                else:
                    f0, G0 = g.field(0, x), _diffusion(g, x)
                    pred = x + f0 * h + np.einsum("pnm,pm->pn", G0, dw)
                    f1, G1 = g.field(0, pred), _diffusion(g, pred)
                    new = x + 0.5 * (f0 + f1) * h + 0.5 * np.einsum("pnm,pm->pn", G0 + G1, dw)
                size = np.max(np.abs(new), axis=1)
                bad = alive & ~(size <= bound)
                bt[bad] = (i + 1) * h
                alive &= ~bad
                x = np.where(alive[:, None], new, x)
                peak = np.where(alive, np.maximum(peak, size), peak)
                if record:
                    paths[sl, i + 1] = x
        final[sl] = x
        max_abs[sl] = peak
        blowup[sl] = bt
    times = h * np.arange(steps + 1) if record else None
    return EnsembleResult(seeds, final, max_abs, blowup, noise_total, paths, times)


def sde_simulate(
    g: VectorFieldSystem,
    mode: str,
    x0,
    T: float,
    h: float,
    seed: int,
    bound: float = DEFAULT_BOUND,
) -> Trajectory:
    """Single SDE sample path; identical to row ``seed`` of :func:`sde_ensemble`."""
    res = sde_ensemble(g, mode, x0, T, h, [seed], bound=bound, record=True)
    if not res.ok[0]:
        raise BlowUpError(float(res.blowup_time[0]), bound)
    meta = {
        "integrator": "euler-maruyama" if mode == "ito" else "stratonovich-heun",
        "h": float(res.times[1] - res.times[0]),
        "seed": int(seed),
    }
    return Trajectory(res.times, res.paths[0], meta)
