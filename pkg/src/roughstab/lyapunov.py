"""Lie derivatives, rough and stochastic generators, and grid-certified stability verdicts.

Certification is numerical: conditions are evaluated on a finite log-radial
grid and verdicts hold "up to the tested radius".
"""
from __future__ import annotations

import enum
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable

import numpy as np

from . import csvio
from .dynamics import VectorFieldSystem, jacobian_fd, sde_ensemble
from .errors import DomainError, EquilibriumViolationError, InvalidParameterError
from .signals import RateMatrix

__all__ = [
    "ScalarFunction",
    "quadratic",
    "Verdict",
    "StabilityReport",
    "UasasResult",
    "lie_derivative",
    "second_lie_derivative",
    "system_second_lie_derivative",
    "dv_along_limit",
    "rough_generator",
    "stochastic_generator",
    "generator_monte_carlo",
    "check_uasas_condition",
    "radial_grid",
    "parse_grid_spec",
    "check_asir",
]

SIGN_TOL = 1e-9
MIN_DECAY_RATE = 1e-6
GRAD_STEP = 6e-6
NESTED_STEP = 1e-4


def _gradient_fd(f, x, scale=GRAD_STEP):
    return jacobian_fd(lambda y: np.asarray(f(y))[..., None], x, scale)[..., 0, :]


@dataclass(frozen=True)
class ScalarFunction:
    """Candidate Lyapunov function v on the ball |x| <= ``radius``.

    ``grad`` and ``hessian`` are optional analytic derivatives; missing ones are
    replaced by central differences.
    """

    func: Callable
    grad: Callable | None = None
    hessian: Callable | None = None
    radius: float = np.inf
    name: str = "v"

    def check_domain(self, x):
        x = np.asarray(x, dtype=float)
        if np.any(np.linalg.norm(x, axis=-1) > self.radius):
            raise DomainError(f"point outside the domain |x| <= {self.radius}")
        return x

    def __call__(self, x):
        return np.asarray(self.func(self.check_domain(x)), dtype=float)

    def gradient(self, x):
        x = self.check_domain(x)
        if self.grad is not None:
            return np.asarray(self.grad(x), dtype=float)
        return _gradient_fd(self.func, x)

    def hess(self, x):
        x = self.check_domain(x)
        if self.hessian is not None:
            return np.asarray(self.hessian(x), dtype=float)
        return jacobian_fd(self.gradient, x, NESTED_STEP)

    def scaled(self, c: float) -> "ScalarFunction":
        return ScalarFunction(
            lambda x: c * self.func(x),
            None if self.grad is None else (lambda x: c * self.grad(x)),
            None if self.hessian is None else (lambda x: c * self.hessian(x)),
            self.radius,
            f"{c:g}*{self.name}",
        )


def quadratic(n: int, matrix=None, radius: float = np.inf) -> ScalarFunction:
    """v(x) = x^T P x (P = identity by default) with analytic derivatives."""
    P = np.eye(n) if matrix is None else np.asarray(matrix, dtype=float)
    S = P + P.T
    return ScalarFunction(
        func=lambda x: np.einsum("...i,ij,...j->...", x, P, x),
        grad=lambda x: x @ S.T,
        hessian=lambda x: np.broadcast_to(S, np.shape(x)[:-1] + S.shape),
        radius=radius,
        name="xTx" if matrix is None else "xTPx",
    )


def lie_derivative(v: ScalarFunction, g: Callable, x) -> np.ndarray:
    """(L_g v)(x) = grad v(x) . g(x)."""
    x = v.check_domain(x)
    return np.einsum("...i,...i->...", v.gradient(x), np.asarray(g(x), dtype=float))


def second_lie_derivative(v: ScalarFunction, gj: Callable, gk: Callable, x, gj_jacobian: Callable | None = None):
    """(L_gk L_gj v)(x) = grad(L_gj v)(x) . g_k(x).

    With an analytic Hessian of v and a Jacobian of g_j the inner gradient is
    H g_j + (dg_j/dx)^T grad v; otherwise it is taken by nested central differences.
    """
    x = v.check_domain(x)
    gk_x = np.asarray(gk(x), dtype=float)
    if v.hessian is not None and gj_jacobian is not None:
        inner = np.einsum("...ab,...b->...a", v.hess(x), gj(x))
        inner = inner + np.einsum("...ba,...b->...a", gj_jacobian(x), v.gradient(x))
    else:
        inner = _gradient_fd(lambda y: lie_derivative(v, gj, y), x, NESTED_STEP)
    return np.einsum("...i,...i->...", inner, gk_x)


def system_second_lie_derivative(v: ScalarFunction, g: VectorFieldSystem, j: int, k: int, x):
    """L_{g_k} L_{g_j} v for fields of a system, using its Jacobians."""
    return second_lie_derivative(
        v, g.fields[j], g.fields[k], x, gj_jacobian=lambda y: g.jacobian(j, y)
    )


def dv_along_limit(v: ScalarFunction, drift: Callable, x) -> np.ndarray:
    """DV^1(x) = grad v(x) . drift(x) for a limit drift from ``limit_drift``."""
    return lie_derivative(v, drift, x)


def rough_generator(v: ScalarFunction, g: VectorFieldSystem, rate: RateMatrix | np.ndarray, x):
    """L_{g_0} v + sum_{j,k} rate[k, j] L_{g_k} L_{g_j} v for a constant-rate driver."""
    gam = np.asarray(rate, dtype=float)
    out = lie_derivative(v, g.fields[0], x)
    for j in range(g.m + 1):
        for k in range(g.m + 1):
            if gam[k, j] != 0:
                out = out + gam[k, j] * system_second_lie_derivative(v, g, j, k, x)
    return out


def stochastic_generator(v: ScalarFunction, g: VectorFieldSystem, x):
    """Generator of v along the Stratonovich system: L_{g_0} v + 1/2 sum_{j>=1} L_{g_j} L_{g_j} v."""
    if g.m < 1:
        raise InvalidParameterError("need at least one diffusion field")
    out = lie_derivative(v, g.fields[0], x)
    for j in range(1, g.m + 1):
        out = out + 0.5 * system_second_lie_derivative(v, g, j, j, x)
    return out


def generator_monte_carlo(
    v: ScalarFunction,
    g: VectorFieldSystem,
    x,
    delta: float = 1e-3,
    n_paths: int = 10_000,
    seed: int = 0,
    control_variate: bool = False,
    substeps: int = 1,
) -> tuple[float, float]:
    """Sample mean and standard error of (v(x_delta) - v(x)) / delta over Stratonovich-Heun paths.

    With ``control_variate`` the zero-mean martingale term sum_j L_{g_j} v(x) w_delta[j]
    is subtracted from every sample, which leaves the mean unchanged.
    """
    x = np.asarray(x, dtype=float)
    res = sde_ensemble(
        g, "stratonovich", x, delta, delta / substeps, range(seed, seed + n_paths), return_noise=True
    )
    samples = (v(res.final) - v(x)) / delta
    if control_variate:
        slopes = np.array([lie_derivative(v, g.fields[j], x) for j in range(1, g.m + 1)])
        samples = samples - res.noise_total @ slopes / delta
    return float(samples.mean()), float(samples.std(ddof=1) / np.sqrt(n_paths))


@dataclass(frozen=True)
class UasasResult:
    holds: bool
    channel: int | None = None
    point: np.ndarray | None = None
    value: float | None = None


def check_uasas_condition(v: ScalarFunction, g: VectorFieldSystem, grid, tol: float = SIGN_TOL) -> UasasResult:
    """Check L_{g_j} v = 0 for every diffusion channel j >= 1 at every grid point.

    Points are scanned in order, channels in increasing order; the first
    violation is returned as the witness.
    """
    grid = np.atleast_2d(np.asarray(grid, dtype=float))
    if grid.size == 0:
        raise InvalidParameterError("empty grid")
    values = np.stack([lie_derivative(v, g.fields[j], grid) for j in range(1, g.m + 1)], axis=1)
    bad = np.abs(values) > tol
    if not bad.any():
        return UasasResult(True)
    p, j = np.argwhere(bad)[0]
    return UasasResult(False, int(j) + 1, grid[p].copy(), float(values[p, j]))


def radial_grid(
    n: int,
    radius: float = 10.0,
    r_min: float = 1e-3,
    shells: int = 40,
    directions: int = 24,
    seed: int = 0,
) -> np.ndarray:
    """Log-radial grid: ``shells`` geometric radii times ``directions`` unit vectors.

    Ordered by radius, then direction. In 2-D the directions are equally spaced
    angles starting on the x1-axis; in 1-D they are +-1; in higher dimensions
    the coordinate axes are followed by seeded uniform directions.
    """
    if n < 1 or shells < 1 or directions < 1:
        raise InvalidParameterError("grid needs n, shells and directions >= 1")
    if n == 1:
        dirs = np.array([[1.0], [-1.0]])
    elif n == 2:
        ang = 2 * np.pi * np.arange(directions) / directions
        dirs = np.column_stack([np.cos(ang), np.sin(ang)])
    else:
        axes = np.vstack([np.eye(n), -np.eye(n)])
        extra = max(0, directions - axes.shape[0])
        rnd = np.random.default_rng(seed).standard_normal((extra, n))
        rnd /= np.linalg.norm(rnd, axis=1, keepdims=True)
        dirs = np.vstack([axes, rnd])
    radii = np.geomspace(r_min, radius, shells)
    return (radii[:, None, None] * dirs[None, :, :]).reshape(-1, n)


def parse_grid_spec(spec: str | None) -> dict:
    """``"radius=10,shells=40,directions=24,rmin=1e-3,local=1"`` -> keyword dict."""
    out: dict = {}
    if not spec:
        return out
    names = {"radius": float, "shells": int, "directions": int, "rmin": float, "local": float}
    for part in spec.split(","):
        key, _, value = part.partition("=")
        key = key.strip()
        if key not in names:
            raise InvalidParameterError(f"unknown grid key {key!r}")
        out[key] = names[key](value)
    return out


class Verdict(enum.IntEnum):
    NOT_CERTIFIED = 0
    STABLE = 1
    LOCALLY_ASIR = 2
    GLOBALLY_ASIR = 3

    @property
    def label(self) -> str:
        return {
            0: "not-certified",
            1: "stable-in-roughness",
            2: "locally-ASiR",
            3: "globally-ASiR",
        }[int(self)]


@dataclass(eq=False)
class StabilityReport:
    verdict: Verdict
    grid: np.ndarray
    dv: np.ndarray
    v_values: np.ndarray
    worst_value: float
    violations: np.ndarray
    margin: float
    fitted_rate: float
    sandwich: tuple[float, float]
    tested_radius: float
    local_radius: float
    reasons: list[str] = field(default_factory=list)

    def certifies(self, tier: Verdict) -> bool:
        return self.verdict >= tier

    def summary(self) -> str:
        label = self.verdict.label
        if self.verdict == Verdict.GLOBALLY_ASIR:
            label += f" (up to tested radius {self.tested_radius:g})"
        line = (
            f"verdict={label} points={len(self.grid)} worst_DV={self.worst_value:.6g} "
            f"margin={self.margin:.6g} violations={len(self.violations)}"
        )
        if self.reasons:
            line += " reasons=" + "; ".join(self.reasons)
        return line

    def to_csv(self, path: str | Path) -> Path:
        n = self.grid.shape[1]
        flags = self.dv > SIGN_TOL
        header = [f"x{i + 1}" for i in range(n)] + ["v", "DV", "violation"]
        rows = [
            [*pt, vv, dv, bool(fl)] for pt, vv, dv, fl in zip(self.grid, self.v_values, self.dv, flags)
        ]
        comments = {"verdict": self.verdict.label, "tested_radius": self.tested_radius}
        return csvio.write_table(path, header, rows, comments)


def check_asir(
    v: ScalarFunction,
    drift: Callable,
    grid: np.ndarray | None = None,
    n: int | None = None,
    radius: float = 10.0,
    local_radius: float = 1.0,
    tol: float = SIGN_TOL,
    min_rate: float = MIN_DECAY_RATE,
    generator: Callable | None = None,
    **grid_kw,
) -> StabilityReport:
    """Tiered stability verdict for the origin of x' = drift(x) from the candidate v.

    * stable-in-roughness: DV <= tol on the punctured grid and v is sandwiched
      between positive quadratic bounds;
    * locally-ASiR: additionally min(-DV / |x|^2) >= ``min_rate`` for |x| <= local_radius;
    * globally-ASiR: the same bound on the whole grid (up to ``radius``).

    ``generator`` replaces grad v . drift as the decay function (used for the
    stochastic generator of Wiener-driven systems); the drift still has to vanish
    at the origin.
    """
    if grid is None:
        if n is None:
            raise InvalidParameterError("give either a grid or the state dimension n")
        grid = radial_grid(n, radius=radius, **grid_kw)
    grid = np.atleast_2d(np.asarray(grid, dtype=float))
    n = grid.shape[1]
    origin = np.zeros(n)
    f0 = np.asarray(drift(origin), dtype=float)
    if np.linalg.norm(f0) > 1e-10:
        raise EquilibriumViolationError(f"drift at the origin is {f0.tolist()}, not zero")

    r = np.linalg.norm(grid, axis=1)
    keep = r > 0
    grid, r = grid[keep], r[keep]
    tested = float(r.max())
    vals = v(grid)
    dv = dv_along_limit(v, drift, grid) if generator is None else np.asarray(generator(grid), dtype=float)
    r2 = r * r
    reasons = []

    low, high = float(np.min(vals / r2)), float(np.max(vals / r2))
    if abs(float(v(origin))) > tol:
        reasons.append("v(0) != 0")
    if not low > tol:
        reasons.append("v is not bounded below by a positive quadratic")

    violations = grid[dv > tol]
    if len(violations):
        reasons.append(f"DV > {tol:g} at {len(violations)} points")

    rate = -dv / r2
    local = r <= local_radius
    margin = float(rate.min())
    fitted = float(rate.mean())
    if reasons:
        verdict = Verdict.NOT_CERTIFIED
    elif margin >= min_rate:
        verdict = Verdict.GLOBALLY_ASIR
    elif local.any() and rate[local].min() >= min_rate:
        verdict = Verdict.LOCALLY_ASIR
    else:
        verdict = Verdict.STABLE
    return StabilityReport(
        verdict=verdict,
        grid=grid,
        dv=dv,
        v_values=vals,
        worst_value=float(dv.max()),
        violations=violations,
        margin=margin,
        fitted_rate=fitted,
        sandwich=(low, high),
        tested_radius=tested,
        local_radius=local_radius,
        reasons=reasons,
    )
