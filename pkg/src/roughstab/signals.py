"""Driving signals and their level-2 lifts.

Channel 0 of every driver is time itself, so a driver with ``m`` noise channels
produces rough paths of dimension ``m + 1``.

The oscillatory driver is

    u[1](t) = b1 (cos(eta^2 t) - 1) / eta,    u[2](t) = b2 sin(eta^2 t) / eta,

whose level-1 part vanishes as eta grows while the area between channels 1 and
2 accumulates at the constant rate b1 b2 / 2.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import IndexRangeError, InvalidIntervalError, InvalidParameterError
from .paths import GridRoughPath, SampledPath, lift_piecewise_linear
from .tensor_algebra import LevelTwoElement

__all__ = [
    "OscillatoryNoise",
    "WienerConfig",
    "RateMatrix",
    "oscillatory_value",
    "oscillatory_derivative",
    "oscillatory_lift_exact",
    "oscillatory_rough_path",
    "sample_oscillatory",
    "limit_rough_path_oscillatory",
    "oscillatory_rate_matrix",
    "constant_rate_rough_path",
    "wong_zakai_wiener",
    "wiener_limit_rate_matrix",
    "antisymmetric_area",
]


@dataclass(frozen=True)
class OscillatoryNoise:
    b1: float
    b2: float
    eta: int

    def __post_init__(self):
        if int(self.eta) != self.eta or self.eta < 1:
            raise InvalidParameterError(f"eta must be a positive integer, got {self.eta}")

    @property
    def omega(self) -> float:
        return float(self.eta) ** 2

    @property
    def period(self) -> float:
        return 2.0 * math.pi / self.omega


@dataclass(frozen=True)
class WienerConfig:
    dims: int
    horizon: float
    cells: int
    seed: int

    def __post_init__(self):
        if self.dims < 1:
            raise InvalidParameterError("need at least one Wiener channel")
        if not self.horizon > 0:
            raise InvalidParameterError("horizon must be positive")
        if self.cells < 1:
            raise InvalidParameterError("need at least one cell")


@dataclass(frozen=True, eq=False)
class RateMatrix:
    """Constant rate of the level-2 part: U^2_{s,t}[k, j] = gamma[k, j] (t - s).

    Index 0 is the time channel.
    """

    gamma: np.ndarray

    def __post_init__(self):
        g = np.array(self.gamma, dtype=float)
        if g.ndim != 2 or g.shape[0] != g.shape[1] or g.shape[0] < 1:
            raise InvalidParameterError(f"rate matrix must be square, got shape {g.shape}")
        g.setflags(write=False)
        object.__setattr__(self, "gamma", g)

    @property
    def m(self) -> int:
        return self.gamma.shape[0] - 1

    def __array__(self, dtype=None, copy=None):
        return np.asarray(self.gamma, dtype=dtype)


def oscillatory_value(noise: OscillatoryNoise, t):
    """(t, u[1](t), u[2](t)); ``t`` may be a scalar or an array (stacked on the last axis)."""
    t = np.asarray(t, dtype=float)
    w = noise.omega
    return np.stack(
        [t, noise.b1 * (np.cos(w * t) - 1.0) / noise.eta, noise.b2 * np.sin(w * t) / noise.eta],
        axis=-1,
    )


def oscillatory_derivative(noise: OscillatoryNoise, t):
    t = np.asarray(t, dtype=float)
    w = noise.omega
    return np.stack(
        [np.ones_like(t), -noise.b1 * noise.eta * np.sin(w * t), noise.b2 * noise.eta * np.cos(w * t)],
        axis=-1,
    )


def _check_interval(s: float, t: float) -> None:
    if s < 0 or t < s:
        raise InvalidIntervalError(f"need 0 <= s <= t, got s={s}, t={t}")


def oscillatory_lift_exact(noise: OscillatoryNoise, s: float, t: float) -> LevelTwoElement:
    """Level-2 increment of the oscillatory driver over [s, t] from closed-form antiderivatives."""
    _check_interval(s, t)
    b1, b2, eta, w = noise.b1, noise.b2, float(noise.eta), noise.omega
    us, ut = oscillatory_value(noise, s), oscillatory_value(noise, t)
    delta = ut - us

    def area12(tau):
        # antiderivative of u[1] u[2]' = b1 b2 (cos^2 - cos)
        return b1 * b2 * (0.5 * tau + math.sin(2 * w * tau) / (4 * w) - math.sin(w * tau) / w)

    def int_u1(tau):
        return b1 / eta * (math.sin(w * tau) / w - tau)

    def int_u2(tau):
        return -b2 / eta * math.cos(w * tau) / w

    l2 = 0.5 * np.outer(delta, delta)
    l2[1, 2] = area12(t) - area12(s) - us[1] * delta[2]
    # int_s^t (tau - s) du[j] = (t - s) u[j](t) - int_s^t u[j]
    l2[0, 1] = (t - s) * ut[1] - (int_u1(t) - int_u1(s))
    l2[0, 2] = (t - s) * ut[2] - (int_u2(t) - int_u2(s))
    for j, k in ((1, 2), (0, 1), (0, 2)):
        l2[k, j] = delta[j] * delta[k] - l2[j, k]
    return LevelTwoElement(1.0, delta, l2)


def oscillatory_rough_path(noise: OscillatoryNoise, times) -> GridRoughPath:
    """Exact oscillatory lift, one closed-form increment per grid cell."""
    times = np.asarray(times, dtype=float)
    cells = [oscillatory_lift_exact(noise, a, b) for a, b in zip(times[:-1], times[1:])]
    return GridRoughPath.from_increments(times, cells)


def sample_oscillatory(noise: OscillatoryNoise, times) -> SampledPath:
    times = np.asarray(times, dtype=float)
    return SampledPath(times, oscillatory_value(noise, times))


def oscillatory_rate_matrix(b1: float, b2: float) -> RateMatrix:
    c = 0.5 * b1 * b2
    return RateMatrix(np.array([[0.0, 0.0, 0.0], [0.0, 0.0, c], [0.0, -c, 0.0]]))


def limit_rough_path_oscillatory(
    b1: float, b2: float, s: float, t: float, time_area: bool = False
) -> LevelTwoElement:
    """eta -> infinity limit: pure drift in channel 0 plus constant-rate area.

    By default the time-time entry level2[0, 0] is dropped (it is of order
    (t - s)^2), which makes one rough-Euler step coincide with an explicit Euler
    step of the limit drift. Such elements satisfy Chen's relation everywhere
    except that entry. ``time_area=True`` keeps (t - s)^2 / 2 there and gives an
    exactly multiplicative functional.
    """
    _check_interval(s, t)
    h = t - s
    level2 = oscillatory_rate_matrix(b1, b2).gamma * h
    if time_area:
        level2[0, 0] = 0.5 * h * h
    return LevelTwoElement(1.0, [h, 0.0, 0.0], level2)


def constant_rate_rough_path(rate: RateMatrix, times, time_area: bool = False) -> GridRoughPath:
    """Rough path with level 1 = (dt, 0, ..., 0) and level 2 = gamma dt on every cell.

    ``oscillatory_rate_matrix`` gives the oscillatory limit on any grid; see
    :func:`limit_rough_path_oscillatory` for ``time_area``.
    """
    times = np.asarray(times, dtype=float)
    h = np.diff(times)
    d = rate.gamma.shape[0]
    l1 = np.zeros((h.size, d))
    l1[:, 0] = h
    l2 = h[:, None, None] * rate.gamma[None, :, :]
    if time_area:
        l2[:, 0, 0] = 0.5 * h * h
    return GridRoughPath(times, l1, l2)


def wong_zakai_wiener(cfg: WienerConfig) -> SampledPath:
    """Piecewise-linear interpolation of a discrete Wiener process on the uniform grid.

    Channels are independent with Var w_t = t. Bitwise reproducible for a given config.
    """
    rng = np.random.default_rng(cfg.seed)
    times = np.linspace(0.0, cfg.horizon, cfg.cells + 1)
    dw = rng.standard_normal((cfg.cells, cfg.dims)) * np.sqrt(np.diff(times))[:, None]
    values = np.vstack([np.zeros((1, cfg.dims)), np.cumsum(dw, axis=0)])
    return SampledPath(times, values)


def wiener_limit_rate_matrix(m: int) -> RateMatrix:
    """Stratonovich Wiener lift: U^2[j, j] = (t - s)/2 for noise channels, zero elsewhere."""
    if m < 1:
        raise InvalidParameterError("need at least one Wiener channel")
    gamma = np.zeros((m + 1, m + 1))
    gamma[range(1, m + 1), range(1, m + 1)] = 0.5
    return RateMatrix(gamma)


def antisymmetric_area(signal: SampledPath, j: int, k: int) -> float:
    """Levy area 1/2 (L2[j, k] - L2[k, j]) of the whole piecewise-linear signal."""
    d = signal.dim
    if not (0 <= j < d and 0 <= k < d):
        raise IndexRangeError(f"channels must lie in [0, {d}), got {j}, {k}")
    _, l2 = lift_piecewise_linear(signal).pair_increments(0)
    whole = l2[-1]
    return 0.5 * float(whole[j, k] - whole[k, j])
