"""Scenario files, the scenario runner and the two studies behind the figures.

A scenario file is line-oriented ``key = value`` text with ``#`` comments::

    name = fig2-eta100
    system = motivational-2d
    driver = oscillatory(3, 4, 100)
    horizon = 1
    step = 1e-3
    x0 = 1, 1
    lyapunov = quadratic
    output = out/fig2-eta100
"""
from __future__ import annotations

import json
import math
import os
import platform
import re
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field, replace
from pathlib import Path

import numpy as np

from . import __version__, csvio, plotting
from .dynamics import (
    Trajectory,
    VectorFieldSystem,
    limit_drift,
    ode_simulate,
    oscillatory_simulate,
    oscillatory_step,
    rough_euler_simulate,
    sde_ensemble,
    stratonovich_to_ito_drift,
)
from .errors import InvalidConfigError
from .lyapunov import (
    check_asir,
    check_uasas_condition,
    parse_grid_spec,
    quadratic,
    radial_grid,
    stochastic_generator,
)
from .paths import lift_piecewise_linear, write_sampled_path
from .signals import (
    OscillatoryNoise,
    WienerConfig,
    oscillatory_rate_matrix,
    wong_zakai_wiener,
)
from .systems import builtin_system

__all__ = [
    "Driver",
    "Scenario",
    "RunManifest",
    "parse_driver",
    "parse_scenario",
    "load_scenario",
    "run_scenario",
    "ConvergenceTable",
    "convergence_study",
    "NoiseComparison",
    "compare_noise_types",
    "max_workers",
]

EXIT_OK, EXIT_BLOWUP, EXIT_CONFIG, EXIT_NONMONOTONE = 0, 2, 3, 4

_DRIVER_ARITY = {"oscillatory": 3, "oscillatory-limit": 2, "wiener": 2, "none": 0}


@dataclass(frozen=True)
class Driver:
    kind: str
    params: tuple = ()

    def __post_init__(self):
        if self.kind not in _DRIVER_ARITY:
            raise InvalidConfigError(f"unknown driver {self.kind!r}")
        if len(self.params) != _DRIVER_ARITY[self.kind]:
            raise InvalidConfigError(
                f"driver {self.kind} takes {_DRIVER_ARITY[self.kind]} parameters, got {len(self.params)}"
            )

    @property
    def noise(self) -> OscillatoryNoise:
        b1, b2, eta = self.params
        return OscillatoryNoise(b1, b2, int(eta))

    def __str__(self):
        if not self.params:
            return self.kind
        return f"{self.kind}({', '.join(csvio.fmt(p) for p in self.params)})"


def parse_driver(text: str) -> Driver:
    m = re.fullmatch(r"\s*([a-z][a-z-]*)\s*(?:\((.*)\))?\s*", text)
    if not m:
        raise InvalidConfigError(f"cannot parse driver {text!r}")
    kind, args = m.group(1), m.group(2)
    params = ()
    if args is not None and args.strip():
        try:
            params = tuple(float(a) for a in args.split(","))
        except ValueError:
            raise InvalidConfigError(f"non-numeric driver parameter in {text!r}") from None
    if kind == "wiener":
        params = tuple(int(p) for p in params)
    elif kind == "oscillatory" and len(params) == 3:
        if params[2] != int(params[2]) or params[2] < 1:
            raise InvalidConfigError("eta must be a positive integer")
        params = (params[0], params[1], int(params[2]))
    return Driver(kind, params)


@dataclass(frozen=True)
class Scenario:
    name: str
    system: str
    driver: Driver
    horizon: float = 1.0
    step: float = 1e-3
    x0: tuple = ()
    lyapunov: str | None = None
    output: str = "out"
    grid: str | None = None

    def __post_init__(self):
        if self.system not in ("motivational-2d", "example-1d"):
            raise InvalidConfigError(f"unknown system {self.system!r}")
        if not (self.horizon > 0 and self.step > 0):
            raise InvalidConfigError("horizon and step must be positive")
        n = builtin_system(self.system).n
        if len(self.x0) != n:
            raise InvalidConfigError(f"x0 needs {n} components for {self.system}")
        if self.lyapunov not in (None, "quadratic"):
            raise InvalidConfigError(f"unknown Lyapunov candidate {self.lyapunov!r}")

    def as_dict(self) -> dict:
        d = asdict(self)
        d["driver"] = str(self.driver)
        d["x0"] = list(self.x0)
        return d


def parse_scenario(text: str, **overrides) -> Scenario:
    values: dict = {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        key, sep, value = line.partition("=")
        if not sep:
            raise InvalidConfigError(f"line {lineno}: expected 'key = value'")
        values[key.strip()] = value.strip()
    values.update({k: v for k, v in overrides.items() if v is not None})
    unknown = set(values) - {f.name for f in Scenario.__dataclass_fields__.values()}
    if unknown:
        raise InvalidConfigError(f"unknown scenario keys {sorted(unknown)}")
    try:
        kw = dict(
            name=str(values.get("name", "scenario")),
            system=str(values["system"]),
            driver=values["driver"] if isinstance(values["driver"], Driver) else parse_driver(values["driver"]),
            horizon=float(values.get("horizon", 1.0)),
            step=float(values.get("step", 1e-3)),
            output=str(values.get("output", "out")),
            grid=values.get("grid"),
        )
        x0 = values.get("x0")
        if x0 is None:
            x0 = ",".join(["1"] * builtin_system(kw["system"]).n)
        kw["x0"] = tuple(float(v) for v in str(x0).replace(",", " ").split()) if isinstance(x0, str) else tuple(x0)
        lyap = values.get("lyapunov")
        kw["lyapunov"] = None if lyap in (None, "", "none") else str(lyap)
    except KeyError as exc:
        raise InvalidConfigError(f"missing scenario key {exc.args[0]!r}") from None
    except ValueError as exc:
        raise InvalidConfigError(str(exc)) from None
    return Scenario(**kw)


def load_scenario(path: str | Path, **overrides) -> Scenario:
    return parse_scenario(Path(path).read_text(encoding="utf-8"), **overrides)


def max_workers() -> int:
    try:
        return max(1, int(os.environ.get("ROUGHSTAB_THREADS", "1")))
    except ValueError:
        return 1


@dataclass
class RunManifest:
    scenario: dict
    seeds: list
    version: str
    wall_clock: float
    files: list = field(default_factory=list)
    summary: list = field(default_factory=list)
    exit_code: int = EXIT_OK

    def add(self, path: Path, root: Path) -> None:
        self.files.append({"path": str(path.relative_to(root)), "sha256": csvio.sha256_file(path)})

    def to_json(self, path: str | Path) -> Path:
        payload = asdict(self)
        payload["platform"] = platform.platform()
        Path(path).write_text(json.dumps(payload, indent=2, sort_keys=True) + "\n", encoding="utf-8")
        return Path(path)


def _limit_drift_for(s: Scenario, g: VectorFieldSystem):
    if s.driver.kind in ("oscillatory", "oscillatory-limit"):
        b1, b2 = s.driver.params[:2]
        return limit_drift(g, oscillatory_rate_matrix(b1, b2))
    if s.driver.kind == "none":
        return lambda x: g.field(0, x)
    return None


def simulate(s: Scenario) -> Trajectory:
    """Trajectory of the scenario's system under its driver."""
    g = builtin_system(s.system)
    kind = s.driver.kind
    if kind == "oscillatory":
        noise = s.driver.noise
        sub = max(1, math.ceil(s.step / oscillatory_step(noise, s.step) - 1e-9))
        return oscillatory_simulate(g, noise, s.x0, s.horizon, s.step / sub)
    if kind == "wiener":
        seed, cells = s.driver.params
        w = wong_zakai_wiener(WienerConfig(g.m, s.horizon, cells, seed))
        traj = rough_euler_simulate(g, lift_piecewise_linear(w.with_time_channel()), s.x0)
        traj.meta.update({"driver": "wong-zakai", "seed": seed, "h": s.horizon / cells})
        return traj
    traj = ode_simulate(_limit_drift_for(s, g), s.x0, s.horizon, s.step)
    traj.meta["driver"] = kind
    return traj


def _decimate(traj: Trajectory, step: float) -> Trajectory:
    """Keep states on the multiples of ``step`` (the scenario output grid)."""
    h = traj.times[1] - traj.times[0]
    stride = max(1, int(round(step / h)))
    idx = np.arange(0, len(traj.times), stride)
    if idx[-1] != len(traj.times) - 1:
        idx = np.append(idx, len(traj.times) - 1)
    return Trajectory(traj.times[idx], traj.states[idx], dict(traj.meta))


def run_scenario(s: Scenario, root: str | Path | None = None) -> RunManifest:
    """Run one scenario and write its CSVs, figures and ``manifest.json`` into ``s.output``.

    Raises :class:`~roughstab.errors.BlowUpError` when the state leaves the bounding box.
    """
    started = time.perf_counter()
    out = Path(root or ".") / s.output
    out.mkdir(parents=True, exist_ok=True)
    g = builtin_system(s.system)
    seeds = [s.driver.params[0]] if s.driver.kind == "wiener" else []
    manifest = RunManifest(s.as_dict(), seeds, __version__, 0.0)

    traj = simulate(s)
    if s.driver.kind == "oscillatory":
        traj = _decimate(traj, s.step)
    traj.meta.update({"scenario": s.name, "system": s.system})
    files = [traj.to_csv(out / "trajectory.csv")]
    files.append(plotting.write_gnuplot("trajectory.csv", out / "trajectory.gp", g.n, s.name))
    files.append(plotting.plot_states(traj.times, traj.states, out / "trajectory.png", s.name))

    if s.lyapunov:
        v = quadratic(g.n)
        vt = v(traj.states)
        files.append(
            csvio.write_array(out / "v1.csv", ["t", "v"], np.column_stack([traj.times, vt]), {"lyapunov": "xTx"})
        )
        files.append(plotting.plot_overlay([("$V^1$", traj.times, vt)], out / "v1.png", s.name, "$V^1$"))
        grid_kw = parse_grid_spec(s.grid)
        local = grid_kw.pop("local", 1.0)
        if "rmin" in grid_kw:
            grid_kw["r_min"] = grid_kw.pop("rmin")
        drift = _limit_drift_for(s, g)
        if drift is not None:
            report = check_asir(v, drift, n=g.n, local_radius=local, **grid_kw)
        else:
            # Wiener driver: certify with the Stratonovich generator in place of DV
            report = check_asir(
                v,
                stratonovich_to_ito_drift(g),
                radial_grid(g.n, **grid_kw),
                local_radius=local,
                generator=lambda x: stochastic_generator(v, g, x),
            )
            uasas = check_uasas_condition(v, g, report.grid)
            manifest.summary.append(
                f"uasas_condition={'holds' if uasas.holds else 'fails'}"
                + ("" if uasas.holds else f" witness_channel={uasas.channel} value={uasas.value:.6g}")
            )
        files.append(report.to_csv(out / "stability.csv"))
        manifest.summary.insert(0, report.summary())

    for f in files:
        manifest.add(f, out)
    manifest.wall_clock = time.perf_counter() - started
    manifest.to_json(out / "manifest.json")
    return manifest


@dataclass
class ConvergenceTable:
    etas: list
    gaps: list
    monotone: bool | None

    def rows(self):
        for i, (eta, gap) in enumerate(zip(self.etas, self.gaps)):
            ok = True if i == 0 else gap < self.gaps[i - 1]
            yield eta, gap, ok

    def to_csv(self, path) -> Path:
        return csvio.write_table(path, ["eta", "gap", "decreasing"], self.rows(), {"monotone": self.monotone})


def _finite_eta_on_grid(args):
    s, eta = args
    b1, b2 = s.driver.params[:2]
    s_eta = replace(s, driver=Driver("oscillatory", (b1, b2, int(eta))))
    return _decimate(simulate(s_eta), s.step)


def convergence_study(etas, s: Scenario, workers: int | None = None) -> ConvergenceTable:
    """Sup-norm gap between finite-eta and limit trajectories on the scenario's output grid.

    ``monotone`` is ``None`` for a single eta (nothing to compare).
    """
    if s.driver.kind not in ("oscillatory", "oscillatory-limit"):
        raise InvalidConfigError("convergence needs an oscillatory driver")
    etas = [int(e) for e in etas]
    limit = simulate(replace(s, driver=Driver("oscillatory-limit", tuple(s.driver.params[:2]))))
    jobs = [(s, eta) for eta in etas]
    workers = workers or max_workers()
    if workers > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=min(workers, len(jobs))) as pool:
            trajs = list(pool.map(_finite_eta_on_grid, jobs))
    else:
        trajs = [_finite_eta_on_grid(j) for j in jobs]
    gaps = []
    for tr in trajs:
        gaps.append(float(np.max(np.abs(tr.states - limit.at(tr.times)))))
    monotone = None if len(gaps) < 2 else all(b < a for a, b in zip(gaps, gaps[1:]))
    return ConvergenceTable(etas, gaps, monotone)


@dataclass
class NoiseComparison:
    etas: list
    deterministic_excursion: list
    steps: list
    stochastic_median_excursion: list
    stochastic_blowups: list
    n_seeds: int

    def to_csv(self, path) -> Path:
        rows = [("deterministic", "eta", e, x, 0) for e, x in zip(self.etas, self.deterministic_excursion)]
        rows += [
            ("stochastic", "h", h, x, b)
            for h, x, b in zip(self.steps, self.stochastic_median_excursion, self.stochastic_blowups)
        ]
        return csvio.write_table(
            path, ["noise", "parameter", "value", "max_excursion", "blowups"], rows, {"seeds": self.n_seeds}
        )


def compare_noise_types(
    s: Scenario,
    seeds,
    etas=(10, 100),
    steps=(1e-2, 1e-3, 1e-4),
    deterministic_horizon: float = 5.0,
    stochastic_horizon: float = 1.0,
) -> NoiseComparison:
    """Excursions from x0 = 0 of the scalar example under oscillatory and Wiener inputs.

    Deterministic: maximum |x| along the finite-eta solution, one row per eta.
    Stochastic: median over seeds of the maximum |x| along Stratonovich-Heun
    paths, one row per step size; blown-up paths are counted, not fatal.
    """
    if s.system != "example-1d":
        raise InvalidConfigError("the noise comparison is defined for the example-1d system")
    g = builtin_system("example-1d")
    b1, b2 = (s.driver.params[:2] if s.driver.kind.startswith("oscillatory") else (1.0, 1.0))
    det = []
    for eta in etas:
        tr = oscillatory_simulate(g, OscillatoryNoise(b1, b2, int(eta)), [0.0], deterministic_horizon)
        det.append(float(np.max(np.abs(tr.states))))
    seeds = list(seeds)
    med, blow = [], []
    for h in steps:
        res = sde_ensemble(g, "stratonovich", [0.0], stochastic_horizon, h, seeds)
        med.append(float(np.median(res.max_abs)))
        blow.append(int((~res.ok).sum()))
    return NoiseComparison(list(etas), det, list(steps), med, blow, len(seeds))
