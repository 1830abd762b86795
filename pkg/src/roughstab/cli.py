"""Command-line front end.

Exit codes: 0 success, 2 blow-up, 3 invalid configuration (including usage
errors), 4 non-monotone convergence, 5 stability verdict below the level requested with ``--require``.
"""
from __future__ import annotations

import argparse
import logging
import sys
from dataclasses import replace
from pathlib import Path

import numpy as np

from . import __version__, csvio, plotting
from .dynamics import jacobian_fd, limit_drift, stratonovich_to_ito_drift
from .errors import BlowUpError, InvalidConfigError, RoughStabError
from .experiments import (
    EXIT_BLOWUP,
    EXIT_CONFIG,
    EXIT_NONMONOTONE,
    EXIT_OK,
    Driver,
    Scenario,
    compare_noise_types,
    convergence_study,
    load_scenario,
    parse_scenario,
    run_scenario,
    simulate,
)
from .lyapunov import Verdict, check_asir, check_uasas_condition, parse_grid_spec, quadratic, radial_grid
from .paths import (
    GridRoughPath,
    SampledPath,
    dp_distance,
    lift_piecewise_linear,
    p_variation,
    read_sampled_path,
    write_sampled_path,
)
from .signals import (
    OscillatoryNoise,
    WienerConfig,
    constant_rate_rough_path,
    oscillatory_rate_matrix,
    oscillatory_rough_path,
    sample_oscillatory,
    wong_zakai_wiener,
)
from .systems import builtin_system

log = logging.getLogger("roughstab")
EXIT_VERDICT = 5


def _scenario_from_args(args, **defaults) -> Scenario:
    if args.scenario:
        s = load_scenario(args.scenario)
    else:
        text = "\n".join(f"{k} = {v}" for k, v in defaults.items())
        s = parse_scenario(text)
    if getattr(args, "eta", None) is not None:
        if s.driver.kind != "oscillatory":
            raise InvalidConfigError("--eta applies to oscillatory drivers only")
        b1, b2, _ = s.driver.params
        s = replace(s, driver=Driver("oscillatory", (b1, b2, args.eta)))
    if getattr(args, "seed", None) is not None:
        if s.driver.kind != "wiener":
            raise InvalidConfigError("--seed applies to wiener drivers only")
        s = replace(s, driver=Driver("wiener", (args.seed, s.driver.params[1])))
    if getattr(args, "out", None):
        s = replace(s, output=args.out)
    if getattr(args, "grid", None):
        s = replace(s, grid=args.grid)
    return s


def cmd_simulate(args) -> int:
    s = _scenario_from_args(args)
    manifest = run_scenario(s)
    for line in manifest.summary:
        print(line)
    print(f"wrote {len(manifest.files)} files to {s.output}")
    return EXIT_OK


def _lift_signal(args) -> tuple[SampledPath, GridRoughPath, dict]:
    if args.input:
        signal = read_sampled_path(args.input)
        return signal, lift_piecewise_linear(signal), {"source": args.input}
    times = np.linspace(0.0, args.horizon, args.cells + 1)
    if args.seed is not None:
        w = wong_zakai_wiener(WienerConfig(args.channels, args.horizon, args.cells, args.seed))
        signal = w.with_time_channel()
        return signal, lift_piecewise_linear(signal), {"driver": "wong-zakai", "seed": args.seed}
    eta = args.eta if args.eta is not None else 10
    noise = OscillatoryNoise(args.b1, args.b2, eta)
    meta = {"driver": "oscillatory", "eta": eta, "b1": args.b1, "b2": args.b2}
    return sample_oscillatory(noise, times), oscillatory_rough_path(noise, times), meta


def cmd_lift(args) -> int:
    signal, rough, meta = _lift_signal(args)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    write_sampled_path(signal, out / "signal.csv", meta)
    rough.to_csv(out / "rough_path.csv", meta)
    _, l2 = rough.pair_increments(0)
    whole = l2[-1]
    d = rough.dim
    print(f"cells={rough.n_cells} dim={d}")
    for j in range(d):
        for k in range(j + 1, d):
            print(f"levy_area[{j},{k}]={csvio.fmt(0.5 * (whole[j, k] - whole[k, j]))}")
    if rough.n_cells <= 2000:
        print(f"p_variation(p={args.p:g})={csvio.fmt(p_variation(signal, args.p))}")
    if meta.get("driver") == "oscillatory" and rough.n_cells <= 400:
        limit = constant_rate_rough_path(oscillatory_rate_matrix(args.b1, args.b2), rough.times, time_area=True)
        print(f"dp_distance_to_limit(p={args.p:g})={csvio.fmt(dp_distance(rough, limit, args.p))}")
    return EXIT_OK


def cmd_limit(args) -> int:
    """Jacobians at 0 of the limit drift (two-channel systems) and of the Ito drift."""
    g = builtin_system(args.system)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    header = [f"c{j + 1}" for j in range(g.n)]
    comments = {"system": g.name, "b1": args.b1, "b2": args.b2}
    if g.m == 2:
        gamma = oscillatory_rate_matrix(args.b1, args.b2)
        jac = jacobian_fd(limit_drift(g, gamma), np.zeros(g.n))
        print("rate matrix:\n" + np.array2string(gamma.gamma))
        print("limit drift Jacobian at 0:\n" + np.array2string(jac))
        csvio.write_array(out / "limit_drift.csv", header, jac, comments)
    ito = jacobian_fd(stratonovich_to_ito_drift(g), np.zeros(g.n))
    print("Ito drift Jacobian at 0:\n" + np.array2string(ito))
    csvio.write_array(out / "ito_drift.csv", header, ito, {"system": g.name})
    return EXIT_OK


def cmd_lyapunov(args) -> int:
    s = _scenario_from_args(
        args, name="lyapunov", system=args.system, driver=f"oscillatory-limit({args.b1}, {args.b2})"
    )
    g = builtin_system(s.system)
    v = quadratic(g.n)
    grid_kw = parse_grid_spec(s.grid)
    local = grid_kw.pop("local", 1.0)
    if "rmin" in grid_kw:
        grid_kw["r_min"] = grid_kw.pop("rmin")
    if s.driver.kind not in ("oscillatory", "oscillatory-limit"):
        raise InvalidConfigError("lyapunov analysis needs an oscillatory driver")
    b1, b2 = s.driver.params[:2]
    grid = radial_grid(g.n, **grid_kw)
    report = check_asir(v, limit_drift(g, oscillatory_rate_matrix(b1, b2)), grid, local_radius=local)
    out = Path(s.output)
    report.to_csv(out / "stability.csv")
    print(report.summary())
    uasas = check_uasas_condition(v, g, grid)
    if uasas.holds:
        print("uasas_condition=holds")
    else:
        pt = ",".join(csvio.fmt(c) for c in uasas.point)
        print(f"uasas_condition=fails channel={uasas.channel} point=({pt}) L_g v={csvio.fmt(uasas.value)}")
    if args.require:
        need = {"stable": Verdict.STABLE, "local": Verdict.LOCALLY_ASIR, "global": Verdict.GLOBALLY_ASIR}
        if not report.certifies(need[args.require]):
            return EXIT_VERDICT
    return EXIT_OK


def cmd_converge(args) -> int:
    s = _scenario_from_args(
        args,
        name="converge",
        system=args.system,
        driver=f"oscillatory-limit({args.b1}, {args.b2})",
        horizon=args.horizon,
        x0=args.x0,
    )
    table = convergence_study(args.etas, s)
    out = Path(s.output)
    table.to_csv(out / "convergence.csv")
    if len(table.etas) > 1:
        plotting.plot_convergence(table.etas, table.gaps, out / "convergence.png")
    for eta, gap, ok in table.rows():
        print(f"eta={eta} gap={csvio.fmt(gap)} {'ok' if ok else 'FAIL'}")
    return EXIT_NONMONOTONE if table.monotone is False else EXIT_OK


def cmd_compare(args) -> int:
    s = parse_scenario("system = example-1d\ndriver = oscillatory-limit(1, 1)\nx0 = 0")
    base = args.seed if args.seed is not None else 0
    cmp = compare_noise_types(s, range(base, base + args.seeds), etas=args.etas)
    out = Path(args.out)
    cmp.to_csv(out / "compare.csv")
    for eta, x in zip(cmp.etas, cmp.deterministic_excursion):
        print(f"deterministic eta={eta} max|x|={csvio.fmt(x)}")
    for h, x, b in zip(cmp.steps, cmp.stochastic_median_excursion, cmp.stochastic_blowups):
        print(f"stochastic h={h:g} median max|x|={csvio.fmt(x)} blowups={b}")
    return EXIT_OK


def cmd_figures(args) -> int:
    """Data and figures for the sample path, the eta sweep and the V^1 decay."""
    out = Path(args.out)
    seed = args.seed if args.seed is not None else 1
    base = dict(system="motivational-2d", horizon=args.horizon, x0="1, 1")

    def scen(name, driver, **extra):
        text = "\n".join(f"{k} = {v}" for k, v in {**base, "name": name, "driver": driver, **extra}.items())
        return parse_scenario(text, output=str(out / name))

    for line in run_scenario(scen("fig1", f"wiener({seed}, 10000)")).summary:
        print(line)
    curves = []
    for eta in args.etas:
        s = scen(f"fig2-eta{eta}", f"oscillatory(3, 4, {eta})")
        run_scenario(s)
        tr = simulate(s)
        curves.append((rf"$\eta={eta}$", tr.times, tr.states))
    limit = simulate(scen("limit", "oscillatory-limit(3, 4)"))
    curves.append(("limit", limit.times, limit.states))
    for comp in range(2):
        plotting.plot_overlay(curves, out / f"fig2_x{comp + 1}.png", ylabel=f"$x_{comp + 1}$", component=comp)
    m3 = run_scenario(scen("fig3", "oscillatory-limit(3, 4)", lyapunov="quadratic"))
    for line in m3.summary:
        print(line)
    v = quadratic(2)
    finite = simulate(scen("fig3-eta100", "oscillatory(3, 4, 100)"))
    plotting.plot_overlay(
        [(r"$\eta=100$", finite.times, v(finite.states)), ("limit", limit.times, v(limit.states))],
        out / "fig3_v1.png",
        ylabel="$V^1$",
    )
    csvio.write_array(
        out / "fig3" / "v1_eta100.csv", ["t", "v"], np.column_stack([finite.times, v(finite.states)]), {"eta": 100}
    )
    s = scen("converge", "oscillatory-limit(3, 4)")
    table = convergence_study(args.etas, s)
    table.to_csv(out / "convergence.csv")
    plotting.plot_convergence(table.etas, table.gaps, out / "convergence.png")
    print(f"figures written to {out}")
    return EXIT_NONMONOTONE if table.monotone is False else EXIT_OK


def _common(p: argparse.ArgumentParser, out_default: str = "out") -> None:
    p.add_argument("--scenario", help="scenario file (key = value lines)")
    p.add_argument("--seed", type=int, help="Wiener seed (u64)")
    p.add_argument("--eta", type=int, help="oscillation index eta (u32)")
    p.add_argument("--out", default=out_default, help="output directory")
    p.add_argument("--grid", help="grid spec, e.g. radius=10,shells=40,directions=24,local=1")


class _Parser(argparse.ArgumentParser):
    """Usage errors exit with the invalid-configuration code instead of 2."""

    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_CONFIG, f"{self.prog}: error: {message}\n")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="roughstab", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=__version__)
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate", help="run a scenario file")
    _common(p, out_default=None)
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("lift", help="lift a signal to a level-2 rough path")
    _common(p)
    p.add_argument("--input", help="SampledPath CSV (t,x1,...,xn)")
    p.add_argument("--b1", type=float, default=3.0)
    p.add_argument("--b2", type=float, default=4.0)
    p.add_argument("--horizon", type=float, default=1.0)
    p.add_argument("--cells", type=int, default=200)
    p.add_argument("--channels", type=int, default=2)
    p.add_argument("--p", type=float, default=2.5)
    p.set_defaults(func=cmd_lift)

    p = sub.add_parser("limit", help="limit drift and Ito drift of a builtin system")
    _common(p)
    p.add_argument("--system", default="motivational-2d")
    p.add_argument("--b1", type=float, default=3.0)
    p.add_argument("--b2", type=float, default=4.0)
    p.set_defaults(func=cmd_limit)

    p = sub.add_parser("lyapunov", help="grid-certified stability verdict for v = x^T x")
    _common(p)
    p.add_argument("--system", default="motivational-2d")
    p.add_argument("--b1", type=float, default=3.0)
    p.add_argument("--b2", type=float, default=4.0)
    p.add_argument("--require", choices=["stable", "local", "global"])
    p.set_defaults(func=cmd_lyapunov)

    p = sub.add_parser("converge", help="finite-eta vs limit sup-norm gaps")
    _common(p)
    p.add_argument("--system", default="motivational-2d")
    p.add_argument("--b1", type=float, default=3.0)
    p.add_argument("--b2", type=float, default=4.0)
    p.add_argument("--horizon", type=float, default=1.0)
    p.add_argument("--x0", default="1, 1")
    p.add_argument("--etas", type=int, nargs="+", default=[1, 10, 100])
    p.set_defaults(func=cmd_converge)

    p = sub.add_parser("compare", help="deterministic vs Wiener excursions of the scalar example")
    _common(p)
    p.add_argument("--seeds", type=int, default=100)
    p.add_argument("--etas", type=int, nargs="+", default=[10, 100])
    p.set_defaults(func=cmd_compare)

    p = sub.add_parser("figures", help="data and figures for the sample path, eta sweep and V^1 decay")
    _common(p)
    p.add_argument("--horizon", type=float, default=1.0)
    p.add_argument("--etas", type=int, nargs="+", default=[1, 10, 100])
    p.set_defaults(func=cmd_figures)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(message)s")
    if args.command == "simulate" and not args.scenario:
        parser.error("simulate needs --scenario")
    try:
        return args.func(args)
    except BlowUpError as exc:
        print(f"blow-up: {exc}", file=sys.stderr)
        return EXIT_BLOWUP
    except (InvalidConfigError, FileNotFoundError) as exc:
        print(f"invalid configuration: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except RoughStabError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
