"""Command-line entry point: solve | simulate | verify | sweep.

Exit codes (stable CI contract):
    0  success
    2  config / validation failure
    3  simulation assertion failure (--assert, |z| > 5)
    4  verification tolerance breach

Flag precedence: flags > config file > repo defaults. Results go to
stdout; warnings to stderr. Every run writes a manifest (JSON) into the
output directory.
"""

from __future__ import annotations

import argparse
import json
import sys
import time
from pathlib import Path

import numpy as np

from . import __version__
from . import closed_form as cf
from . import oracles, sensitivity
from . import simulate as sim
from .params import ModelParams, ValidationError, params_from_config, parse_config

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_SIM = 3
EXIT_VERIFY = 4


def _fmt(x) -> str:
    if x is None:
        return "absent"
    return f"{x:.6g}"


def _load_params(args) -> ModelParams:
    config = parse_config(args.config) if args.config else {}
    overrides = {}
    for item in args.override or []:
        key, _, val = item.partition("=")
        if not _:
            raise ValidationError([])
        overrides[key.strip()] = float(val)
    return params_from_config(config, overrides)


def _write_manifest(args, m: ModelParams, subcommand: str, started: float) -> None:
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    manifest = {
        "tool_version": __version__,
        "subcommand": subcommand,
        "seed": getattr(args, "seed", None),
        "params": {k: getattr(m, k) for k in ("p", "q", "sigma0", "eta", "big_r", "big_t", "k", "r0")},
        "duration_sec": time.time() - started,
    }
    (out / "manifest.json").write_text(json.dumps(manifest, indent=2) + "\n")


def cmd_solve(args) -> int:
    started = time.time()
    m = _load_params(args)
    dec = cf.decide_case(m)
    strat = cf.decide(0.0, m.r0, m)
    print(f"k_star   {_fmt(dec.k_star)}")
    print(f"regime   {dec.regime.value}")
    print(f"t_a      {_fmt(dec.t_a)}")
    print(f"t_star   {_fmt(dec.t_star)}")
    print(f"q_star   {_fmt(dec.q_star)}")
    if strat.is_null:
        print("decision at t=0: do not subscribe (null strategy)")
    else:
        print(f"decision at t=0: subscribe immediately, retention u(0)={_fmt(strat.retention(0.0))}")
    print(f"value(0, r0) = {_fmt(cf.value(0.0, m.r0, m))}")
    if args.table:
        tspec, _, xspec = args.table.partition(",")
        t0, t1, nt = tspec.split(":")
        x0, x1, nx = xspec.split(":")
        ts = np.linspace(float(t0), float(t1), int(nt))
        xs = np.linspace(float(x0), float(x1), int(nx))
        out = Path(args.out)
        out.mkdir(parents=True, exist_ok=True)
        path = out / "value_table.csv"
        with open(path, "w") as f:
            f.write("t,x,value\n")
            for t in ts:
                for x in xs:
                    f.write(f"{float(t)!r},{float(x)!r},{cf.value(float(t), float(x), m)!r}\n")
        print(f"value table written to {path}")
    _write_manifest(args, m, "solve", started)
    return EXIT_OK


def _load_schedule_file(path: str, m: ModelParams) -> cf.Strategy:
    """Schedule file: `stop_time <v>` then `t u` rows (piecewise constant)."""
    lines = [ln.split("#", 1)[0].strip() for ln in Path(path).read_text().splitlines()]
    lines = [ln for ln in lines if ln]
    head = lines[0].split()
    if head[0] != "stop_time":
        raise ValidationError([])
    stop_time = float(head[1])
    knots = [(float(a), float(b)) for a, b in (ln.split() for ln in lines[1:])]
    knots.sort()
    ts = np.array([k[0] for k in knots])
    us = np.array([k[1] for k in knots])

    def retention(s: float) -> float:
        i = int(np.searchsorted(ts, s, side="right")) - 1
        return float(us[max(i, 0)])

    return cf.Strategy(stop_time=stop_time, retention=retention, is_null=stop_time >= m.big_t)


def cmd_simulate(args) -> int:
    started = time.time()
    m = _load_params(args)
    cfg = sim.PathConfig(n_paths=args.paths, n_steps=args.steps, seed=args.seed)
    if args.strategy == "optimal":
        strat = cf.decide(0.0, m.r0, m)
        exact = cf.value(0.0, m.r0, m)
        label = "value(0, r0)"
    elif args.strategy == "null":
        strat = cf.null_strategy(m)
        exact = cf.g_value(0.0, m.r0, m)
        label = "g(0, r0)"
    else:
        strat = _load_schedule_file(args.strategy, m)
        exact = oracles.utility_of_schedule(0.0, m.r0, strat.stop_time, strat.retention, m)
        label = "utility_of_schedule"
    samples = sim.simulate_strategy(0.0, m.r0, strat, m, cfg)
    est = sim.mc_exp_utility(samples, m.eta, seed=cfg.seed)
    z = 0.0 if est.std_error == 0.0 else (est.mean - exact) / est.std_error
    print(f"mc_mean     {est.mean:.6g}")
    print(f"std_error   {est.std_error:.6g}")
    print(f"ci95        [{est.ci95_low:.6g}, {est.ci95_high:.6g}]")
    print(f"exact ({label}) = {exact:.6g}")
    print(f"z_score     {z:.6g}")
    if args.dump:
        sim.dump_samples(samples, args.dump)
        print(f"samples written to {args.dump}")
    _write_manifest(args, m, "simulate", started)
    if args.assert_ and abs(z) > 5.0:
        print(f"ASSERT FAILED: |z| = {abs(z):.3g} > 5", file=sys.stderr)
        return EXIT_SIM
    return EXIT_OK


def _verify_hjb(m: ModelParams) -> tuple[bool, str]:
    surf = oracles.hjb_pure_reinsurance(m, oracles.GridSpec(400, 800, -5.0, 10.0), keep_every=20)
    msk = surf.interior_mask()
    rel = 0.0
    pol = 0.0
    for i, t in enumerate(surf.t_grid):
        ref = np.array([cf.v_bar(float(t), float(x), m) for x in surf.x_grid[msk]])
        rel = max(rel, float(np.max(np.abs(surf.values[i, msk] - ref) / ref)))
        if t < m.big_t:
            pol = max(pol, float(np.max(np.abs(surf.policy[i, msk] - cf.u_star(float(t), m)))))
    du = 1.0 / (oracles.N_U_CANDIDATES - 1)
    ok = rel <= 1e-3 and pol <= 2 * du
    return ok, f"hjb: max rel err {rel:.3g} (tol 1e-3), max policy err {pol:.3g} (tol {2*du:.3g})"


def _verify_lattice(m: ModelParams) -> tuple[bool, str]:
    surf = oracles.stopping_lattice(m, oracles.GridSpec(200, 600, -6.0, 11.0))
    msk = surf.interior_mask()
    ts = cf.t_star(m)
    rel = 0.0
    for i, t in enumerate(surf.t_grid):
        ref = np.array([cf.value(float(t), float(x), m) for x in surf.x_grid[msk]])
        rel = max(rel, float(np.max(np.abs(surf.values[i, msk] - ref) / ref)))
    boundary = oracles.lattice_stop_boundary(surf)
    dt = surf.t_grid[1] - surf.t_grid[0]
    if ts is None:
        ok = boundary is None and rel <= 5e-3
        msg = f"lattice: max rel err {rel:.3g} (tol 5e-3), boundary {_fmt(boundary)} (expect absent)"
    else:
        ok = boundary is not None and abs(boundary - ts) <= dt + 1e-12 and rel <= 5e-3
        msg = (
            f"lattice: max rel err {rel:.3g} (tol 5e-3), boundary {_fmt(boundary)} "
            f"vs t_star {_fmt(ts)} (tol one step = {dt:.3g})"
        )
    return ok, msg


def _verify_detstop(m: ModelParams) -> tuple[bool, str]:
    sgrid = np.linspace(0.0, m.big_t, 400)
    vals = [oracles.deterministic_stop_value(0.0, m.r0, float(s), m) for s in sgrid]
    i = int(np.argmin(vals))
    best, target = vals[i], cf.value(0.0, m.r0, m)
    ts = cf.t_star(m)
    if ts is None:
        ok = i == len(sgrid) - 1 and abs(best - target) <= 1e-6
        msg = f"detstop: argmin s = {sgrid[i]:.6g} (expect T), min {best:.6g} vs value {target:.6g}"
    else:
        ok = i == 0 and abs(best - target) <= 1e-6
        msg = f"detstop: argmin s = {sgrid[i]:.6g} (expect 0), min {best:.6g} vs value {target:.6g}"
    return ok, msg


def cmd_verify(args) -> int:
    started = time.time()
    m = _load_params(args)
    suites = {"hjb": _verify_hjb, "lattice": _verify_lattice, "detstop": _verify_detstop}
    names = list(suites) if args.suite == "all" else [args.suite]
    failed = []
    for name in names:
        ok, msg = suites[name](m)
        print(("PASS " if ok else "FAIL ") + msg)
        if not ok:
            failed.append(name)
    _write_manifest(args, m, "verify", started)
    if failed:
        print(f"verification failed: {', '.join(failed)}", file=sys.stderr)
        return EXIT_VERIFY
    return EXIT_OK


def cmd_sweep(args) -> int:
    started = time.time()
    m = _load_params(args)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    if args.all_panels:
        written = sensitivity.all_panels(m, out, n=args.n)
        for p in written:
            print(f"wrote {p}")
    else:
        recs = sensitivity.sweep(args.param, args.lo, args.hi, args.n, m, log_spacing=args.log)
        csv_path = out / f"sweep_{args.param}.csv"
        sensitivity.write_csv(recs, csv_path)
        print(f"wrote {csv_path} ({len(recs)} rows)")
        if args.svg:
            svg_path = out / f"sweep_{args.param}.svg"
            sensitivity.write_svg(recs, svg_path)
            print(f"wrote {svg_path}")
    _write_manifest(args, m, "sweep", started)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="reinopt",
        description="Optimal proportional reinsurance with a fixed subscription cost",
    )
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--config", help="flat key=value parameter file")
        p.add_argument("--override", action="append", metavar="KEY=VALUE",
                       help="override a config key (repeatable)")
        p.add_argument("--out", default=".", help="output directory (manifest, CSV)")
        p.add_argument("--seed", type=int, default=0)
        p.add_argument("--threads", type=int, default=1,
                       help="worker cap for the numerical backends")

    p = sub.add_parser("solve", help="thresholds, regime, optimal decision")
    common(p)
    p.add_argument("--table", metavar="T0:T1:N,X0:X1:M", help="also write a value(t,x) CSV")
    p.set_defaults(func=cmd_solve)

    p = sub.add_parser("simulate", help="Monte Carlo estimate vs closed form")
    common(p)
    p.add_argument("--strategy", default="optimal",
                   help="'optimal', 'null', or a schedule file path")
    p.add_argument("--paths", type=int, default=100_000)
    p.add_argument("--steps", type=int, default=1_000)
    p.add_argument("--dump", help="write one terminal wealth per line to this file")
    p.add_argument("--assert", dest="assert_", action="store_true",
                   help="exit 3 if |z| > 5 (regression gate)")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("verify", help="run the independent numerical oracles")
    common(p)
    p.add_argument("suite", choices=["hjb", "lattice", "detstop", "all"])
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser("sweep", help="parameter sweep CSV (+ SVG)")
    common(p)
    p.add_argument("param", nargs="?", choices=list(sensitivity.SWEEPABLE))
    p.add_argument("lo", nargs="?", type=float)
    p.add_argument("hi", nargs="?", type=float)
    p.add_argument("--n", type=int, default=50)
    p.add_argument("--log", action="store_true", help="log-spaced grid")
    p.add_argument("--svg", action="store_true", help="also write an SVG chart")
    p.add_argument("--all-panels", action="store_true",
                   help="emit the four standard sensitivity panels")
    p.set_defaults(func=cmd_sweep)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    if args.command == "sweep" and not args.all_panels:
        if args.param is None or args.lo is None or args.hi is None:
            print("sweep needs `param lo hi` or --all-panels", file=sys.stderr)
            return EXIT_CONFIG
    try:
        return args.func(args)
    except ValidationError as err:
        for v in err.violations:
            print(f"config error: {v}", file=sys.stderr)
        if not err.violations:
            print("config error: invalid input", file=sys.stderr)
        return EXIT_CONFIG
    except (ValueError, OSError) as err:
        print(f"error: {err}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
