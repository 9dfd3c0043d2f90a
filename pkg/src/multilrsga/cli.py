"""Command-line entry point: ``multilrsga {run,verify,sweep,list-games}``.

Exit codes: 0 success, 1 validation error, 2 runtime failure.
"""

from __future__ import annotations

import argparse
import csv
import io
import logging
import sys
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

import numpy as np

from .config import ConfigError, EMIT_KINDS, load_config
from .correction import skew_error_trials
from .experiments import GAMES, compare_solvers, make_game
from .output import components_svg, dump_json, report_dict, residuals_svg, trace_to_csv
from .solvers import SolverConfig, SolverError, estimate_linear_rate, frozen_map_analysis, run_multilrsga

log = logging.getLogger("multilrsga")

EXIT_OK, EXIT_INVALID, EXIT_RUNTIME = 0, 1, 2


class UsageError(ValueError):
    pass


def _parse_params(items):
    params = {}
    for item in items or []:
        if "=" not in item:
            raise UsageError(f"--param expects key=value, got {item!r}")
        key, value = item.split("=", 1)
        if "," in value:
            params[key] = [_scalar(v) for v in value.split(",")]
        else:
            params[key] = _scalar(value)
    return params


def _scalar(text):
    for kind in (int, float):
        try:
            return kind(text)
        except ValueError:
            pass
    return text


def _float_list(text):
    try:
        vals = [float(x) for x in text.split(",") if x.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}")
    if not vals:
        raise argparse.ArgumentTypeError("grid must be nonempty")
    return vals


def _emit_list(text):
    kinds = [x.strip() for x in text.split(",") if x.strip()]
    bad = [k for k in kinds if k not in EMIT_KINDS]
    if bad:
        raise argparse.ArgumentTypeError(f"unknown emit kind(s) {bad}; allowed {EMIT_KINDS}")
    return kinds


def _game(name, params):
    if name not in GAMES:
        raise UsageError(f"unknown game {name!r}; available: {', '.join(GAMES)}")
    try:
        return make_game(name, **params)
    except TypeError as e:
        raise UsageError(f"bad parameters for {name}: {e}") from e


def cmd_run(args) -> int:
    overrides = {"out": args.out, "seed": args.seed, "emit": args.emit}
    cfg = load_config(args.config, {k: v for k, v in overrides.items() if v is not None})
    try:
        bg = make_game(cfg.game, **cfg.params)
    except (TypeError, ValueError) as e:
        raise ConfigError(str(e), cfg.source, field="game.params") from e
    sc = cfg.solver_configs
    report = compare_solvers(bg, sc.get("multilrsga"), sc.get("gd"), sc.get("sga"),
                             w0=cfg.start, diagnostics=cfg.diagnostics)

    out = cfg.out_dir
    out.mkdir(parents=True, exist_ok=True)
    written = []
    if "csv" in cfg.emit:
        for name, trace in report.traces.items():
            p = out / f"trace_{name}.csv"
            p.write_text(trace_to_csv(trace))
            written.append(p)
    if "json" in cfg.emit:
        p = out / "report.json"
        p.write_text(dump_json(report_dict(report, bg.params, cfg.seed)))
        written.append(p)
    if "svg" in cfg.emit:
        p = out / "residuals.svg"
        p.write_text(residuals_svg(report.traces))
        written.append(p)
        labels = ["||x||", "|y|", "|z|"] if bg.name == "paper3" else None
        for name, trace in report.traces.items():
            p = out / f"components_{name}.svg"
            p.write_text(components_svg(trace, labels))
            written.append(p)
    if args.dump_secant:
        state = report.traces.get("multilrsga")
        if state is None or state.final_state is None:
            raise UsageError("--dump-secant needs the multilrsga solver in the run")
        Path(args.dump_secant).write_text(state.final_state.to_json())
        written.append(Path(args.dump_secant))

    for name, trace in report.traces.items():
        print(f"{name:>10}: {trace.status} after {trace.iterations} iterations, "
              f"||F|| = {trace.final_residual:.3e}")
    for p in written:
        print(f"wrote {p}")
    return EXIT_OK


def cmd_verify(args) -> int:
    bg = _game(args.game, _parse_params(args.param))
    if bg.known_equilibrium is None:
        raise UsageError(f"game {bg.name} has no known equilibrium")
    rep = frozen_map_analysis(bg.game, bg.known_equilibrium, args.eta, args.tau,
                              lf_estimate=args.lf, radius=args.radius, seed=args.seed)
    print(f"game                 {bg.name}")
    print(f"eta, tau             {rep.eta:g}, {rep.tau:g}")
    print(f"||DT*||_2            {rep.jacobian_norm:.12f}")
    print(f"spectral radius      {rep.spectral_radius:.12f}")
    print(f"contractive          {str(rep.contractive).lower()}")
    print(f"L_F estimate         {rep.lf_estimate:.6f}")
    print(f"eta*tau*(h-1)*L_F    {rep.step_condition_lhs:.6g}")
    print(f"step condition       {'satisfied' if rep.step_condition_ok else 'violated'}")
    trials = skew_error_trials(args.trials, seed=args.seed)
    passed = sum(t.passed for t in trials)
    print(f"skew bound trials    {passed}/{len(trials)} passed")
    return EXIT_OK


def _sweep_cell(game, params, eta, tau, max_iter, tol, seed):
    bg = make_game(game, **params)
    cfg = SolverConfig(eta=eta, tau=tau, max_iter=max_iter, residual_tol=tol, seed=seed)
    try:
        trace = run_multilrsga(bg.game, bg.default_start, cfg)
    except (SolverError, FloatingPointError) as e:
        return eta, tau, f"error: {e}", "", ""
    try:
        q_hat = repr(estimate_linear_rate(trace, 100)[0])
    except ValueError:
        q_hat = ""
    return eta, tau, trace.status, trace.iterations, q_hat


def cmd_sweep(args) -> int:
    params = _parse_params(args.param)
    _game(args.game, params)
    cells = [(args.game, params, eta, tau, args.max_iter, args.tol, args.seed)
             for eta in args.eta for tau in args.tau]
    if args.jobs > 1:
        with ProcessPoolExecutor(max_workers=args.jobs) as pool:
            rows = list(pool.map(_sweep_cell, *zip(*cells)))
    else:
        rows = [_sweep_cell(*c) for c in cells]
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["eta", "tau", "status", "iters", "q_hat"])
    for eta, tau, status, iters, q in rows:
        writer.writerow([repr(eta), repr(tau), status, iters, q])
    if args.out:
        Path(args.out).parent.mkdir(parents=True, exist_ok=True)
        Path(args.out).write_text(buf.getvalue())
        print(f"wrote {args.out}")
    else:
        sys.stdout.write(buf.getvalue())
    return EXIT_OK


def cmd_list_games(args) -> int:
    for name, factory in GAMES.items():
        bg = factory()
        print(f"{name:<10} players={bg.game.layout.dims}  {bg.note}")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="multilrsga", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("run", help="run solvers from a YAML config and write artifacts")
    p.add_argument("--config", required=True)
    p.add_argument("--out", help="output directory (overrides output.dir)")
    p.add_argument("--seed", type=int)
    p.add_argument("--emit", type=_emit_list, help="comma list of csv,json,svg")
    p.add_argument("--dump-secant", metavar="PATH", help="write the final secant state as JSON")
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("verify", help="frozen-map and skew-bound diagnostics")
    p.add_argument("game")
    p.add_argument("--eta", type=float, required=True)
    p.add_argument("--tau", type=float, required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--trials", type=int, default=1000)
    p.add_argument("--radius", type=float, default=1.0, help="ball radius for the L_F estimate")
    p.add_argument("--lf", type=float, help="use this L_F instead of sampling")
    p.add_argument("--param", action="append", help="game parameter key=value")
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser("sweep", help="MultiLRSGA over an (eta, tau) grid")
    p.add_argument("game")
    p.add_argument("--eta", type=_float_list, required=True)
    p.add_argument("--tau", type=_float_list, required=True)
    p.add_argument("--max-iter", type=int, default=50_000)
    p.add_argument("--tol", type=float, default=1e-6)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--jobs", type=int, default=1)
    p.add_argument("--out", help="CSV path (default: stdout)")
    p.add_argument("--param", action="append", help="game parameter key=value")
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("list-games", help="list built-in games")
    p.set_defaults(func=cmd_list_games)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return EXIT_OK if e.code == 0 else EXIT_INVALID
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except (ConfigError, UsageError) as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_INVALID
    except (ValueError, SolverError, FloatingPointError, OSError) as e:
        print(f"runtime failure: {e}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
