"""Command-line entry point: ``etcdelay <subcommand> [options]``."""

from __future__ import annotations

import argparse
import sys
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

from . import io
from .bounds import CertificationError
from .certify import certify, gaps_summary, sweep_cell, sweep_grid
from .config import ConfigError, load_config_file, parse_config
from .core import ConfigurationError, IntegrationBlowup, ZenoGuardError
from .engine import simulate, simulate_continuous
from .events import enforcement_check
from .halanay import run_selftest

EXIT_OK = 0
EXIT_PARSE = 2
EXIT_BLOWUP = 3
EXIT_ZENO = 4
EXIT_CHECK = 5


def _float_list(text):
    try:
        return [float(v) for v in text.split(",") if v.strip()]
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}") from exc


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="etcdelay", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, list_params=False):
        p.add_argument("--config", type=Path, help="JSON run configuration")
        p.add_argument("--out", type=Path, default=Path("out"), help="output directory")
        p.add_argument("--seed", type=int)
        p.add_argument("--h", type=float, help="step size (overrides config)")
        p.add_argument("--t-end", dest="t_end", type=float, help="horizon (overrides config)")
        kind = _float_list if list_params else float
        for name in ("sigma", "a", "b"):
            p.add_argument(f"--{name}", type=kind)

    common(sub.add_parser("simulate", help="event-triggered run with CSV/SVG artifacts"))
    common(sub.add_parser("feedback", help="continuous state-feedback baseline"))
    common(sub.add_parser("certify", help="simulate and check every bound"))
    st = sub.add_parser("halanay-selftest", help="randomized check of the Halanay-type bound")
    st.add_argument("--seed", type=int, default=0)
    st.add_argument("--count", type=int, default=1000)
    sw = sub.add_parser("sweep", help="grid over sigma/a/b (comma-separated lists)")
    common(sw, list_params=True)
    sw.add_argument("--jobs", type=int, default=1)
    return parser


def _load(args, sweep=False):
    data = load_config_file(args.config) if args.config else {}
    cfg = parse_config(data)
    over = {"h": args.h, "t_end": args.t_end, "seed": args.seed}
    if not sweep:
        over.update(sigma=args.sigma, a=args.a, b=args.b)
    return cfg.with_overrides(**over)


def _summary(result) -> str:
    lo, mean = gaps_summary(result)
    return (f"events: {result.n_events}  min gap: {lo:.6g}  mean gap: {mean:.6g}  "
            f"final |x|: {result.x_norm[-1]:.6g}")


def cmd_simulate(args) -> int:
    cfg = _load(args)
    model, cert = cfg.build()
    trig = cfg.trigger_config()
    result = simulate(model, trig, cert, cfg.integrator)
    out = args.out
    out.mkdir(parents=True, exist_ok=True)
    io.write_trajectory_csv(out / cfg.outputs["trajectory"], result)
    io.write_events_csv(out / cfg.outputs["events"], result.event_log)
    io.write_plots(out / cfg.outputs["plot"], result)
    print(_summary(result))
    enf = enforcement_check(result, trig, cfg.checks["enforcement_tol"])
    if not enf.ok:
        print(f"enforcement violated: residual {enf.max_residual:.3g} at t={enf.t_max:.6g}",
              file=sys.stderr)
        return EXIT_CHECK
    return EXIT_OK


def cmd_feedback(args) -> int:
    cfg = _load(args)
    model, cert = cfg.build()
    result = simulate_continuous(model, cfg.integrator, cert, t0=cfg.trigger["t0"])
    out = args.out
    out.mkdir(parents=True, exist_ok=True)
    io.write_trajectory_csv(out / cfg.outputs["trajectory"], result)
    io.write_plots(out / cfg.outputs["plot"], result)
    print(f"final |x|: {result.x_norm[-1]:.6g}")
    return EXIT_OK


def cmd_certify(args) -> int:
    cfg = _load(args)
    model, cert = cfg.build()
    if cert is None:
        raise ConfigError("certificate", "certify needs a certificate with mu")
    trig = cfg.trigger_config()
    c = cfg.constants
    report = certify(
        model, trig, cert, cfg.integrator, L=c["L"], xi=c["xi"], samples=c["samples"],
        seed=cfg.seed, overrides={k: c[k] for k in ("L1", "L2", "L3") if k in c},
        enforcement_tol=cfg.checks["enforcement_tol"],
        decrease_rel_tol=cfg.checks["decrease_rel_tol"],
    )
    out = args.out
    out.mkdir(parents=True, exist_ok=True)
    io.write_trajectory_csv(out / cfg.outputs["trajectory"], report.result)
    io.write_events_csv(out / cfg.outputs["events"], report.result.event_log)
    io.write_json(out / cfg.outputs["bounds"], report.as_dict())
    print(_summary(report.result))
    k = report.constants
    print(f"eta={k.eta:.6g}  Mbar={k.Mbar:.6g}  M={k.M:.6g}  R={k.R:.6g}  "
          f"L1={k.L1:.6g}  L2={k.L2:.6g}  L3={k.L3:.6g}")
    for chk in report.checks:
        print(f"  {'PASS' if chk.ok else 'FAIL'}  {chk.name:<12} margin={chk.margin:.6g}")
    if not report.ok:
        print(f"failed checks: {', '.join(report.failed)}", file=sys.stderr)
        return EXIT_CHECK
    return EXIT_OK


def cmd_halanay_selftest(args) -> int:
    if args.count < 1:
        raise ConfigError("count", "must be >= 1")
    s = run_selftest(args.seed, args.count)
    print(f"problems: {s.count}  failures: {s.failures}  worst relative slack: "
          f"{s.worst_slack:.6g}")
    print(f"closed form g(1) error: {s.closed_form_error:.3g}  bound slack: "
          f"{s.closed_form_slack:.6g}")
    return EXIT_OK if s.ok else EXIT_CHECK


def cmd_sweep(args) -> int:
    cfg = _load(args, sweep=True)
    grid_spec = dict(cfg.sweep)
    for name in ("sigma", "a", "b"):
        if getattr(args, name) is not None:
            grid_spec[name] = getattr(args, name)
    grid = sweep_grid(grid_spec, cfg.trigger)
    if not grid:
        raise ConfigError("sweep", "empty parameter grid")
    # validate every cell before spending time on simulations
    for s, a, b in grid:
        cfg.with_overrides(sigma=s, a=a, b=b)
    raw = cfg.raw
    if args.jobs > 1:
        with ProcessPoolExecutor(max_workers=args.jobs) as pool:
            rows = list(pool.map(sweep_cell, [raw] * len(grid), *zip(*grid)))
    else:
        rows = [sweep_cell(raw, s, a, b) for s, a, b in grid]
    header = ["sigma", "a", "b", "events", "min_gap", "T_star", "final_norm", "max_residual"]
    args.out.mkdir(parents=True, exist_ok=True)
    io.write_table_csv(args.out / "sweep.csv", header, [[r[k] for k in header] for r in rows])
    for r in rows:
        print(f"sigma={r['sigma']:g} a={r['a']:g} b={r['b']:g}  events={r['events']}  "
              f"min_gap={r['min_gap']:.4g}  T*={r['T_star']:.4g}  final={r['final_norm']:.4g}")
    return EXIT_OK


COMMANDS = {
    "simulate": cmd_simulate,
    "feedback": cmd_feedback,
    "certify": cmd_certify,
    "halanay-selftest": cmd_halanay_selftest,
    "sweep": cmd_sweep,
}


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return COMMANDS[args.command](args)
    except (ConfigurationError, CertificationError) as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return EXIT_PARSE
    except IntegrationBlowup as exc:
        print(f"integration blowup: {exc}", file=sys.stderr)
        return EXIT_BLOWUP
    except ZenoGuardError as exc:
        print(f"zeno guard: {exc}", file=sys.stderr)
        return EXIT_ZENO


if __name__ == "__main__":
    sys.exit(main())
