"""Command-line entry point ``dispersa``.

Exit codes: 0 success, 2 invalid input, 3 blow-up or tail abort, 4 I/O failure.
"""

from __future__ import annotations

import argparse
import csv
import sys
from pathlib import Path

import numpy as np

from ..errors import BlowUpError, QuadratureError, TailOverflowError, ValidationError
from ..kernel import airy5_ode_residual, asymptotic_check, uniform_table
from .config import load_config
from .io import load_series
from .report import build_report, emit_report
from .runner import energy_from_run, run, sweep, verify_linear

EXIT_OK, EXIT_VALIDATION, EXIT_ABORT, EXIT_IO = 0, 2, 3, 4


def _simulate(args) -> int:
    cfg = load_config(args.config)
    traj, report = run(cfg)
    print(f"run complete: {len(traj.snapshots)} snapshots, {len(report.rows)} report rows"
          f"{' (flagged: tail exclusions)' if report.flagged else ''} -> {cfg.output_dir}")
    return EXIT_OK


def _verify_linear(args) -> int:
    cfg = load_config(args.config)
    lin = verify_linear(cfg, persist=True)
    print("t, t^(1/5)|u|_inf/|u0|_L1")
    for t, r in zip(lin.times, lin.sup_ratio):
        print(f"{t:.6g}, {r:.6g}")
    return EXIT_OK


def _kernel(args) -> int:
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    table = uniform_table(args.xmax, args.dx)
    table.save(out / "kernel.qak")
    rep = asymptotic_check(table)
    rows = [("x_max", args.xmax), ("dx", args.dx),
            ("max_est_error", float(table.est_error.max())),
            ("ode_residual", airy5_ode_residual(table)),
            ("left_sup", rep.left_sup), ("right_rate", rep.right_rate),
            ("right_rate_residual", rep.right_rate_residual),
            ("free_exponent", rep.free_exponent), ("free_rate", rep.free_rate),
            ("right_samples", rep.right_samples), ("partial", rep.partial)]
    with open(out / "kernel_asymptotics.csv", "w", newline="") as fh:
        wr = csv.writer(fh)
        wr.writerow(["quantity", "value"])
        wr.writerows(("" if v is None else v for v in row) for row in rows)
    print(f"kernel table ({len(table)} samples) and asymptotic report written to {out}")
    return EXIT_OK


def _decay_report(args) -> int:
    run_dir = Path(args.run)
    cfg = load_config(run_dir / "config.txt")
    snaps = load_series(run_dir / "snapshots", "u")
    ev = cfg.evolution
    rep = build_report(snaps, ev.m, ev.sign, ev.nonlinear_scale != 0,
                       cfg.verify.thresholds, cfg.verify.tail_threshold)
    emit_report(rep, run_dir)
    print(f"{len(rep.rows)} rows written to {run_dir / 'report.csv'}")
    return EXIT_OK


def _energy(args) -> int:
    series = energy_from_run(args.run, linearized=args.linearized)
    print(f"relative drift: corrected {series.relative_drift(True):.3e}, "
          f"plain {series.relative_drift(False):.3e}")
    return EXIT_OK


def _sweep(args) -> int:
    cfg = load_config(args.config)
    eps = [float(e) for e in args.epsilons.split(",")]
    res = sweep(cfg, eps)
    out = Path(cfg.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    with open(out / "sweep.csv", "w", newline="") as fh:
        wr = csv.writer(fh)
        wr.writerow(["epsilon", "breakdown_time", "status"])
        for e, t, s in zip(res.epsilons, res.breakdown_times, res.statuses):
            wr.writerow([repr(float(e)), "not reached" if np.isnan(t) else repr(float(t)), s])
    print(res.summary())
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="dispersa",
                                description="Dispersive decay experiments for Kawahara-type equations")
    sub = p.add_subparsers(dest="command", required=True)
    s = sub.add_parser("simulate", help="evolve and write snapshots and the decay report")
    s.add_argument("--config", required=True)
    s.set_defaults(func=_simulate)
    s = sub.add_parser("verify-linear", help="free-flow decay constants")
    s.add_argument("--config", required=True)
    s.set_defaults(func=_verify_linear)
    s = sub.add_parser("kernel", help="tabulate the quintic Airy kernel")
    s.add_argument("--xmax", type=float, required=True)
    s.add_argument("--dx", type=float, default=0.05)
    s.add_argument("--out", required=True)
    s.set_defaults(func=_kernel)
    s = sub.add_parser("decay-report", help="rebuild the report of a stored run")
    s.add_argument("--run", required=True)
    s.set_defaults(func=_decay_report)
    s = sub.add_parser("energy", help="corrected-energy series of a stored run")
    s.add_argument("--run", required=True)
    s.add_argument("--linearized", action="store_true")
    s.set_defaults(func=_energy)
    s = sub.add_parser("sweep", help="breakdown-time sweep over epsilon")
    s.add_argument("--config", required=True)
    s.add_argument("--epsilons", required=True)
    s.set_defaults(func=_sweep)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (ValidationError, QuadratureError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    except (BlowUpError, TailOverflowError) as exc:
        print(f"aborted: {exc}", file=sys.stderr)
        return EXIT_ABORT
    except OSError as exc:
        print(f"I/O error: {exc}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
