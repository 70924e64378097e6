"""Command-line front end.

Subcommands: ``sweep`` traces a trade-off boundary to CSV, ``compare`` runs
the optimal-vs-heuristic table, ``vertices`` prints region extreme points,
and ``closed-form-qmin`` evaluates the exponential-fading closed form for
the energy left over at the outage optimum. Exit codes: 0 success, 2 partial
feasibility, 1 error.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

from .errors import SwiptError
from .experiment import (compute_vertices, load_config, run_experiment, _fmt)
from .link import db_to_linear
from .outage_energy import qmin_closed_form
from .presets import PRESET_NAMES, preset_configs


def _add_config_args(parser):
    src = parser.add_mutually_exclusive_group(required=True)
    src.add_argument("--config", type=Path, help="config file (text or manifest)")
    src.add_argument("--preset", choices=PRESET_NAMES, help="built-in setup")
    parser.add_argument("--out", type=Path, default=None, help="output directory")
    parser.add_argument("--seed", type=int, default=None, help="override config seed")


def _gather_configs(args):
    if args.preset:
        return preset_configs(args.preset)
    from .experiment import load_manifest_configs
    text = args.config.read_text()
    if text.lstrip().startswith("{"):
        return load_manifest_configs(args.config)
    return [load_config(args.config)]


def _run(args, mode: str) -> int:
    configs = _gather_configs(args)
    for cfg in configs:
        if cfg.mode != mode:
            # Presets carry their natural mode; respect an explicit config too.
            raise SwiptError(
                f"config {cfg.label!r} is a {cfg.mode} experiment; "
                f"run it with the {cfg.mode} subcommand")
    out = args.out if args.out is not None else Path(configs[0].output_dir)
    result = run_experiment(configs, out, seed=args.seed)
    for path in result.csv_paths:
        print(path)
    return result.exit_code


def _run_vertices(args) -> int:
    configs = _gather_configs(args)
    lines = ["label,obj_max,q_min,q_max"]
    for cfg in configs:
        ens = cfg.build_ensemble(args.seed)
        v = compute_vertices(cfg, ens)
        lines.append(f"{cfg.label},{_fmt(v.obj_max)},{_fmt(v.q_min)},{_fmt(v.q_max)}")
    text = "\n".join(lines)
    print(text)
    if args.out is not None:
        args.out.mkdir(parents=True, exist_ok=True)
        (args.out / "vertices.csv").write_text(text + "\n")
    return 0


def _run_qmin(args) -> int:
    if args.grid_db:
        lo, hi, n = args.grid_db.split(":")
        lo, hi, n = float(lo), float(hi), int(n)
        if n < 2:
            raise SwiptError("grid needs at least 2 points")
        dbs = [lo + (hi - lo) * i / (n - 1) for i in range(n)]
    else:
        dbs = [float(v) for v in args.p_db.split(",")]
    lines = ["p_db,qmin"]
    for db in dbs:
        value = qmin_closed_form(db_to_linear(db), args.lambda1, args.lambda2,
                                 args.r0, args.sigma2)
        lines.append(f"{_fmt(db)},{_fmt(value)}")
    text = "\n".join(lines)
    print(text)
    if args.out is not None:
        args.out.mkdir(parents=True, exist_ok=True)
        (args.out / "qmin_closed_form.csv").write_text(text + "\n")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="swipt",
        description="Information-transfer vs. energy-harvesting trade-off experiments")
    sub = parser.add_subparsers(dest="command", required=True)

    p_sweep = sub.add_parser("sweep", help="trace a trade-off boundary to CSV")
    _add_config_args(p_sweep)

    p_cmp = sub.add_parser("compare", help="optimal vs. heuristic switching table")
    _add_config_args(p_cmp)

    p_vert = sub.add_parser("vertices", help="print region extreme points")
    _add_config_args(p_vert)

    p_qmin = sub.add_parser("closed-form-qmin",
                            help="closed-form leftover energy at the outage optimum")
    p_qmin.add_argument("--p-db", default="1.0",
                        help="comma list of transmit powers in dB")
    p_qmin.add_argument("--grid-db", default=None, metavar="LO:HI:N",
                        help="uniform dB grid (overrides --p-db)")
    p_qmin.add_argument("--lambda1", type=float, default=1.0,
                        help="rate of the channel-gain exponential")
    p_qmin.add_argument("--lambda2", type=float, default=1.0 / 3.0,
                        help="rate of the interference exponential")
    p_qmin.add_argument("--r0", type=float, default=0.2)
    p_qmin.add_argument("--sigma2", type=float, default=0.5)
    p_qmin.add_argument("--out", type=Path, default=None)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        if args.command == "sweep":
            return _run(args, "sweep")
        if args.command == "compare":
            return _run(args, "compare")
        if args.command == "vertices":
            return _run_vertices(args)
        return _run_qmin(args)
    except SwiptError as err:
        print(f"error: {err}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
