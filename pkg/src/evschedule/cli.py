"""Command-line front end.

Subcommands:
  run       simulate one scenario and write the CSV report
  sweep     re-run a scenario across one parameter's values
  oracle    exhaustive optimum of a micro scenario (same CSV report)
  validate  parse and validate a config, reporting problems

Exit codes: 0 success, 1 validation problem (config, arguments, file IO),
2 invariant-audit failure in an emitted schedule.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path
from typing import List, Optional

from .config import ScenarioConfig, load_config, load_preset, preset_names
from .runner import (
    MODES,
    run_scenario,
    sensitivity_sweep,
    write_report,
    write_sweep,
)


def _resolve_config(ref: str) -> ScenarioConfig:
    p = Path(ref)
    if p.exists():
        return load_config(p)
    try:
        return load_preset(p.stem)
    except ValueError:
        raise ValueError(
            f"config {ref!r} is neither a file nor a preset; presets: {preset_names()}"
        ) from None


def _add_common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", required=True, help="scenario file path or bundled preset name")
    p.add_argument("--seed", type=int, default=None, help="master seed (default: from config)")
    p.add_argument("--out", default=None, help="directory for CSV outputs (default: no files)")
    p.add_argument("--workers", type=int, default=None, help="worker bound for the consensus loop")
    p.add_argument(
        "--demand-level",
        choices=("low", "medium", "high"),
        default=None,
        help="demand scale preset",
    )


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="evschedule",
        description="EV charging scheduling: consensus + look-ahead search vs queueing baseline",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    run_p = sub.add_parser("run", help="simulate one scenario")
    _add_common(run_p)
    run_p.add_argument("--mode", choices=MODES, default="consensus")

    sweep_p = sub.add_parser("sweep", help="run a one-parameter sensitivity sweep")
    _add_common(sweep_p)
    sweep_p.add_argument("--mode", choices=MODES, default="consensus")
    sweep_p.add_argument("--parameter", required=True,
                         help="alpha_prime | iota | lookahead | iterations | xi | demand_level")
    sweep_p.add_argument("--values", required=True,
                         help="comma-separated values, e.g. 0.05,0.1,0.2,0.4")

    oracle_p = sub.add_parser("oracle", help="exhaustive optimum for a micro scenario")
    _add_common(oracle_p)
    oracle_p.add_argument("--limit", type=int, default=1_000_000,
                          help="cap on the joint schedule count")

    val_p = sub.add_parser("validate", help="check a config without running it")
    val_p.add_argument("--config", required=True)
    return parser


def _prepare(args) -> ScenarioConfig:
    cfg = _resolve_config(args.config)
    if getattr(args, "demand_level", None):
        cfg = cfg.with_demand_level(args.demand_level)
    if getattr(args, "workers", None):
        cfg = cfg.with_consensus_workers(args.workers)
    if getattr(args, "seed", None) is not None:
        cfg = cfg.with_seed(args.seed)
    return cfg


def _parse_values(raw: str) -> List:
    out = []
    for chunk in raw.split(","):
        chunk = chunk.strip()
        if not chunk:
            continue
        try:
            out.append(float(chunk))
        except ValueError:
            out.append(chunk)
    if not out:
        raise ValueError("--values is empty")
    return out


def _finish(report, out: Optional[str]) -> int:
    if out:
        write_report(report, out)
    for mode, total, cpu in report.comparison_rows:
        print(f"{mode}: total objective {total:.4f} ({cpu:.3f} CPU s)")
    served = sum(1 for e in report.entries if e.served)
    print(f"schedule rows: {len(report.entries)} ({served} served)")
    if report.audit_failures:
        for msg in report.audit_failures:
            print(f"audit: {msg}", file=sys.stderr)
        return 2
    return 0


def main(argv: Optional[List[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        if args.command == "validate":
            cfg = _resolve_config(args.config)
            print(f"ok: scenario {cfg.name!r}, {cfg.horizon} periods, "
                  f"{len(cfg.net.facilities)} facilities, seed {cfg.seed}")
            return 0
        cfg = _prepare(args)
        if args.command == "run":
            report = run_scenario(cfg, mode=args.mode, seed=cfg.seed)
            return _finish(report, args.out)
        if args.command == "oracle":
            report = run_scenario(cfg, mode="oracle", seed=cfg.seed, oracle_limit=args.limit)
            return _finish(report, args.out)
        if args.command == "sweep":
            values = _parse_values(args.values)
            rows = sensitivity_sweep(cfg, args.parameter, values, mode=args.mode, seed=cfg.seed)
            if args.out:
                write_sweep(rows, args.out)
            for value, travel, charge_pen, total in rows:
                print(f"{value}: travel {travel:.4f}, charging+penalty {charge_pen:.4f}, "
                      f"total {total:.4f}")
            return 0
        raise ValueError(f"unknown command {args.command!r}")
    except (ValueError, KeyError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
