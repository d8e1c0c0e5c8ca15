"""Command line interface.

Subcommands: run, sweep, summarize, verify-theory, forgetting-eval.
Configs are JSON files validated against a strict schema.  The default
output root comes from the EVENT_REPLAY_OUT environment variable (falling
back to ./runs).  Exit codes: 0 success, 2 config error, 3 run failure.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from .config import ConfigError, default_output_root, load_config, set_by_path

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_RUN = 3


def _parse_value(text: str):
    try:
        return json.loads(text)
    except json.JSONDecodeError:
        return text


def _out_dir(args, run_id: str) -> Path:
    if getattr(args, "out", None):
        return Path(args.out)
    return default_output_root() / run_id


def _apply_overrides(cfg_path: str, seeds: str = None, sampler: str = None) -> dict:
    from .config import resolve_config

    cfg = load_config(cfg_path)
    if seeds is not None:
        try:
            parsed = [int(s) for s in seeds.split(",") if s != ""]
        except ValueError:
            raise ConfigError(f"--seeds: expected comma-separated ints, got {seeds!r}")
        cfg["seeds"] = parsed
    if sampler is not None:
        cfg = set_by_path(cfg, "sampler.kind", sampler)
        if sampler in ("uniform", "per"):
            cfg["sampler"]["events"] = []
            cfg["sampler"]["eta_default"] = None
    return resolve_config(cfg)


def _cmd_run(args) -> int:
    from .runner import run_experiment

    cfg = _apply_overrides(args.config, args.seeds, args.sampler)
    result = run_experiment(cfg, _out_dir(args, cfg["run_id"]), workers=args.workers)
    statuses = result["statuses"]
    for seed in sorted(statuses):
        print(f"seed {seed}: {statuses[seed]}")
    print(f"metrics: {result['metrics']}")
    if all(status != "ok" for status in statuses.values()):
        print("every seed failed", file=sys.stderr)
        return EXIT_RUN
    return EXIT_OK


def _cmd_sweep(args) -> int:
    from .runner import sweep

    cfg = _apply_overrides(args.config)
    values = [_parse_value(v) for v in args.values.split(",")]
    if not values:
        raise ConfigError("--values: need at least one value")
    set_by_path(cfg, args.axis, values[0])  # fail fast on unknown axes
    result = sweep(cfg, args.axis, values, _out_dir(args, f"{cfg['run_id']}-sweep"),
                   workers=args.workers)
    print(f"sweep summary: {result['summary']}")
    return EXIT_OK


def _cmd_summarize(args) -> int:
    from .metrics import summarize_dir

    try:
        path = summarize_dir(args.in_dir)
    except (FileNotFoundError, ValueError) as exc:
        print(f"summarize failed: {exc}", file=sys.stderr)
        return EXIT_RUN
    print(f"summary: {path}")
    return EXIT_OK


def _cmd_verify_theory(args) -> int:
    from ..theory import run_suite

    try:
        results = run_suite(args.suite, fast=args.fast)
    except ValueError as exc:
        print(f"verify-theory: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    for check in results:
        print(check.line())
    if all(c.passed for c in results):
        return EXIT_OK
    return EXIT_RUN


def _cmd_forgetting(args) -> int:
    from .runner import forgetting_eval

    cfg = _apply_overrides(args.config, args.seeds, None)
    result = forgetting_eval(cfg, _out_dir(args, f"{cfg['run_id']}-forgetting"),
                             workers=args.workers)
    statuses = result["statuses"]
    print(f"forgetting series: {result['forgetting']}")
    if all(status != "ok" for status in statuses.values()):
        return EXIT_RUN
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="event-replay",
        description="Stratified event-table replay experiments",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    run_p = sub.add_parser("run", help="execute one multi-seed experiment")
    run_p.add_argument("--config", required=True)
    run_p.add_argument("--out", default=None)
    run_p.add_argument("--seeds", default=None, help="comma-separated override")
    run_p.add_argument("--sampler", default=None,
                       choices=["uniform", "per", "sset", "sset-per"])
    run_p.add_argument("--workers", type=int, default=None)
    run_p.set_defaults(fn=_cmd_run)

    sweep_p = sub.add_parser("sweep", help="run the config across axis values")
    sweep_p.add_argument("--config", required=True)
    sweep_p.add_argument("--axis", required=True, help="dotted path, e.g. sampler.events.0.tau")
    sweep_p.add_argument("--values", required=True, help="comma-separated values")
    sweep_p.add_argument("--out", default=None)
    sweep_p.add_argument("--workers", type=int, default=None)
    sweep_p.set_defaults(fn=_cmd_sweep)

    sum_p = sub.add_parser("summarize", help="aggregate metrics under a directory")
    sum_p.add_argument("--in", dest="in_dir", required=True)
    sum_p.set_defaults(fn=_cmd_summarize)

    ver_p = sub.add_parser("verify-theory", help="run the numerical verification suites")
    ver_p.add_argument("--suite", default="all",
                       choices=["all", "lemma1", "lemma2", "lambert", "complexity"])
    ver_p.add_argument("--fast", action="store_true",
                       help="smaller sample counts for smoke checks")
    ver_p.set_defaults(fn=_cmd_verify_theory)

    forget_p = sub.add_parser("forgetting-eval",
                              help="train with shifted-start retention checkpoints")
    forget_p.add_argument("--config", required=True)
    forget_p.add_argument("--out", default=None)
    forget_p.add_argument("--seeds", default=None)
    forget_p.add_argument("--workers", type=int, default=None)
    forget_p.set_defaults(fn=_cmd_forgetting)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.fn(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except Exception as exc:  # noqa: BLE001 - CLI boundary
        print(f"run failed: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_RUN


if __name__ == "__main__":
    sys.exit(main())
