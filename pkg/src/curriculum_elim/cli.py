"""Command-line entry point: ``curriculum-elim <subcommand> [flags]``.

Exit codes: 0 on success, 2 for configuration problems, 3 for failures
while running.
"""

from __future__ import annotations

import argparse
import json
import sys
from typing import Sequence

from .errors import ConfigError, CurriculumError, InvalidInput
from .experiments import AlgorithmSettings, ExperimentConfig, ExperimentName, run_experiment, write_report

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_RUNTIME = 3

_ALGORITHM_KEYS = {"r_bar", "delta", "nu", "c_const", "variance_mode"}
_TOP_KEYS = {"name", "params", "reps", "master_seed", "algorithm", "kappa", "workers", "output_path"}


class _ConfigParserError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise _ConfigParserError(message)


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="curriculum-elim", description="Source-elimination experiments.")
    parser.add_argument("command", choices=[name.value for name in ExperimentName])
    parser.add_argument("--config", help="JSON file mirroring the experiment configuration")
    parser.add_argument("--seed", type=int, help="master seed; repetition i uses seed + i")
    parser.add_argument("--reps", type=int, help="repetitions per cell")
    parser.add_argument("--out", help="output prefix for <out>.csv and <out>.meta.json")
    parser.add_argument("--rounds", type=int, help="maximum number of elimination rounds")
    parser.add_argument("--delta", type=float, help="overall confidence level")
    parser.add_argument("--kappa", type=float, help="weak-oracle multiplier for the reference set")
    parser.add_argument("--variance-mode", choices=["known", "estimated", "trace"])
    parser.add_argument("--workers", type=int, help="worker processes for repetitions")
    return parser


def _load_config_file(path: str) -> dict:
    try:
        with open(path, encoding="utf-8") as handle:
            data = json.load(handle)
    except FileNotFoundError as exc:
        raise ConfigError(f"config file not found: {path}") from exc
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config file {path} is not valid JSON: {exc}") from exc
    if not isinstance(data, dict):
        raise ConfigError(f"config file {path} must contain a JSON object")
    return data


def resolve_config(args: argparse.Namespace) -> ExperimentConfig:
    data = _load_config_file(args.config) if args.config else {}
    unknown = set(data) - _TOP_KEYS
    if unknown:
        raise ConfigError(f"unknown config keys: {sorted(unknown)}")
    if data.get("name") not in (None, args.command):
        raise ConfigError(f"config is for {data['name']!r} but the subcommand is {args.command!r}")
    algo_data = dict(data.get("algorithm") or {})
    if set(algo_data) - _ALGORITHM_KEYS:
        raise ConfigError(f"unknown algorithm keys: {sorted(set(algo_data) - _ALGORITHM_KEYS)}")
    overrides = {"r_bar": args.rounds, "delta": args.delta, "variance_mode": args.variance_mode}
    algo_data.update({k: v for k, v in overrides.items() if v is not None})
    try:
        algorithm = AlgorithmSettings(**algo_data)
        config = ExperimentConfig(
            name=ExperimentName(args.command),
            params=dict(data.get("params") or {}),
            reps=args.reps if args.reps is not None else data.get("reps", 200),
            master_seed=args.seed if args.seed is not None else data.get("master_seed", 0),
            algorithm=algorithm,
            kappa=args.kappa if args.kappa is not None else data.get("kappa"),
            workers=args.workers if args.workers is not None else data.get("workers", 1),
            output_path=args.out if args.out is not None else data.get("output_path"),
        )
    except (TypeError, ValueError) as exc:
        raise ConfigError(str(exc)) from exc
    if config.output_path is None:
        config.output_path = config.name.value
    return config


def run_cli(argv: Sequence[str] | None = None) -> int:
    try:
        args = build_parser().parse_args(argv)
        config = resolve_config(args)
    except (_ConfigParserError, ConfigError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    try:
        report = run_experiment(config)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except InvalidInput as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (CurriculumError, ArithmeticError, RuntimeError, OSError) as exc:
        print(f"runtime error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME
    try:
        csv_path, meta_path = write_report(report, config.output_path)
    except OSError as exc:
        print(f"runtime error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME
    summary = {"experiment": config.name.value, "rows": len(report.rows), "csv": csv_path, "meta": meta_path}
    if "report" in report.extras:
        summary["report"] = report.extras["report"]
    print(json.dumps(summary, default=str))
    return EXIT_OK


def main() -> None:
    sys.exit(run_cli())
