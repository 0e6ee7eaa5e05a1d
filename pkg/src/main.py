import argparse
import os
import sys
from typing import List, Optional

# Add the src directory to the Python path
sys.path.append(os.path.dirname(os.path.dirname(os.path.abspath(__file__))))

from src.config import settings
from src.config.run_config import load_run_config, with_overrides
from src.handlers.cli_handlers import (
    cmd_calibrate,
    cmd_compare,
    cmd_evaluate,
    cmd_report,
    cmd_simulate,
)
from src.models.errors import ConfigError

COMMANDS = ("simulate", "evaluate", "calibrate", "compare", "report")


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", default=None, help=f"run configuration YAML (default {settings.PASS_CONFIG_PATH})")
    common.add_argument("--out", default=None, help="output directory")
    common.add_argument("--dataset", default=None, help="dataset directory holding manifest.json")
    common.add_argument("--strict", action="store_true", default=None, help="treat warnings as errors")
    common.add_argument("--log-level", default=None, help="logging level (default from PASS_LOG_LEVEL)")

    parser = argparse.ArgumentParser(
        prog="pass-efficiency",
        description="Projected attainable speed space: simulate, evaluate and calibrate a driving-efficiency metric",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    simulate = sub.add_parser("simulate", parents=[common], help="generate the trajectory cohort")
    simulate.add_argument("--seed", type=int, default=None, help="base platoon seed, event i uses seed + i")
    simulate.add_argument("--events", type=int, default=None, help="simulate only the first N events")
    simulate.add_argument("--runs", type=int, default=None, help="use only the first N ego policies")

    sub.add_parser("evaluate", parents=[common], help="per-tick PASS and baseline, evaluation report")

    calibrate = sub.add_parser("calibrate", parents=[common], help="grid search of k1, k2")
    calibrate.add_argument("--k1-range", type=float, nargs=2, metavar=("LO", "HI"), default=None)
    calibrate.add_argument("--k2-range", type=float, nargs=2, metavar=("LO", "HI"), default=None)
    calibrate.add_argument("--step", type=float, default=None)

    sub.add_parser("compare", parents=[common], help="PASS against the baseline metric")

    report = sub.add_parser("report", parents=[common], help="consolidated summary")
    report.add_argument("--json", action="store_true", help="machine-readable summary")
    return parser


def main(argv: Optional[List[str]] = None) -> int:
    """Main entry point for the command line"""
    args = build_parser().parse_args(argv)
    settings.configure_logging(args.log_level)

    try:
        config = load_run_config(args.config)
        config = with_overrides(
            config,
            out_dir=args.out,
            dataset_dir=args.dataset,
            k1_range=tuple(args.k1_range) if getattr(args, "k1_range", None) else None,
            k2_range=tuple(args.k2_range) if getattr(args, "k2_range", None) else None,
            step=getattr(args, "step", None),
            strict=args.strict,
        )
    except ConfigError as e:
        print(f"❌ Invalid configuration: {e}")
        return 1

    if args.command == "simulate":
        return cmd_simulate(config, events=args.events, runs=args.runs, seed=args.seed)
    if args.command == "evaluate":
        return cmd_evaluate(config)
    if args.command == "calibrate":
        return cmd_calibrate(config)
    if args.command == "compare":
        return cmd_compare(config)
    return cmd_report(config, as_json=args.json)


if __name__ == "__main__":
    sys.exit(main())
