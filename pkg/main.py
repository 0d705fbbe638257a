"""
Command-line entry point.

    python main.py analyze --config config/examples/bistability.json --out report.json --svg fig.svg
    python main.py validate --config config/examples/bistability.json --trials 20 --paths 2000

Exit codes: 0 certified result, 2 structure computed but the confidence
certificate failed (G~ left the domain), 1 any error.
"""

import argparse
import sys
from pathlib import Path
from typing import List, Optional

import pydantic

from config.config import AnalysisConfig
from MorseInsight.components.figure import render_svg
from MorseInsight.components.pipeline import run_detailed, validate
from MorseInsight.utils.exceptions import ConfigurationError, MorseInsightError
from MorseInsight.utils.logger import get_logger, set_console_level

logger = get_logger(__name__)

EXIT_OK = 0
EXIT_ERROR = 1
EXIT_UNCERTIFIED = 2


def load_config(path: str, seed: Optional[int] = None) -> AnalysisConfig:
    """
    Read and validate an experiment file.

    A relative CSV path is resolved against the directory of the config file.

    Raises:
        ConfigurationError: if the file is missing or fails validation
    """
    config_path = Path(path)
    if not config_path.is_file():
        raise ConfigurationError(f"config file {config_path} does not exist", config_key="config")
    try:
        config = AnalysisConfig.model_validate_json(config_path.read_text(encoding="utf-8"))
    except pydantic.ValidationError as e:
        raise ConfigurationError(
            f"invalid config {config_path}: {e.error_count()} error(s)",
            config_key="config",
            details={"errors": [f"{'.'.join(map(str, err['loc']))}: {err['msg']}" for err in e.errors()]},
        ) from e

    updates = {}
    if config.data.csv is not None and not Path(config.data.csv).is_absolute():
        csv_path = config_path.parent / config.data.csv
        updates["data"] = config.data.model_copy(update={"csv": str(csv_path)})
    if seed is not None:
        updates["seed"] = seed
    return config.model_copy(update=updates) if updates else config


def _write(text: str, out: Optional[str]) -> None:
    if out is None:
        sys.stdout.write(text + "\n")
        return
    path = Path(out)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(text + "\n", encoding="utf-8")
    logger.info(f"Wrote {path}")


def cmd_analyze(args: argparse.Namespace) -> int:
    config = load_config(args.config, args.seed)
    result = run_detailed(config)
    report = result.report
    _write(report.model_dump_json(indent=2, by_alias=True), args.out or config.output.report)

    svg = args.svg or config.output.svg
    if svg:
        render_svg(report, result.enclosure, result.data, result.model, svg)

    if not report.confidence_valid:
        logger.warning("Morse graph computed, but G~ leaves the domain; the result is not certified")
        return EXIT_UNCERTIFIED
    return EXIT_OK


def cmd_validate(args: argparse.Namespace) -> int:
    config = load_config(args.config, args.seed)
    summary = validate(config, args.trials, args.paths)
    _write(summary.model_dump_json(indent=2, by_alias=True), args.out)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="morse-insight",
        description="Morse graphs and Conley indices of 1D maps learned from samples",
    )
    parser.add_argument("--quiet", action="store_true", help="only log errors to the console")
    sub = parser.add_subparsers(dest="command", required=True)

    analyze = sub.add_parser("analyze", help="run one experiment and write its report")
    analyze.add_argument("--config", required=True, help="experiment JSON file")
    analyze.add_argument("--out", help="report path (default: stdout or output.report)")
    analyze.add_argument("--svg", help="figure path (default: output.svg)")
    analyze.add_argument("--seed", type=int, help="override the master seed")
    analyze.set_defaults(handler=cmd_analyze)

    check = sub.add_parser("validate", help="Monte Carlo coverage of the enclosure")
    check.add_argument("--config", required=True, help="experiment JSON file")
    check.add_argument("--trials", type=int, required=True)
    check.add_argument("--paths", type=int, required=True, help="posterior paths per trial")
    check.add_argument("--out", help="summary path (default: stdout)")
    check.add_argument("--seed", type=int, help="override the master seed")
    check.set_defaults(handler=cmd_validate)
    return parser


def main(argv: Optional[List[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.quiet:
        set_console_level("ERROR")
    try:
        return args.handler(args)
    except MorseInsightError as e:
        logger.error(f"{args.command} failed: {e}")
        print(f"error: {e}", file=sys.stderr)
        return EXIT_ERROR
    except Exception as e:
        logger.exception(f"Unexpected error during {args.command}")
        print(f"error: {e}", file=sys.stderr)
        return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())
