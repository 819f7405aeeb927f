"""Command line surface: forward, reconstruct, sweep, oracle-check, runs.

Exit codes: 0 success, 2 configuration error, 3 numerical failure.
"""

import argparse
import logging
from pathlib import Path
from typing import List, Optional

from pydantic import ValidationError
from sqlalchemy.exc import SQLAlchemyError

from app.cli.schemas import MeasurementMetadata, RunConfig, load_run_config, parse_complex
from app.core.errors import CavityError, ConfigurationError
from app.services import (
    ledger_run,
    list_runs,
    run_forward,
    run_oracle_check,
    run_reconstruction,
    run_sweep,
)
from app.services import report_service

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_CONFIG = ConfigurationError.exit_code
EXIT_NUMERICAL = CavityError.exit_code


def parse_seeds(text: str) -> List[int]:
    """"0,3,7" or "0:20" (half-open range)"""
    text = text.strip()
    if ":" in text:
        start, stop = text.split(":", 1)
        return list(range(int(start), int(stop)))
    return [int(s) for s in text.split(",") if s.strip()]


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="cavity-reconstruction",
        description="Recover a cavity's exterior conformal map from boundary measurements",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="TOML or JSON run configuration")
    common.add_argument("--order", type=int, help="truncation order M")
    common.add_argument("--center", help="basis center r as RE,IM")
    common.add_argument("--noise", type=float, help="noise level delta in [0, 1]")
    common.add_argument("--seeds", help="seed list, e.g. 0,1,2 or 0:20")
    common.add_argument("--variant", choices=["literal", "corrected"])
    common.add_argument("--nodes", type=int, help="quadrature nodes per boundary")
    common.add_argument("--out", help="output directory")

    sub.add_parser("forward", parents=[common], help="assemble the measurement matrix R")
    reconstruct = sub.add_parser("reconstruct", parents=[common], help="recover the cavity")
    reconstruct.add_argument("--measurement", help="directory holding measurement.csv/json")
    sub.add_parser("sweep", parents=[common], help="error curves over center or noise grids")
    sub.add_parser("oracle-check", parents=[common], help="inversion formula against exact moments")
    runs = sub.add_parser("runs", help="list recorded runs")
    runs.add_argument("--limit", type=int, default=20)
    return parser


def config_from_args(args: argparse.Namespace) -> RunConfig:
    overrides = {
        "order": args.order,
        "noise": args.noise,
        "variant": args.variant,
        "nodes": args.nodes,
        "output_dir": args.out,
    }
    try:
        if args.center is not None:
            overrides["center"] = parse_complex(args.center)
        if args.seeds is not None:
            overrides["seeds"] = parse_seeds(args.seeds)
    except ValueError as e:
        raise ConfigurationError(f"Invalid command line value: {e}") from e
    return load_run_config(args.config, overrides)


# ============ Handlers ============

def handle_forward(config: RunConfig) -> None:
    with ledger_run("forward", config.config_hash(), config.output_dir) as entry:
        outcome = run_forward(config)
        entry.update(scale=outcome.measurement.scale, order=config.order, center=config.center)


def _load_or_compute_measurement(config: RunConfig, measurement_dir: Optional[str]):
    if measurement_dir is not None:
        return report_service.read_measurement(Path(measurement_dir))

    cached = config.output_path / "measurement.json"
    if cached.exists():
        metadata = MeasurementMetadata.model_validate_json(cached.read_text(encoding="utf-8"))
        if metadata.config_hash == config.config_hash():
            logger.info(f"Reusing measurement in {config.output_path}")
            return report_service.read_measurement(config.output_path)
    return run_forward(config).measurement


def handle_reconstruct(config: RunConfig, measurement_dir: Optional[str] = None) -> None:
    with ledger_run("reconstruct", config.config_hash(), config.output_dir) as entry:
        measurement = _load_or_compute_measurement(config, measurement_dir)
        outcome = run_reconstruction(config, measurement, outer_nodes=config.outer_curve().nodes)
        entry.update(
            scale=measurement.scale,
            order=measurement.order,
            center=measurement.center,
            noise=config.noise,
            retained_order=outcome.retained_order,
        )
        entry.add_coefficients(outcome.result.map, outcome.result.errors)


def handle_sweep(config: RunConfig) -> None:
    with ledger_run("sweep", config.config_hash(), config.output_dir) as entry:
        rows, _ = run_sweep(config)
        entry.update(order=config.order, center=config.center, noise=config.noise)
        failed = sum(1 for row in rows if row["status"] == "failed")
        if failed:
            entry.update(message=f"{failed} failed grid rows")


def handle_oracle_check(config: RunConfig) -> None:
    with ledger_run("oracle-check", config.config_hash(), config.output_dir) as entry:
        rows, _ = run_oracle_check(config)
        entry.update(order=len(rows) - 2)


def handle_runs(limit: int) -> None:
    for run in list_runs(limit):
        print(
            f"{run.id:5d}  {run.command:<13} {run.status:<8} {run.config_hash}  "
            f"M={run.order} s={run.scale} {run.output_dir}"
        )


def main(argv: Optional[List[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)

    logger.info("=" * 60)
    logger.info(f"Command: {args.command}")
    logger.info("=" * 60)
    try:
        if args.command == "runs":
            handle_runs(args.limit)
            return EXIT_OK

        config = config_from_args(args)
        logger.info(f"Config {config.name} (hash {config.config_hash()}), output {config.output_dir}")
        if args.command == "forward":
            handle_forward(config)
        elif args.command == "reconstruct":
            handle_reconstruct(config, args.measurement)
        elif args.command == "sweep":
            handle_sweep(config)
        elif args.command == "oracle-check":
            handle_oracle_check(config)
    except ValidationError as e:
        logger.error(f"✗ Invalid configuration: {e}")
        return EXIT_CONFIG
    except CavityError as e:
        logger.error(f"✗ {type(e).__name__}: {e}", exc_info=logger.isEnabledFor(logging.DEBUG))
        return e.exit_code
    except SQLAlchemyError as e:
        logger.error(f"✗ Ledger error: {e}")
        return EXIT_NUMERICAL

    logger.info("=" * 60)
    logger.info(f"✓ {args.command} finished")
    logger.info("=" * 60)
    return EXIT_OK
