from dataclasses import dataclass, field, replace
from typing import List, Optional
import logging

import numpy as np

from app.cli.schemas import RunConfig
from app.core.curves import LaurentMap
from app.core.reconstruct import (
    NoiseStudy,
    ReconstructionResult,
    reconstruct,
    relative_errors,
    run_noise_study,
    truncate,
)
from app.core.singlelayer import MeasurementMatrix
from app.services import report_service

# Configure logging
logger = logging.getLogger(__name__)


@dataclass
class ReconstructionOutcome:
    result: ReconstructionResult
    retained_order: int
    study: Optional[NoiseStudy] = None
    files: List[str] = field(default_factory=list)

    @property
    def displayed_map(self) -> LaurentMap:
        """phi_M restricted to the retained coefficients"""
        return truncate(self.result.map, self.retained_order)


def reconstruct_exact(measurement: MeasurementMatrix, truth: Optional[LaurentMap], variant: str) -> ReconstructionResult:
    result = reconstruct(measurement, variant=variant)
    if truth is not None:
        result = replace(result, errors=relative_errors(result.map, truth))
    return result


def reconstruct_noisy(config: RunConfig, measurement: MeasurementMatrix, noise: float) -> tuple:
    """Noise study at one level; returns the median result and the study"""
    truth = config.cavity_map()
    study = run_noise_study(
        measurement,
        noise,
        config.seeds,
        truth=truth,
        variant=config.variant,
        threshold=config.stability_threshold,
    )
    result = ReconstructionResult(
        map=study.median_map,
        order=measurement.order,
        noise=noise,
        center=measurement.center,
        scale=measurement.scale,
        variant=config.variant,
        errors=study.median_errors,
    )
    return result, study


def run_reconstruction(
    config: RunConfig,
    measurement: MeasurementMatrix,
    outer_nodes: Optional[np.ndarray] = None,
    write: bool = True,
) -> ReconstructionOutcome:
    """Recover the cavity from R and write coefficients, curve samples and the overlay"""
    truth = config.cavity_map()
    logger.info(
        f"Reconstructing: M={measurement.order}, center={measurement.center}, "
        f"noise={config.noise}, variant={config.variant}"
    )
    if config.noise == 0:
        result = reconstruct_exact(measurement, truth, config.variant)
        outcome = ReconstructionOutcome(result=result, retained_order=measurement.order)
    else:
        result, study = reconstruct_noisy(config, measurement, config.noise)
        outcome = ReconstructionOutcome(result=result, retained_order=study.retained_order, study=study)

    logger.info(f"✓ a1={result.map.a1:.10g}, a0={result.map.a0:.10g}, retained order={outcome.retained_order}")
    if result.errors is not None:
        for k, error in zip(range(1, -result.map.order - 1, -1), result.errors):
            logger.debug(f"a_{k}: relative error {error:.3e}")

    if write:
        directory = config.output_path
        config_hash = config.config_hash()
        paths = [
            report_service.write_coefficients(directory, result, config_hash, outcome.retained_order),
            report_service.write_curve(directory, outcome.displayed_map, config_hash, measurement.scale),
            report_service.write_overlay_svg(
                directory,
                outcome.displayed_map,
                config_hash,
                measurement.scale,
                truth=truth,
                outer=outer_nodes,
                center=measurement.center,
                title=f"{config.name}: a_1 ... a_-{outcome.retained_order}",
            ),
        ]
        if outcome.study is not None:
            paths.append(
                report_service.write_coefficients_by_seed(directory, outcome.study, config_hash, measurement.scale)
            )
        outcome.files = [str(p) for p in paths]
    return outcome
