from dataclasses import dataclass
import logging

from app.cli.schemas import MeasurementMetadata, RunConfig
from app.core.singlelayer import ForwardModel, MeasurementMatrix
from app.services import report_service

# Configure logging
logger = logging.getLogger(__name__)


@dataclass
class ForwardOutcome:
    model: ForwardModel
    measurement: MeasurementMatrix
    metadata: MeasurementMetadata


def build_model(config: RunConfig) -> ForwardModel:
    """Sample both boundaries and factorize the rescaled forward problem"""
    outer = config.outer_curve()
    cavity = config.cavity_curve()
    logger.info(
        f"Geometry: outer={config.outer.kind} ({outer.size} nodes), "
        f"cavity={'none' if cavity is None else f'{cavity.size} nodes'}"
    )
    return ForwardModel.build(outer, cavity)


def measurement_metadata(config: RunConfig, model: ForwardModel, measurement: MeasurementMatrix) -> MeasurementMetadata:
    return MeasurementMetadata(
        config_hash=config.config_hash(),
        name=config.name,
        order=measurement.order,
        scale=measurement.scale,
        center=[measurement.center.real, measurement.center.imag],
        nodes=config.nodes,
        inner_nodes=config.inner_nodes or (config.nodes if model.has_cavity else None),
        has_cavity=model.has_cavity,
        outer_capacity=model.equilibrium_outer.capacity,
        cavity_capacity=model.equilibrium_inner.capacity if model.has_cavity else None,
        conditions=measurement.conditions,
    )


def run_forward(config: RunConfig, write: bool = True) -> ForwardOutcome:
    """Assemble R and Q_Gamma for the configured order and center"""
    model = build_model(config)
    measurement = model.measure(config.order, config.center)
    metadata = measurement_metadata(config, model, measurement)
    if write:
        paths = report_service.write_measurement(config.output_path, measurement, metadata)
        logger.info(f"✓ Measurement written to {', '.join(str(p) for p in paths)}")
    return ForwardOutcome(model=model, measurement=measurement, metadata=metadata)
