from concurrent.futures import ThreadPoolExecutor
from typing import List, Optional
import logging

import numpy as np

from app.cli.schemas import RunConfig
from app.config import get_settings
from app.core.errors import CavityError
from app.core.singlelayer import ForwardModel, MeasurementMatrix, rescale_factor
from app.services import report_service
from app.services.forward_service import build_model
from app.services.reconstruction_service import reconstruct_exact, reconstruct_noisy

# Configure logging
logger = logging.getLogger(__name__)

SWEEP_COLUMNS = [
    "sweep", "center_re", "center_im", "noise", "k", "re", "im",
    "relative_error", "retained_order", "status", "message",
]


def _point_rows(sweep: str, center: complex, noise: float, config: RunConfig, measure) -> List[dict]:
    """Rows of one grid point; a failure becomes a single row with status=failed"""
    base = {"sweep": sweep, "center_re": center.real, "center_im": center.imag, "noise": noise}
    try:
        measurement: MeasurementMatrix = measure()
        if noise == 0:
            result = reconstruct_exact(measurement, config.cavity_map(), config.variant)
            retained = measurement.order
        else:
            result, study = reconstruct_noisy(config, measurement, noise)
            retained = study.retained_order
    except CavityError as e:
        logger.warning(f"⚠ Sweep point {sweep} center={center} noise={noise} failed: {e}")
        return [{**base, "k": np.nan, "re": np.nan, "im": np.nan, "relative_error": np.nan,
                 "retained_order": np.nan, "status": "failed", "message": f"{type(e).__name__}: {e}"}]

    rows = []
    coefficients = result.coefficients()
    for i, k in enumerate(range(1, -result.map.order - 1, -1)):
        error = result.errors[i] if result.errors is not None else np.nan
        rows.append({**base, "k": k, "re": coefficients[i].real, "im": coefficients[i].imag,
                     "relative_error": error, "retained_order": retained, "status": "ok", "message": ""})
    return rows


def sweep_rows(config: RunConfig, model: Optional[ForwardModel] = None) -> List[dict]:
    grid = config.sweep
    points = []
    if grid.center_grid() or grid.noises:
        model = model or build_model(config)
        for center in grid.center_grid():
            points.append(("center", center, config.noise, lambda c=center: model.measure(config.order, c)))
        if grid.noises:
            base = model.measure(config.order, config.center)
            for noise in grid.noises:
                points.append(("noise", config.center, noise, lambda: base))

    workers = max(1, get_settings().max_workers)
    logger.info(f"Sweeping {len(points)} grid points with {workers} worker(s)")
    with ThreadPoolExecutor(max_workers=workers) as pool:
        chunks = list(pool.map(lambda p: _point_rows(p[0], p[1], p[2], config, p[3]), points))
    return [row for chunk in chunks for row in chunk]


def run_sweep(config: RunConfig, write: bool = True):
    """Error curves over the configured center and/or noise grids"""
    rows = sweep_rows(config)
    failed = sum(1 for row in rows if row["status"] == "failed")
    if failed:
        logger.warning(f"⚠ {failed} sweep point(s) failed; recorded in the table")
    path = None
    if write:
        scale = rescale_factor(config.outer_curve())
        path = report_service.write_table(
            config.output_path, "sweep.csv", rows, SWEEP_COLUMNS, config.config_hash(), scale
        )
        logger.info(f"✓ Sweep table written to {path}")
    return rows, path
