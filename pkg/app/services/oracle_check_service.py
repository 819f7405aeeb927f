from typing import List
import logging

import numpy as np

from app.cli.schemas import RunConfig
from app.core.curves import check_map_injective, invert_map
from app.core.errors import ConfigurationError, OracleFailureError
from app.core.oracle import laurent_inversion_oracle, moments_from_map
from app.core.reconstruct import invert_moments
from app.services import report_service

# Configure logging
logger = logging.getLogger(__name__)

ORACLE_TOLERANCE = 1e-8
ORACLE_COLUMNS = [
    "k", "true_re", "true_im",
    "corrected_re", "corrected_im", "corrected_abs_error",
    "literal_re", "literal_im", "literal_abs_error",
    "inverse_formula_re", "inverse_formula_im",
    "inverse_oracle_re", "inverse_oracle_im",
]


def oracle_rows(config: RunConfig) -> List[dict]:
    """Moments of the configured cavity -> both coefficient variants, plus the inverse map two ways"""
    truth = config.cavity_map()
    if truth is None:
        raise ConfigurationError("oracle-check needs a cavity")
    check_map_injective(truth)

    order = max(config.order, truth.order, 2)
    sequences = moments_from_map(truth, order).sequences()
    corrected = invert_moments(sequences, "corrected").map
    literal = invert_moments(sequences, "literal").map
    formula = invert_map(truth, order)
    try:
        sampled = laurent_inversion_oracle(truth, order)
    except OracleFailureError as e:
        logger.warning(f"⚠ Inversion oracle failed: {e}")
        sampled = None

    rows = []
    for k in range(1, -order - 1, -1):
        exact = truth.coefficient(k)
        row = {
            "k": k,
            "true_re": exact.real,
            "true_im": exact.imag,
            "corrected_re": corrected.coefficient(k).real,
            "corrected_im": corrected.coefficient(k).imag,
            "corrected_abs_error": abs(corrected.coefficient(k) - exact),
            "literal_re": literal.coefficient(k).real,
            "literal_im": literal.coefficient(k).imag,
            "literal_abs_error": abs(literal.coefficient(k) - exact),
            "inverse_formula_re": formula.coefficient(k).real,
            "inverse_formula_im": formula.coefficient(k).imag,
            "inverse_oracle_re": sampled.coefficient(k).real if sampled is not None else np.nan,
            "inverse_oracle_im": sampled.coefficient(k).imag if sampled is not None else np.nan,
        }
        rows.append(row)
    return rows


def run_oracle_check(config: RunConfig, write: bool = True):
    """Fails with OracleFailureError when the corrected variant misses the truth"""
    rows = oracle_rows(config)
    path = None
    if write:
        path = report_service.write_table(
            config.output_path, "oracle_check.csv", rows, ORACLE_COLUMNS, config.config_hash(), 1.0
        )
        logger.info(f"✓ Oracle check written to {path}")

    worst = max(row["corrected_abs_error"] for row in rows)
    worst_literal = max(row["literal_abs_error"] for row in rows)
    logger.info(f"Corrected variant max error {worst:.3e}; literal variant max error {worst_literal:.3e}")
    if worst > ORACLE_TOLERANCE:
        raise OracleFailureError(f"Corrected variant misses the truth by {worst:.3e}")
    return rows, path
