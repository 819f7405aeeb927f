from contextlib import contextmanager
from datetime import datetime, timezone
from typing import Optional
import logging

import numpy as np
from sqlalchemy.exc import SQLAlchemyError

from app.config import get_settings
from app.core.curves import LaurentMap
from app.db.database import SessionLocal, init_db
from app.db.models import CoefficientRecord, ExperimentRun

# Configure logging
logger = logging.getLogger(__name__)


class LedgerEntry:
    """Mutable view of the run being recorded; a no-op when the ledger is disabled"""

    def __init__(self, command: str, config_hash: str, output_dir: str):
        self.command = command
        self.config_hash = config_hash
        self.output_dir = output_dir
        self.fields: dict = {}
        self.coefficients: list = []

    def update(self, **fields):
        self.fields.update({k: v for k, v in fields.items() if v is not None})

    def add_coefficients(self, laurent: LaurentMap, errors: Optional[np.ndarray] = None):
        ks = range(1, -laurent.order - 1, -1)
        for i, k in enumerate(ks):
            value = laurent.coefficient(k)
            error = None
            if errors is not None and np.isfinite(errors[i]):
                error = float(errors[i])
            self.coefficients.append((k, value.real, value.imag, error))


def _center_fields(fields: dict) -> dict:
    center = fields.pop("center", None)
    if center is not None:
        fields["center_re"] = float(complex(center).real)
        fields["center_im"] = float(complex(center).imag)
    return fields


def save_run(entry: LedgerEntry, status: str, message: str = "") -> Optional[int]:
    """Persist one ExperimentRun with its coefficients"""
    fields = _center_fields(dict(entry.fields))
    note = fields.pop("message", "")
    db = SessionLocal()
    try:
        run = ExperimentRun(
            command=entry.command,
            config_hash=entry.config_hash,
            output_dir=entry.output_dir,
            status=status,
            message=message or note,
            finished_at=datetime.now(timezone.utc),
            **fields,
        )
        for k, re, im, error in entry.coefficients:
            run.coefficients.append(CoefficientRecord(k=k, real=re, imag=im, relative_error=error))
        db.add(run)
        db.commit()
        db.refresh(run)
        logger.info(f"Ledger: recorded run id={run.id} ({entry.command}, {status})")
        return run.id
    except SQLAlchemyError as e:
        logger.error(f"Database error in save_run: {e}", exc_info=True)
        db.rollback()
        raise
    finally:
        db.close()


def _record(entry: LedgerEntry, status: str, message: str = "") -> None:
    try:
        save_run(entry, status, message)
    except SQLAlchemyError as e:
        logger.warning(f"⚠ Ledger unavailable, {entry.command} run not recorded: {e}")


@contextmanager
def ledger_run(command: str, config_hash: str, output_dir: str):
    """Record the enclosed command; failures are stored with their message and re-raised.

    A broken ledger never fails the command itself.
    """
    entry = LedgerEntry(command, config_hash, output_dir)
    enabled = get_settings().ledger_enabled
    if enabled:
        try:
            init_db()
        except SQLAlchemyError as e:
            logger.warning(f"⚠ Ledger unavailable, {command} run not recorded: {e}")
            enabled = False
    try:
        yield entry
    except Exception as e:
        if enabled:
            _record(entry, "failed", f"{type(e).__name__}: {e}")
        raise
    if enabled:
        _record(entry, "success")


def list_runs(limit: int = 20) -> list:
    init_db()
    db = SessionLocal()
    try:
        return (
            db.query(ExperimentRun)
            .order_by(ExperimentRun.id.desc())
            .limit(limit)
            .all()
        )
    finally:
        db.close()
