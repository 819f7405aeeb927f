from sqlalchemy import Column, DateTime, Float, ForeignKey, Integer, String, Text
from sqlalchemy.orm import relationship
from sqlalchemy.sql import func

from app.db.database import Base


class ExperimentRun(Base):
    """One CLI invocation: what was run, on which configuration, and how it ended"""
    __tablename__ = "experiment_runs"

    id = Column(Integer, primary_key=True, index=True)
    command = Column(String(32), nullable=False, index=True)
    config_hash = Column(String(64), nullable=False, index=True)
    output_dir = Column(String(500), default="")

    # Numerical context
    scale = Column(Float, nullable=True)
    order = Column(Integer, nullable=True)
    center_re = Column(Float, default=0.0)
    center_im = Column(Float, default=0.0)
    noise = Column(Float, default=0.0)
    retained_order = Column(Integer, nullable=True)

    # Outcome
    status = Column(String(16), default="running")  # running, success, failed
    message = Column(Text, default="")

    created_at = Column(DateTime(timezone=True), server_default=func.now())
    finished_at = Column(DateTime(timezone=True), nullable=True)

    coefficients = relationship(
        "CoefficientRecord", back_populates="run", cascade="all, delete-orphan"
    )


class CoefficientRecord(Base):
    """Recovered Laurent coefficient a_k of a run"""
    __tablename__ = "coefficient_records"

    id = Column(Integer, primary_key=True, index=True)
    run_id = Column(Integer, ForeignKey("experiment_runs.id", ondelete="CASCADE"), nullable=False)
    k = Column(Integer, nullable=False)
    real = Column(Float, nullable=False)
    imag = Column(Float, nullable=False)
    relative_error = Column(Float, nullable=True)

    run = relationship("ExperimentRun", back_populates="coefficients")
