from app.db.database import Base, SessionLocal, configure_engine, get_db, init_db
from app.db.models import CoefficientRecord, ExperimentRun

__all__ = [
    "Base", "configure_engine", "get_db", "init_db", "SessionLocal",
    "ExperimentRun", "CoefficientRecord"
]
