from sqlalchemy import create_engine
from sqlalchemy.orm import declarative_base, sessionmaker

from app.config import get_settings

Base = declarative_base()

engine = None
SessionLocal = sessionmaker(autocommit=False, autoflush=False)


def configure_engine(database_url: str | None = None):
    """(Re)bind the ledger engine; defaults to DATABASE_URL from settings"""
    global engine
    url = database_url or get_settings().database_url

    # Handle postgres:// vs postgresql:// (for compatibility)
    if url.startswith("postgres://"):
        url = url.replace("postgres://", "postgresql://", 1)

    connect_args = {"check_same_thread": False} if url.startswith("sqlite") else {}
    engine = create_engine(url, pool_pre_ping=True, connect_args=connect_args)
    SessionLocal.configure(bind=engine)
    return engine


def get_db():
    """Yield a ledger session and close it afterwards"""
    if engine is None:
        configure_engine()
    db = SessionLocal()
    try:
        yield db
    finally:
        db.close()


def init_db():
    """Initialize ledger tables"""
    from app.db.models import CoefficientRecord, ExperimentRun  # noqa: F401

    if engine is None:
        configure_engine()
    Base.metadata.create_all(bind=engine)
