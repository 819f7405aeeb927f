from app.services.forward_service import build_model, run_forward
from app.services.ledger_service import ledger_run, list_runs
from app.services.oracle_check_service import run_oracle_check
from app.services.reconstruction_service import run_reconstruction
from app.services.sweep_service import run_sweep

__all__ = [
    "build_model", "run_forward",
    "ledger_run", "list_runs",
    "run_oracle_check", "run_reconstruction", "run_sweep"
]
