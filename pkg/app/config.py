from functools import lru_cache

from pydantic_settings import BaseSettings, SettingsConfigDict


class Settings(BaseSettings):
    """Process-wide settings read from the environment (and .env)"""

    model_config = SettingsConfigDict(env_file=".env", extra="ignore")

    log_level: str = "INFO"
    log_dir: str = "logs"

    # Run ledger
    database_url: str = "sqlite:///cavity_runs.db"
    ledger_enabled: bool = True

    # Numerics
    condition_warning_threshold: float = 1e12
    max_workers: int = 1


@lru_cache
def get_settings() -> Settings:
    return Settings()
