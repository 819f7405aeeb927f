import logging
import os
import sys
from datetime import datetime

from app.config import get_settings


# Configure logging
def setup_logging():
    """Configure application-wide logging"""
    settings = get_settings()
    log_level = settings.log_level.upper()

    # Create logs directory if it doesn't exist
    os.makedirs(settings.log_dir, exist_ok=True)

    # Configure root logger
    logging.basicConfig(
        level=getattr(logging, log_level),
        format="%(asctime)s - %(name)s - %(levelname)s - %(message)s",
        handlers=[
            # Console handler
            logging.StreamHandler(sys.stdout),
            # File handler - rotates daily
            logging.FileHandler(
                os.path.join(settings.log_dir, f"app_{datetime.now().strftime('%Y%m%d')}.log"),
                encoding="utf-8",
            ),
        ],
    )

    # Set specific log levels for noisy libraries
    logging.getLogger("matplotlib").setLevel(logging.WARNING)
    logging.getLogger("PIL").setLevel(logging.WARNING)

    logger = logging.getLogger(__name__)
    logger.info(f"Logging configured at {log_level} level")
    return logger


if __name__ == "__main__":
    logger = setup_logging()

    from app.cli.commands import main

    sys.exit(main())
