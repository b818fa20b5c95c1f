"""
Logging configuration for the toolkit
"""

import logging
import sys
from pathlib import Path
from app.core.config import settings


def setup_logging(level: str = None):
    """Configure logging for the command-line harness"""
    handlers = [logging.StreamHandler(sys.stderr)]

    if settings.LOG_TO_FILE:
        log_path = Path(settings.LOG_FILE)
        log_path.parent.mkdir(parents=True, exist_ok=True)
        handlers.append(logging.FileHandler(log_path))

    logging.basicConfig(
        level=getattr(logging, (level or settings.LOG_LEVEL).upper()),
        format="%(asctime)s - %(name)s - %(levelname)s - %(message)s",
        handlers=handlers,
        force=True
    )

    # numerical libraries are chatty at debug level
    logging.getLogger("numpy").setLevel(logging.WARNING)
    logging.getLogger("scipy").setLevel(logging.WARNING)

    logger = logging.getLogger(__name__)
    logger.debug("Logging configured successfully")
