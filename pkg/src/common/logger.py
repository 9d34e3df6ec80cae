"""
Logging configuration for the teeth restoration pipeline.

Conventions:
    - Log records go to stdout (plus LOG_FILE_PATH when LOG_TO_FILE is set).
      stderr is reserved for the CLI's single "error=..." line.
    - Level: ``main.py --log-level`` beats the HDTR_LOG_LEVEL environment
      variable, which beats INFO.
    - WARNING for frames passed through or skipped, and for fallback
      reference choices; INFO for run summaries and checkpoint writes;
      DEBUG for per-frame latencies.
    - matplotlib and PIL loggers are held at WARNING or above.
    - Training logs, metric reports and benchmark results are written to
      their own JSONL / CSV files, never through this logger.

Usage:
    from src.common.logger import get_logger

    logger = get_logger(__name__)
    logger.info("Restored %d frames", n)
"""

import logging
import sys
from typing import Optional

# Track if logging has been set up
_logging_initialized = False

# Third-party loggers that are too chatty at INFO
_QUIET_LOGGERS = ("matplotlib", "PIL")


def setup_logging(
    level: Optional[str] = None,
    log_to_file: Optional[bool] = None,
    log_file_path: Optional[str] = None,
    force: bool = False,
) -> None:
    """
    Initialize logging configuration for the project.

    Called once at application startup. Later calls are ignored unless
    ``force`` is set (the CLI uses it to apply ``--log-level``).

    Args:
        level: Log level name. If None, uses config.LOG_LEVEL
               (which honours the HDTR_LOG_LEVEL environment variable).
        log_to_file: Whether to also log to a file.
                     If None, uses config.LOG_TO_FILE.
        log_file_path: Path to log file.
                       If None, uses config.LOG_FILE_PATH.
        force: Re-initialize even if logging was already set up.
    """
    global _logging_initialized

    if _logging_initialized and not force:
        return

    # Import config here to avoid circular imports
    import config

    level = level or config.LOG_LEVEL
    log_to_file = log_to_file if log_to_file is not None else config.LOG_TO_FILE
    log_file_path = log_file_path or config.LOG_FILE_PATH

    numeric_level = getattr(logging, str(level).upper(), logging.INFO)

    formatter = logging.Formatter(
        fmt="%(asctime)s | %(levelname)-8s | %(name)s | %(message)s",
        datefmt="%Y-%m-%d %H:%M:%S"
    )

    root_logger = logging.getLogger()
    root_logger.setLevel(numeric_level)

    # Remove existing handlers (prevents duplicate logs)
    root_logger.handlers.clear()

    console_handler = logging.StreamHandler(sys.stdout)
    console_handler.setLevel(numeric_level)
    console_handler.setFormatter(formatter)
    root_logger.addHandler(console_handler)

    if log_to_file:
        file_handler = logging.FileHandler(log_file_path)
        file_handler.setLevel(numeric_level)
        file_handler.setFormatter(formatter)
        root_logger.addHandler(file_handler)

    for name in _QUIET_LOGGERS:
        logging.getLogger(name).setLevel(max(numeric_level, logging.WARNING))

    _logging_initialized = True


def get_logger(name: str) -> logging.Logger:
    """
    Get a logger instance for the given module name.

    Automatically initializes logging if not already done.

    Args:
        name: Name for the logger, typically __name__ of the calling module.

    Returns:
        Configured logger instance.
    """
    if not _logging_initialized:
        setup_logging()

    return logging.getLogger(name)
