"""Logging configuration for the package."""
import sys
from pathlib import Path

from loguru import logger

from teleport_noise.utils.exceptions import ConfigurationError

LOG_LEVELS = ("TRACE", "DEBUG", "INFO", "SUCCESS", "WARNING", "ERROR", "CRITICAL")

CONSOLE_FORMAT = (
    "<green>{time:HH:mm:ss}</green> | <level>{level: <8}</level> | "
    "<cyan>{name}</cyan>:<cyan>{function}</cyan> - <level>{message}</level>"
)
FILE_FORMAT = "{time:YYYY-MM-DD HH:mm:ss.SSS} | {level: <8} | {name}:{function}:{line} - {message}"


def setup_logger(log_level: str = "WARNING", log_file: str | None = None) -> None:
    """Route package logs to stderr and, optionally, to a rotating file.

    stdout is reserved for CSV and JSON results.

    Args:
        log_level: Logging level name (case-insensitive)
        log_file: Path to log file (optional)

    Raises:
        ConfigurationError: unknown level name
    """
    level = log_level.upper()
    if level not in LOG_LEVELS:
        raise ConfigurationError(f"unknown log level {log_level!r}; use one of {LOG_LEVELS}")

    logger.remove()
    logger.add(sys.stderr, colorize=True, format=CONSOLE_FORMAT, level=level)

    if log_file:
        Path(log_file).parent.mkdir(parents=True, exist_ok=True)
        # Monte Carlo lanes log from worker threads
        logger.add(
            log_file,
            rotation="10 MB",
            retention="1 week",
            compression="zip",
            format=FILE_FORMAT,
            level=level,
            enqueue=True,
        )

    logger.debug(f"Logger configured with level: {level}")


# Create a module-level logger instance
log = logger
