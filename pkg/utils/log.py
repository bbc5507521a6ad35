"""
Logging setup for the command-line tools.

Log records go to stderr; stdout carries only the run summary.
"""
from __future__ import annotations

import logging
import os
import sys
from logging.handlers import RotatingFileHandler
from typing import Optional

LOG_FORMAT = "%(asctime)s - %(name)s - %(levelname)s - %(message)s"
MAX_LOG_BYTES = 10 * 1024 * 1024
LOG_BACKUPS = 3


def setup_logging(debug: bool = False, log_file: Optional[str] = None, level: str = "INFO") -> None:
    """
    Configure the root logger.

    Args:
        debug: Enable debug level logging; overrides ``level``.
        log_file: Optional path of a rotating log file.
        level: Level name used when ``debug`` is off.
    """
    level = "DEBUG" if debug else level.upper()
    handlers: list[logging.Handler] = [logging.StreamHandler(sys.stderr)]
    if log_file:
        directory = os.path.dirname(log_file)
        if directory:
            os.makedirs(directory, exist_ok=True)
        handlers.append(
            RotatingFileHandler(log_file, maxBytes=MAX_LOG_BYTES, backupCount=LOG_BACKUPS, encoding="utf-8")
        )
    logging.basicConfig(level=level, format=LOG_FORMAT, handlers=handlers, force=True)


__all__ = ["setup_logging", "LOG_FORMAT"]
