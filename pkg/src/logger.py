#!/usr/bin/env python3
import os
import sys
import logging
from datetime import datetime, timezone
from logging.handlers import RotatingFileHandler

from src.settings import LOG_DIR, LOG_LEVEL


def setup_logger(level: str = LOG_LEVEL, log_dir: str = LOG_DIR) -> logging.Logger:

    class CustomFormatter(logging.Formatter):
        def format(self, record):
            record.name = record.name.ljust(20)
            return super().format(record)

    logger = logging.getLogger("gtoc12")
    logger.setLevel(logging.DEBUG)
    if logger.handlers:
        return logger

    log_format = "%(asctime)s [%(levelname)s] %(name)s: %(message)s"
    date_format = "%Y-%m-%d %H:%M:%S"

    console_handler = logging.StreamHandler(sys.stdout)
    console_handler.setLevel(level.upper())
    console_handler.setFormatter(CustomFormatter(fmt=log_format, datefmt=date_format))
    logger.addHandler(console_handler)

    os.makedirs(log_dir, exist_ok=True)
    today = datetime.now(timezone.utc)
    file_handler = RotatingFileHandler(
        filename=os.path.join(log_dir, f"gtoc12_{today.day:02d}_{today.month:02d}_{today.year}.log"),
        maxBytes=10_000_000,
        backupCount=5,
        encoding="utf-8",
    )
    file_handler.setLevel(logging.DEBUG)
    file_handler.setFormatter(CustomFormatter(fmt=log_format, datefmt=date_format))
    logger.addHandler(file_handler)

    return logger
