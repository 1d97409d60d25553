from __future__ import annotations

import logging
import logging.handlers
import os
from pathlib import Path

_ENV_LOG_DIR = "CHARFLOW_LOG_DIR"
_DEFAULT_LOG_DIR = Path.home() / ".charflow" / "logs"


def log_dir() -> Path:
    raw = os.getenv(_ENV_LOG_DIR, "").strip()
    path = Path(raw).expanduser() if raw else _DEFAULT_LOG_DIR
    path.mkdir(parents=True, exist_ok=True)
    return path


def log_path() -> Path:
    return log_dir() / "charflow.log"


def get_logger(name: str = "charflow") -> logging.Logger:
    logger = logging.getLogger(name)
    if any(isinstance(handler, logging.handlers.RotatingFileHandler) for handler in logger.handlers):
        return logger
    logger.setLevel(logging.INFO)
    handler = logging.handlers.RotatingFileHandler(
        log_path(), maxBytes=1_500_000, backupCount=5, encoding="utf-8"
    )
    formatter = logging.Formatter("%(asctime)s %(levelname)s %(name)s: %(message)s")
    handler.setFormatter(formatter)
    logger.addHandler(handler)
    return logger


__all__ = ["get_logger", "log_path", "log_dir"]
