"""Application logging utilities.

Logs go to stderr through the root logger so that tables and metric lines the
CLI prints on stdout stay machine readable. Long training runs log one
progress line every ``log_every`` iterations at INFO; per-iteration detail is
DEBUG only.
"""

import logging
import os
import sys
from typing import Optional

DEFAULT_FORMAT = "%(asctime)s - %(module)s:%(lineno)d - %(levelname)s - %(message)s"

LEVEL_NAMES = ("DEBUG", "INFO", "WARNING", "ERROR")

# third-party loggers that are chatty at INFO
NOISY_LOGGERS = ("matplotlib", "numexpr", "urllib3")


def parse_level(name: str) -> int:
    """Map a ``--log-level`` / ``LOG_LEVEL`` value to a logging level."""
    key = name.strip().upper()
    if key not in LEVEL_NAMES:
        raise ValueError(f"Unknown log level {name!r}; expected one of {', '.join(LEVEL_NAMES)}")
    return getattr(logging, key)


def setup_logging(
    level: int = logging.INFO,
    stream: Optional[object] = None,
    fmt: str = DEFAULT_FORMAT,
) -> None:
    """Configure the root logger; the handler is installed once, the level on every call.

    ``LOG_LEVEL`` in the environment overrides *level*.
    """
    env_level = os.getenv("LOG_LEVEL")
    if env_level:
        level = parse_level(env_level)

    root = logging.getLogger()
    if not root.handlers:
        handler = logging.StreamHandler(stream or sys.stderr)
        handler.setFormatter(logging.Formatter(fmt))
        root.addHandler(handler)
    root.setLevel(level)

    for pkg in NOISY_LOGGERS:
        logging.getLogger(pkg).setLevel(logging.WARNING)
