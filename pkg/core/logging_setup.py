# core/logging_setup.py
import logging
from typing import Optional

_FORMAT = "%(asctime)s %(levelname)-7s %(name)s: %(message)s"


def configure_logging(level: Optional[str] = None, verbosity: int = 0) -> None:
    """Configure the root logger once for command-line use.

    Each ``-v`` lowers the threshold one step below ``level``.
    """
    base = logging.getLevelName((level or "WARNING").upper())
    if not isinstance(base, int):
        base = logging.WARNING
    effective = max(logging.DEBUG, base - 10 * verbosity)
    logging.basicConfig(level=effective, format=_FORMAT, force=True)
