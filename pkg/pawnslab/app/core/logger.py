"""
Logging setup for the driver
"""
import logging
import sys

from .config import Settings

_HANDLER_NAME = "pawnslab"


def configure_logging(settings: Settings) -> None:
    """Install one stderr handler on the app logger (idempotent)"""
    root = logging.getLogger("app")
    root.setLevel(settings.log_level.upper())

    if any(h.get_name() == _HANDLER_NAME for h in root.handlers):
        return

    handler = logging.StreamHandler(sys.stderr)
    handler.set_name(_HANDLER_NAME)
    handler.setFormatter(logging.Formatter("%(levelname)s %(message)s"))
    root.addHandler(handler)
