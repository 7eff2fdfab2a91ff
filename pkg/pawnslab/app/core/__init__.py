"""
Core modules - configuration, errors, logging
"""
from .config import Settings, get_settings
from .errors import (
    PawnsError,
    PawnsSyntaxError,
    PawnsTypeError,
    ResolutionError,
    PawnsRuntimeError,
    UsageError,
)
from .logger import configure_logging

__all__ = [
    "Settings",
    "get_settings",
    "PawnsError",
    "PawnsSyntaxError",
    "PawnsTypeError",
    "ResolutionError",
    "PawnsRuntimeError",
    "UsageError",
    "configure_logging",
]
