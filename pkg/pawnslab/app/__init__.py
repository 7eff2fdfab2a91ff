"""
pawnslab application package
"""
from app.core import Settings, get_settings

__all__ = [
    "Settings",
    "get_settings",
]
