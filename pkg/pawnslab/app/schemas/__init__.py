"""
Pydantic schemas for diagnostics and driver invocations
"""
from .diagnostic import DIAGNOSTIC_CODES, Span, Diagnostic, sort_diagnostics
from .invocation import Command, Invocation

__all__ = [
    # Diagnostics
    "DIAGNOSTIC_CODES",
    "Span",
    "Diagnostic",
    "sort_diagnostics",
    # Driver
    "Command",
    "Invocation",
]
