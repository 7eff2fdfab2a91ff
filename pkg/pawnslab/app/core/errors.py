"""
Exceptions raised by the pipeline stages
"""
from typing import Optional

from app.schemas.diagnostic import Diagnostic, Span


class PawnsError(Exception):
    """Base exception for all pawnslab errors"""
    def __init__(self, message: str, diagnostic: Optional[Diagnostic] = None):
        super().__init__(message)
        self.diagnostic = diagnostic


class PawnsSyntaxError(PawnsError):
    """Tokenizer or grammar violation (E001)"""
    def __init__(self, message: str, span: Span):
        super().__init__(message, Diagnostic.error("E001", span, message))
        self.span = span


class PawnsTypeError(PawnsError):
    """Unification failure (E101) or bad cast (E102)"""
    def __init__(self, message: str, span: Span, code: str = "E101"):
        super().__init__(message, Diagnostic.error(code, span, message))
        self.span = span
        self.code = code


class ResolutionError(PawnsError):
    """Unknown name, missing renaming source or cyclic renaming (E103)"""
    def __init__(self, message: str, span: Span):
        super().__init__(message, Diagnostic.error("E103", span, message))
        self.span = span


class PawnsRuntimeError(PawnsError):
    """Non-exhaustive match, division by zero or call depth exceeded"""
    def __init__(self, message: str, span: Optional[Span] = None):
        diagnostic = Diagnostic.error("R001", span, message) if span else None
        super().__init__(message, diagnostic)
        self.span = span


class UsageError(PawnsError):
    """Bad command line or unreadable input (exit code 2)"""
    pass
