"""
Utility modules
"""
from .prelude import PRELUDE_SOURCE, PRIMITIVES, attach_prelude
from .pretty import pretty_program

__all__ = [
    "PRELUDE_SOURCE",
    "PRIMITIVES",
    "attach_prelude",
    "pretty_program",
]
