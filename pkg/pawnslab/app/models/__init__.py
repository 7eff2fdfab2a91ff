"""
Syntax trees, semantic types and the data environment
"""
from . import ast
from .types import TVar, TCon, TArrow, Type, INT, BOOL, UNIT, show_type
from .dataenv import CtorInfo, DataType, DataEnv

__all__ = [
    "ast",
    # Types
    "TVar",
    "TCon",
    "TArrow",
    "Type",
    "INT",
    "BOOL",
    "UNIT",
    "show_type",
    # Data environment
    "CtorInfo",
    "DataType",
    "DataEnv",
]
