"""
Pipeline stages
"""
from .lexer import Token, tokenize
from .parser import parse_program, parse_source, parse_type
from .renaming import expand_renamings
from .typecheck import TypeCheckResult, check_types
from .statevars import check_state_vars
from .sharedom import Component, FoldedTypeGraph, SharingDomain, fold_type, components_of
from .sharing import SharingRel, entails
from .shareanalysis import FunctionSharing, SharingReport, analyze_sharing
from .interpreter import Heap, Interpreter, match_pattern, exec_update
from .oracle import AliasOracle, oracle_snapshot
from .render import render_diagnostic, render_all
from .pipeline import CheckResult, RunResult, check_source, run_checked

__all__ = [
    # Frontend
    "Token",
    "tokenize",
    "parse_program",
    "parse_source",
    "parse_type",
    "expand_renamings",
    # Types
    "TypeCheckResult",
    "check_types",
    "check_state_vars",
    # Sharing
    "Component",
    "FoldedTypeGraph",
    "SharingDomain",
    "fold_type",
    "components_of",
    "SharingRel",
    "entails",
    "FunctionSharing",
    "SharingReport",
    "analyze_sharing",
    # Runtime
    "Heap",
    "Interpreter",
    "match_pattern",
    "exec_update",
    "AliasOracle",
    "oracle_snapshot",
    # Driver
    "render_diagnostic",
    "render_all",
    "CheckResult",
    "RunResult",
    "check_source",
    "run_checked",
]
