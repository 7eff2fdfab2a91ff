"""
Renaming expansion.

`renaming new = old ... with new2 = old2 ...` creates a copy of each old
definition under its new name, with every call to an old name of the group
in the copy replaced by the matching new name. A new name without its own
signature takes a copy of the old one.
"""
import copy
import logging
from typing import Dict, FrozenSet, List, Set, Tuple

from app.core.errors import ResolutionError
from app.models import ast
from app.schemas.diagnostic import Diagnostic

logger = logging.getLogger(__name__)


def _substitute_calls(fn: ast.FunctionDef, mapping: Dict[str, str]) -> None:
    _rename_free(fn.body, mapping, frozenset(fn.params))


def _rename_free(node, mapping: Dict[str, str], bound: FrozenSet[str]) -> None:
    """Rename free occurrences only; a local binds from its statement to the end of its block"""
    if isinstance(node, ast.Var):
        if node.name in mapping and node.name not in bound:
            node.name = mapping[node.name]
    elif isinstance(node, ast.Seq):
        for s in node.stmts:
            _rename_free(s, mapping, bound)
            if isinstance(s, (ast.Let, ast.RefBind)):
                bound = bound | {s.name}
    elif isinstance(node, ast.Case):
        _rename_free(node.scrutinee, mapping, bound)
        for arm in node.arms:
            _rename_free(arm.body, mapping, bound | {b.name for b in arm.pattern.binders if b.name})
    else:
        for child in ast.children(node):
            _rename_free(child, mapping, bound)


def _copy_signature(sig: ast.Signature, new: str) -> ast.Signature:
    copied = copy.deepcopy(sig)
    copied.name = new
    clause = copied.clause
    if clause is not None and clause.has_pattern:
        clause.fn_name = new
    return copied


class RenamingExpander:
    """Expands the renaming declarations of one program in dependency order"""

    def __init__(self, program: ast.Program, errors: List[Diagnostic]):
        self.program = program
        self.errors = errors
        # new name -> (old name, substitution of its group, declaration)
        self.pending: Dict[str, Tuple[str, Dict[str, str], ast.RenamingDecl]] = {}
        self.done: Set[str] = set()

    def expand(self) -> ast.Program:
        for decl in self.program.renamings:
            pairs = decl.bindings + decl.with_bindings
            mapping = {old: new for new, old in pairs}
            for new, old in pairs:
                if new in self.pending:
                    self._error(f"{new} is renamed more than once", decl)
                    continue
                self.pending[new] = (old, mapping, decl)
        for new in list(self.pending):
            self._expand_one(new, [])
        return self.program

    def _expand_one(self, new: str, chain: List[str]) -> bool:
        if new in self.done:
            return True
        old, mapping, decl = self.pending[new]
        if new in chain:
            cycle = " -> ".join(chain[chain.index(new):] + [new])
            self._error(f"cyclic renaming: {cycle}", decl)
            return False
        if old not in self.program.defs:
            if old in self.pending:
                if not self._expand_one(old, chain + [new]):
                    self.done.add(new)
                    return False
            else:
                self._error(f"renaming source {old} has no definition", decl)
                self.done.add(new)
                return False

        fn = copy.deepcopy(self.program.defs[old])
        fn.name = new
        _substitute_calls(fn, mapping)
        existing = self.program.defs.get(new)
        self.done.add(new)
        if existing is not None and existing != fn:
            self._error(f"{new} is both defined and introduced by a renaming", decl)
            return False
        self.program.defs[new] = fn
        self.program.renamed_from[new] = old
        if new not in self.program.signatures and old in self.program.signatures:
            self.program.signatures[new] = _copy_signature(self.program.signatures[old], new)
        logger.debug(f"[Renaming] {new} = {old}")
        return True

    def _error(self, message: str, decl: ast.RenamingDecl) -> None:
        self.errors.append(ResolutionError(message, decl.span).diagnostic)


def expand_renamings(program: ast.Program, errors: List[Diagnostic]) -> ast.Program:
    """
    Return a copy of `program` with every renaming expanded.

    Expanding an already expanded program changes nothing: a new name whose
    definition already equals the copy it would receive is left as is.
    """
    expanded = ast.Program(
        data_decls=dict(program.data_decls),
        type_aliases=dict(program.type_aliases),
        signatures=dict(program.signatures),
        state_vars=dict(program.state_vars),
        renamings=list(program.renamings),
        defs=dict(program.defs),
        renamed_from=dict(program.renamed_from),
        file=program.file,
    )
    return RenamingExpander(expanded, errors).expand()
