"""
State variable discipline.

Tracks, through each definition, which state variables are bound. A
variable declared `ro` or `rw` is bound on entry; `wo` and undeclared
variables become bound by `*v = e` or by a call to a function that writes
them. Case arms and conditional branches intersect. Escapes of a state
variable's reference are reported by the sharing analysis.
"""
import logging
from typing import Dict, FrozenSet, List, Optional, Set

from app.core.errors import ResolutionError
from app.models import ast
from app.models.types import TArrow
from app.schemas.diagnostic import Diagnostic, Span
from app.services.typecheck import TypeCheckResult

logger = logging.getLogger(__name__)

READS = ("ro", "rw")
WRITES = ("wo", "rw")

Bound = FrozenSet[str]


class StateVarChecker:
    """Checks every well-typed definition of a program"""

    def __init__(self, program: ast.Program, types: TypeCheckResult):
        self.program = program
        self.types = types
        self.diagnostics: List[Diagnostic] = []

    def implicits_of(self, name: str) -> Dict[str, str]:
        sig = self.program.signatures.get(name)
        clause = sig.clause if sig is not None else None
        return clause.implicit_modes() if clause is not None else {}

    def check_program(self) -> List[Diagnostic]:
        self._check_declarations()
        for name in sorted(self.program.defs):
            if name in self.types.failed:
                continue
            _DefinitionCheck(self, self.program.defs[name]).run()
        logger.info(f"[StateVars] {len(self.diagnostics)} diagnostics")
        return self.diagnostics

    def _check_declarations(self) -> None:
        for name, sig in sorted(self.program.signatures.items()):
            clause = sig.clause
            if clause is None:
                continue
            for implicit in clause.implicits:
                if implicit.var not in self.program.state_vars:
                    self.diagnostics.append(ResolutionError(
                        f"{implicit.var} in the implicit clause of {name} is not a state variable", implicit.span
                    ).diagnostic)

    def error(self, span: Span, message: str, code: str = "E301") -> None:
        self.diagnostics.append(Diagnostic.error(code, span, message))


class _DefinitionCheck:
    def __init__(self, checker: StateVarChecker, fn: ast.FunctionDef):
        self.checker = checker
        self.fn = fn
        self.modes = checker.implicits_of(fn.name)
        # innermost last: parameters, then one set per block or case arm
        self.scopes: List[Set[str]] = [set(fn.params)]

    def run(self) -> None:
        entry = frozenset(v for v, mode in self.modes.items() if mode in READS)
        exit_bound = self.expr(self.fn.body, entry)
        for var, mode in sorted(self.modes.items()):
            if mode == "wo" and var not in exit_bound:
                self.checker.error(
                    self.fn.span, f"{self.fn.name} declares wo {var} but does not write it on every path"
                )

    def is_local(self, name: str) -> bool:
        return any(name in scope for scope in self.scopes)

    def is_state_var(self, name: str) -> bool:
        return not self.is_local(name) and name in self.checker.program.state_vars

    def need(self, var: str, bound: Bound, span: Span) -> None:
        if var in bound:
            return
        if self.modes.get(var) == "wo":
            self.checker.error(span, f"state variable {var} is read in {self.fn.name} before it is written")
        else:
            self.checker.error(
                span, f"state variable {var} is not available in {self.fn.name}: declare it implicit or bind it first"
            )

    # ============ Expressions ============

    def expr(self, e: ast.Expr, bound: Bound) -> Bound:
        if isinstance(e, (ast.Var, ast.Deref)):
            if self.is_state_var(e.name):
                self.need(e.name, bound, e.span)
            return bound
        if isinstance(e, ast.App):
            return self.call(e, bound)
        if isinstance(e, ast.Case):
            bound = self.expr(e.scrutinee, bound)
            outcomes = []
            for arm in e.arms:
                self.scopes.append({b.name for b in arm.pattern.binders if b.name})
                outcomes.append(self.expr(arm.body, bound))
                self.scopes.pop()
            return frozenset.intersection(*outcomes) if outcomes else bound
        if isinstance(e, ast.If):
            bound = self.expr(e.cond, bound)
            return self.expr(e.then, bound) & self.expr(e.orelse, bound)
        if isinstance(e, ast.Seq):
            self.scopes.append(set())
            try:
                for s in e.stmts:
                    bound = self.stmt(s, bound)
            finally:
                self.scopes.pop()
            return bound
        for child in ast.children(e):
            bound = self.expr(child, bound)
        return bound

    def call(self, e: ast.App, bound: Bound) -> Bound:
        for child in ast.children(e):
            bound = self.expr(child, bound)
        callee = self.callee_implicits(e.func)
        if not callee:
            return bound
        label = e.func.name if isinstance(e.func, ast.Var) else "the function"
        if not e.state_call:
            self.checker.error(
                e.span, f"call of {label} uses state variables ({', '.join(sorted(callee))}) and needs ! before it",
                code="E302",
            )
        for var, mode in sorted(callee.items()):
            if mode in READS and var not in bound:
                self.checker.error(
                    e.span, f"{label} reads state variable {var}, which is not bound in {self.fn.name}"
                )
            if mode in WRITES and self.modes.get(var) == "ro":
                self.checker.error(
                    e.span, f"{label} writes state variable {var}, which {self.fn.name} declares ro"
                )
        return bound | {v for v, mode in callee.items() if mode in WRITES}

    def callee_implicits(self, func: ast.Expr) -> Dict[str, str]:
        if not isinstance(func, ast.Var):
            return {}
        if self.is_local(func.name):
            annot: Optional[ast.SharingClause] = func.ty.annot if isinstance(func.ty, TArrow) else None
            return annot.implicit_modes() if annot is not None else {}
        return self.checker.implicits_of(func.name)

    # ============ Statements ============

    def stmt(self, s: ast.Stmt, bound: Bound) -> Bound:
        bound = self.expr(s.expr, bound)
        if isinstance(s, ast.Let):
            self.scopes[-1].add(s.name)
        elif isinstance(s, ast.RefBind):
            if not self.is_state_var(s.name):
                self.scopes[-1].add(s.name)
                return bound
            if self.modes.get(s.name) == "ro":
                self.checker.error(s.span, f"{self.fn.name} declares {s.name} ro and cannot bind it")
            return bound | {s.name}
        elif isinstance(s, ast.Update) and self.is_state_var(s.name):
            self.need(s.name, bound, s.span)
            if self.modes.get(s.name) == "ro":
                self.checker.error(s.span, f"{self.fn.name} declares {s.name} ro and cannot update it")
        return bound


def check_state_vars(program: ast.Program, types: TypeCheckResult) -> List[Diagnostic]:
    return StateVarChecker(program, types).check_program()
