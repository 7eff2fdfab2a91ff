"""
Dynamic alias oracle.

At every executed statement, computes the set of heap cells each variable
in scope can reach and checks that variables which actually share cells
are related by the statically computed sharing at that statement.
"""
import logging
from dataclasses import dataclass, field
from itertools import combinations
from typing import Dict, FrozenSet, List, Set, Tuple

from app.models import ast
from app.services.interpreter import CtorValue, Heap, RefValue, Value
from app.services.shareanalysis import SharingReport
from app.services.sharing import SharingRel

logger = logging.getLogger(__name__)


def reach(value: Value, heap: Heap) -> FrozenSet[int]:
    """Addresses transitively reachable from a value (closures reach nothing)"""
    seen: Set[int] = set()
    stack = list(_addresses(value))
    while stack:
        addr = stack.pop()
        if addr in seen:
            continue
        seen.add(addr)
        stack.extend(_addresses(heap.read(addr)))
    return frozenset(seen)


def _addresses(value: Value):
    if isinstance(value, CtorValue):
        return value.addrs
    if isinstance(value, RefValue):
        return (value.addr,)
    return ()


def oracle_snapshot(env: Dict[str, Value], heap: Heap) -> Dict[Tuple[str, str], bool]:
    """For each pair of variables in `env`, whether their reach sets intersect"""
    reaches = {name: reach(value, heap) for name, value in env.items()}
    return {
        (x, y): bool(reaches[x] & reaches[y])
        for x, y in combinations(sorted(reaches), 2)
    }


def statically_related(rel: SharingRel, x: str, y: str) -> bool:
    for p in rel.points(x):
        if any(q[0] == y for q in rel.aliases(p)):
            return True
    return False


@dataclass
class OracleViolation:
    function: str
    statement: ast.Stmt
    names: Tuple[str, str]

    def describe(self) -> str:
        span = self.statement.span
        return (
            f"{span.file}:{span.line}:{span.column}: {self.names[0]} and {self.names[1]} share "
            f"at run time in {self.function} but not in the static analysis"
        )


@dataclass
class AliasOracle:
    """Statement observer for the interpreter"""
    report: SharingReport
    violations: List[OracleViolation] = field(default_factory=list)
    observations: int = 0

    def observe(self, fn: str, stmt: ast.Stmt, env: Dict[str, Value], heap: Heap) -> None:
        record = self.report.functions.get(fn)
        if record is None or id(stmt) not in record.stmt_rels:
            return
        rel = record.stmt_rels[id(stmt)]
        scope = record.stmt_scopes[id(stmt)]
        self.observations += 1
        known = {name: value for name, value in env.items() if name in scope}
        for (x, y), shared in oracle_snapshot(known, heap).items():
            if shared and not statically_related(rel, scope[x], scope[y]):
                violation = OracleViolation(fn, stmt, (x, y))
                logger.debug(f"[Oracle] {violation.describe()}")
                self.violations.append(violation)
