"""
Pawns Sharing Analysis
Forward abstract interpretation of each definition over the sharing relation.

Each statement is visited once; calls are summarized by the callee's
declared pre/post conditions, so no fixpoint iteration is needed. The
analysis enforces `!` annotations (E201), preconditions (E202),
postconditions (E203), the abstract/concrete discipline (E204) and the
escape of state variables through arguments and results (E301).
"""
import itertools
import logging
from collections import Counter
from dataclasses import dataclass, field
from typing import Dict, FrozenSet, Iterable, List, Optional, Set, Tuple

from app.core.errors import PawnsError
from app.models import ast
from app.models.types import TArrow, TCon, Type
from app.schemas.diagnostic import Diagnostic, Span
from app.services.sharedom import REF_STEP, Component, SharingDomain
from app.services.sharing import (
    ABSTRACT, RESULT, Point, SharingRel, SignatureRels,
    abstract_point, compatible, elaborate_signature, entails, param_owner,
    rename_rel, show_point, violations,
)
from app.services.typecheck import TypeCheckResult
from app.utils.prelude import PRIMITIVES

logger = logging.getLogger(__name__)

RESULT_OWNER = "$result"

STATEMENTS = (ast.Let, ast.RefBind, ast.Update, ast.ExprStmt)

# component -> points the value's cells may coincide with; a key with no
# sources is a freshly allocated cell
Value = Dict[Component, Set[Point]]


def split_arrow(t: Type, n: int) -> Optional[Tuple[List[Type], Type]]:
    """Split a (possibly curried) arrow into `n` parameter types and the rest"""
    params: List[Type] = []
    while len(params) < n and isinstance(t, TArrow):
        take = t.params[: n - len(params)]
        params.extend(take)
        t = t.result if len(take) == len(t.params) else TArrow(t.params[len(take):], t.result)
    if len(params) < n:
        return None
    return params, t


def statements_of(fn: ast.FunctionDef) -> List[ast.Stmt]:
    """Statements of a body in pre-order; dump indices follow this order"""
    return [n for n in ast.walk(fn.body) if isinstance(n, STATEMENTS)]


# ============ Liveness ============

class Liveness:
    """Names mentioned later on some path, recorded after each call and update"""

    def __init__(self, body: ast.Expr):
        self.after: Dict[int, FrozenSet[str]] = {}
        self._expr(body, frozenset())

    def live_after(self, node) -> FrozenSet[str]:
        return self.after.get(id(node), frozenset())

    def _expr(self, e, after: FrozenSet[str]) -> FrozenSet[str]:
        if isinstance(e, (ast.Var, ast.Deref)):
            return after | {e.name}
        if isinstance(e, ast.Ctor):
            current = after
            for arg in reversed(e.args):
                current = self._expr(arg, current)
            return current
        if isinstance(e, ast.App):
            self.after[id(e)] = after
            current = after | set(e.annotations)
            for arg in reversed(e.args):
                current = self._expr(arg.expr, current)
            return self._expr(e.func, current)
        if isinstance(e, ast.BinOp):
            return self._expr(e.left, self._expr(e.right, after))
        if isinstance(e, ast.If):
            branches = self._expr(e.then, after) | self._expr(e.orelse, after)
            return self._expr(e.cond, branches)
        if isinstance(e, ast.Case):
            live: FrozenSet[str] = frozenset()
            for arm in e.arms:
                bound = {b.name for b in arm.pattern.binders if b.name}
                live |= self._expr(arm.body, after) - bound
            return self._expr(e.scrutinee, live)
        if isinstance(e, ast.Cast):
            return self._expr(e.expr, after)
        if isinstance(e, ast.Seq):
            current = after
            for stmt in reversed(e.stmts):
                current = self._stmt(stmt, current)
            return current
        return after

    def _stmt(self, s, after: FrozenSet[str]) -> FrozenSet[str]:
        if isinstance(s, (ast.Let, ast.RefBind)):
            self.after[id(s)] = after
            return self._expr(s.expr, after - {s.name})
        if isinstance(s, ast.Update):
            self.after[id(s)] = after
            return self._expr(s.expr, after | set(s.annotations) | {s.name})
        return self._expr(s.expr, after)


# ============ Results ============

@dataclass
class FunctionSharing:
    """Per-definition analysis record"""
    name: str
    stmt_rels: Dict[int, SharingRel] = field(default_factory=dict)
    # visible name -> owner at each statement
    stmt_scopes: Dict[int, Dict[str, str]] = field(default_factory=dict)
    exit_rel: Optional[SharingRel] = None
    statements_analyzed: int = 0
    inferred_post: Optional[ast.SharingDecl] = None

    def dump(self, fn: ast.FunctionDef) -> str:
        lines = []
        for i, stmt in enumerate(statements_of(fn)):
            rel = self.stmt_rels.get(id(stmt))
            if rel is not None:
                lines.extend(f"[{i}] {line}" for line in rel.show())
        if self.exit_rel is not None:
            lines.extend(f"[exit] {line}" for line in self.exit_rel.show())
        return "".join(line + "\n" for line in lines)


@dataclass
class SharingReport:
    functions: Dict[str, FunctionSharing] = field(default_factory=dict)
    diagnostics: List[Diagnostic] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not any(d.is_error for d in self.diagnostics)


# ============ Analyzer ============

class SharingAnalyzer:
    """Program-level driver: signature environment, inference order, reports"""

    def __init__(self, program: ast.Program, types: TypeCheckResult):
        self.program = program
        self.types = types
        self.domain = SharingDomain(types.data_env)
        self.inferred: Dict[str, ast.SharingDecl] = {}
        self.broken: Set[str] = set()
        self.report = SharingReport()
        self._cache: Dict[Tuple, SignatureRels] = {}

    # ============ Signature environment ============

    def is_global(self, name: str) -> bool:
        return name in self.program.defs or name in PRIMITIVES

    def arity_of(self, name: str) -> int:
        fn = self.program.defs.get(name)
        if fn is not None:
            return len(fn.params)
        t = self.types.fn_types.get(name)
        return len(t.params) if isinstance(t, TArrow) else 0

    def clause_of(self, name: str) -> Optional[ast.SharingClause]:
        if name in self.broken:
            return None
        sig = self.program.signatures.get(name)
        return sig.clause if sig is not None else None

    def signature(
        self,
        name: Optional[str],
        clause: Optional[ast.SharingClause],
        params: List[Type],
        result: Type,
        span: Span,
    ) -> SignatureRels:
        """Elaborated pre/post for a callee at the given (instantiated) types"""
        key = (name, tuple(params), result) if name is not None else None
        if key is not None and key in self._cache:
            return self._cache[key]
        override = self.inferred.get(name) if name is not None else None
        try:
            rels = elaborate_signature(clause, params, result, self.domain, override)
        except PawnsError:
            rels = elaborate_signature(None, params, result, self.domain)
        if key is not None:
            self._cache[key] = rels
        return rels

    def _validate_signatures(self) -> None:
        for name, sig in self.program.signatures.items():
            clause = sig.clause
            if clause is None or name in self.types.failed or name not in self.types.fn_types:
                continue
            split = split_arrow(self.types.fn_types[name], self.arity_of(name))
            if split is None:
                continue
            try:
                elaborate_signature(clause, split[0], split[1], self.domain)
            except PawnsError as e:
                self.broken.add(name)
                self.report.diagnostics.append(e.diagnostic)

    # ============ Program ============

    def analyze_program(self) -> SharingReport:
        self._validate_signatures()
        order = sorted(self.program.defs, key=lambda n: not self._wants_inference(n))
        for name in order:
            fn = self.program.defs[name]
            if name in self.types.failed or name in self.broken:
                continue
            if self._wants_inference(name):
                self.infer_postcondition(fn)
            else:
                self.analyze_function(fn)
        logger.info(
            f"[Sharing] analyzed {len(self.report.functions)} definitions, "
            f"{len(self.report.diagnostics)} diagnostics"
        )
        return self.report

    def _wants_inference(self, name: str) -> bool:
        clause = self.clause_of(name)
        return clause is not None and clause.post is not None and clause.post.kind == "inferred"

    def analyze_function(self, fn: ast.FunctionDef, infer: bool = False) -> FunctionSharing:
        analysis = _FunctionAnalysis(self, fn)
        record = analysis.run(infer)
        self.report.functions[fn.name] = record
        self.report.diagnostics.extend(analysis.diagnostics)
        return record

    def infer_postcondition(self, fn: ast.FunctionDef) -> Optional[ast.SharingDecl]:
        """Least postcondition of a call-free, update-free definition"""
        clause = self.clause_of(fn.name)
        offending = next(
            (n for n in ast.walk(fn.body) if isinstance(n, (ast.App, ast.Update))), None
        )
        if offending is not None or clause is None or not clause.has_pattern:
            reason = (
                "definitions with calls or updates" if offending is not None
                else "a sharing pattern naming the result"
            )
            span = offending.span if offending is not None else fn.span
            self.report.diagnostics.append(Diagnostic.error(
                "E203", span, f"post inferred for {fn.name} needs {reason}"
            ))
            return None
        record = self.analyze_function(fn, infer=True)
        decl = _infer_decl(fn, clause, record.exit_rel)
        try:
            covered = self.entails_declaration(record.exit_rel, fn, decl)
        except PawnsError:
            covered = False
        if not covered:
            logger.debug(f"[Sharing] equation for {fn.name} misses computed sharing, using parameters")
            decl = _shared_params_decl(fn, clause, record.exit_rel)
        record.inferred_post = decl
        self.inferred[fn.name] = decl
        self._cache = {k: v for k, v in self._cache.items() if k[0] != fn.name}
        logger.debug(f"[Sharing] inferred post for {fn.name}")
        return decl

    def elaborate_post(self, fn: ast.FunctionDef, decl: ast.SharingDecl) -> SharingRel:
        """Elaborate `decl` as the postcondition of `fn` over its own owner names"""
        clause = self.clause_of(fn.name)
        params, result = list(fn.ty.params), fn.ty.result
        rels = elaborate_signature(clause, params, result, self.domain, post_override=decl)
        mapping = {param_owner(i): p for i, p in enumerate(fn.params)}
        mapping[RESULT] = RESULT_OWNER
        return rename_rel(rels.post, mapping)

    def entails_declaration(self, computed: SharingRel, fn: ast.FunctionDef, decl: ast.SharingDecl) -> bool:
        owners = set(fn.params) | {RESULT_OWNER, ABSTRACT}
        return entails(computed, self.elaborate_post(fn, decl), owners)


# ============ Per-function abstract interpretation ============

class _FunctionAnalysis:
    def __init__(self, analyzer: SharingAnalyzer, fn: ast.FunctionDef):
        self.a = analyzer
        self.fn = fn
        self.domain = analyzer.domain
        self.state_var_types = analyzer.types.state_var_types
        self.poly = analyzer.types.poly_locals.get(fn.name, set())
        self.liveness = Liveness(fn.body)
        self.record = FunctionSharing(fn.name)
        self.diagnostics: List[Diagnostic] = []

        self.rel = SharingRel()
        self.scopes: List[Dict[str, str]] = [{}]
        self.owner_types: Dict[str, Type] = {}
        self.owner_names: Dict[str, str] = {}
        # formal owner -> declared mutable
        self.formals: Dict[str, bool] = {}
        self.implicits: Dict[str, str] = {}
        self._occurrences: Counter = Counter(self.state_var_types.keys())
        self._temps = itertools.count(1)
        for name, t in self.state_var_types.items():
            self.owner_types[name] = t
            self.owner_names[name] = name

    # ============ Owners ============

    def new_owner(self, name: str, t: Type) -> str:
        self._occurrences[name] += 1
        k = self._occurrences[name]
        key = name if k == 1 else f"{name}@{k}"
        self.owner_types[key] = t
        self.owner_names[key] = name
        self.scopes[-1][name] = key
        return key

    def temp(self, t: Type) -> str:
        key = f"$call{next(self._temps)}"
        self.owner_types[key] = t
        self.owner_names[key] = key
        return key

    def lookup_local(self, name: str) -> Optional[str]:
        for scope in reversed(self.scopes):
            if name in scope:
                return scope[name]
        return None

    def lookup(self, name: str) -> Optional[str]:
        owner = self.lookup_local(name)
        if owner is None and name in self.state_var_types:
            return name
        return owner

    def components(self, t: Type) -> List[Component]:
        return self.domain.components(t)

    def owner_points(self, owner: str, existing: bool = True) -> List[Point]:
        points = [(owner, c) for c in self.components(self.owner_types[owner])]
        if existing:
            return [p for p in points if self.rel.exists(p)]
        return points

    def owner_value(self, owner: str) -> Value:
        return {c: {(owner, c)} for _, c in self.owner_points(owner)}

    def bind(self, owner: str, value: Value) -> None:
        # aliases are copied from the relation before the binding
        base = self.rel.copy()
        for c, sources in value.items():
            p = (owner, c)
            self.rel.touch(p)
            for s in sources:
                if s != p and compatible(p, s):
                    self.rel.add_with_copy(p, s, base=base)

    def display(self, p: Point) -> str:
        owner = p[0]
        if owner == RESULT_OWNER:
            return f"result.{p[1].show()}"
        return f"{self.owner_names.get(owner, owner)}.{p[1].show()}"

    def error(self, code: str, span: Span, message: str) -> None:
        self.diagnostics.append(Diagnostic.error(code, span, message))

    # ============ Entry ============

    def run(self, infer: bool) -> FunctionSharing:
        fn = self.fn
        params, result_type = list(fn.ty.params), fn.ty.result
        sig = self.a.signature(fn.name, self.a.clause_of(fn.name), params, result_type, fn.span)
        self.implicits = dict(sig.implicits)

        mapping = {param_owner(i): p for i, p in enumerate(fn.params)}
        mapping[RESULT] = RESULT_OWNER
        for i, (p, t) in enumerate(zip(fn.params, params)):
            self._occurrences[p] += 1
            self.owner_types[p] = t
            self.owner_names[p] = p
            self.scopes[0][p] = p
            self.formals[p] = sig.mutable[i]
        self.rel = rename_rel(sig.pre, mapping)
        for var, mode in self.implicits.items():
            if mode in ("ro", "rw") and var in self.state_var_types:
                for p in self.owner_points(var, existing=False):
                    self.rel.touch(p)

        value = self.eval(fn.body)
        self.owner_types[RESULT_OWNER] = result_type
        self.owner_names[RESULT_OWNER] = RESULT_OWNER
        self.bind(RESULT_OWNER, value)
        self._check_escape(value, set(self.implicits), fn.body.span, f"the result of {fn.name}")
        if not infer:
            self._check_post(sig, mapping)

        self.record.exit_rel = self.rel.copy()
        return self.record

    def _check_post(self, sig: SignatureRels, mapping: Dict[str, str]) -> None:
        declared = rename_rel(sig.post, mapping)
        keep = set(self.fn.params) | {RESULT_OWNER, ABSTRACT}
        missing = violations(self.rel, declared, keep)
        if missing:
            a, b = missing[0]
            self.error(
                "E203", self.fn.span,
                f"{self.fn.name} may return sharing not allowed by its postcondition: "
                f"{self.display(a)} ~ {self.display(b)}",
            )

    # ============ Expressions ============

    def eval(self, e: ast.Expr) -> Value:
        if isinstance(e, (ast.IntLit, ast.UnitLit)):
            return {}
        if isinstance(e, ast.BinOp):
            self.eval(e.left)
            self.eval(e.right)
            return {}
        if isinstance(e, ast.Var):
            return self._var(e)
        if isinstance(e, ast.Deref):
            return self._deref(e)
        if isinstance(e, ast.Ctor):
            return self._ctor(e)
        if isinstance(e, ast.App):
            return self.check_call(e)
        if isinstance(e, ast.Case):
            return self._case(e)
        if isinstance(e, ast.If):
            self.eval(e.cond)
            base = self.rel
            self.rel = base.copy()
            then = self.eval(e.then)
            then_rel = self.rel
            self.rel = base.copy()
            orelse = self.eval(e.orelse)
            self.rel.merge(then_rel)
            return _join_values([then, orelse])
        if isinstance(e, ast.Cast):
            return self.eval(e.expr)
        if isinstance(e, ast.Seq):
            self.scopes.append({})
            value: Value = {}
            for stmt in e.stmts:
                value = self.abstract_exec_stmt(stmt)
            self.scopes.pop()
            return value
        return {}

    def _var(self, e: ast.Var) -> Value:
        owner = self.lookup(e.name)
        if owner is not None:
            return self.owner_value(owner)
        if e.name in self.a.program.defs and self.a.arity_of(e.name) == 0:
            # a constant definition is evaluated where it is used
            sig = self.a.signature(e.name, self.a.clause_of(e.name), [], e.ty, e.span)
            return self._apply_summary(ast.App(e, [], span=e.span, ty=e.ty), e.name, sig, [], [], e.ty)
        return {}

    def _deref(self, e: ast.Deref) -> Value:
        owner = self.lookup(e.name)
        if owner is None:
            return {}
        t = self.owner_types[owner]
        if not (isinstance(t, TCon) and t.name == "Ref"):
            return {}
        graph = self.domain.graph(t)
        node = graph.node_at((REF_STEP,))
        value: Value = {}
        for c in self.components(t.args[0]):
            pc = graph.translate(node, c.path)
            if pc is not None and self.rel.exists((owner, pc)):
                value[c] = {(owner, pc)}
        return value

    def _ctor(self, e: ast.Ctor) -> Value:
        args = [self.eval(a) for a in e.args]
        t = e.ty
        if not isinstance(t, TCon):
            return {}
        graph = self.domain.graph(t)
        value: Value = {}
        for i, arg_value in enumerate(args, 1):
            step = (e.name, i)
            if step not in graph.edges[0]:
                continue
            value.setdefault(graph.component(0, step), set())
            node = graph.edges[0][step]
            for c, sources in arg_value.items():
                pc = graph.translate(node, c.path)
                if pc is not None:
                    value.setdefault(pc, set()).update(sources)
        return value

    def _case(self, e: ast.Case) -> Value:
        scrutinee = self.eval(e.scrutinee)
        base = self.rel
        rels: List[SharingRel] = []
        values: List[Value] = []
        for arm in e.arms:
            if not self._reachable(arm.pattern, scrutinee):
                continue
            self.rel = base.copy()
            self.scopes.append({})
            self._bind_pattern(arm.pattern, scrutinee, e.scrutinee.ty)
            values.append(self.eval(arm.body))
            self.scopes.pop()
            rels.append(self.rel)
        if not rels:
            self.rel = base
            return {}
        self.rel = rels[0]
        for other in rels[1:]:
            self.rel.merge(other)
        return _join_values(values)

    @staticmethod
    def _reachable(pattern: ast.Pattern, scrutinee: Value) -> bool:
        if pattern.ctor is None or not pattern.binders:
            return True
        return any(c.path[0][0] == pattern.ctor for c in scrutinee)

    def _bind_pattern(self, pattern: ast.Pattern, scrutinee: Value, scrutinee_type: Type) -> None:
        if pattern.ctor is None or not isinstance(scrutinee_type, TCon):
            return
        graph = self.domain.graph(scrutinee_type)
        for i, binder in enumerate(pattern.binders, 1):
            if binder.name is None:
                continue
            step = (pattern.ctor, i)
            node = graph.edges[0].get(step)
            owner = self.new_owner(binder.name, binder.ty)
            if node is None:
                continue
            value: Value = {}
            if binder.deref:
                # the binder addresses the constructor argument cell itself
                bgraph = self.domain.graph(binder.ty)
                bnode = bgraph.node_at((REF_STEP,))
                cell = graph.component(0, step)
                value[bgraph.component(0, REF_STEP)] = set(scrutinee.get(cell, set()))
                for c in self.components(binder.ty.args[0]):
                    pc = graph.translate(node, c.path)
                    bc = bgraph.translate(bnode, c.path)
                    if pc in scrutinee and bc is not None:
                        value[bc] = set(scrutinee[pc])
            else:
                for c in self.components(binder.ty):
                    pc = graph.translate(node, c.path)
                    if pc in scrutinee:
                        value[c] = set(scrutinee[pc])
            self.bind(owner, value)

    # ============ Statements ============

    def abstract_exec_stmt(self, s: ast.Stmt) -> Value:
        value: Value = {}
        if isinstance(s, ast.Let):
            bound = self.eval(s.expr)
            self.bind(self.new_owner(s.name, s.ty), bound)
        elif isinstance(s, ast.RefBind):
            self._ref_bind(s)
        elif isinstance(s, ast.Update):
            self._update(s)
        else:
            value = self.eval(s.expr)
        self.record.statements_analyzed += 1
        self.record.stmt_rels[id(s)] = self.rel.copy()
        self.record.stmt_scopes[id(s)] = self._visible()
        return value

    def _visible(self) -> Dict[str, str]:
        names: Dict[str, str] = {}
        for scope in self.scopes:
            names.update(scope)
        return names

    def _ref_bind(self, s: ast.RefBind) -> None:
        content = self.eval(s.expr)
        if self.lookup_local(s.name) is None and s.name in self.state_var_types:
            owner = s.name
            self.rel.drop(owner)
        else:
            owner = self.new_owner(s.name, s.ty)
        t = self.owner_types[owner]
        graph = self.domain.graph(t)
        node = graph.node_at((REF_STEP,))
        value: Value = {graph.component(0, REF_STEP): set()}
        for c, sources in content.items():
            pc = graph.translate(node, c.path)
            if pc is not None:
                value.setdefault(pc, set()).update(sources)
        self.bind(owner, value)

    def _update(self, s: ast.Update) -> None:
        stored = self.eval(s.expr)
        owner = self.lookup(s.name)
        if owner is None:
            return
        annotated = set(s.annotations) | {s.name}
        if not s.marked:
            self.error("E201", s.span, f"update of {s.name} must be marked: write *!{s.name} := ...")
        t = self.owner_types[owner]
        graph = self.domain.graph(t)
        target = (owner, graph.component(0, REF_STEP))
        self.rel.touch(target)
        updated = {target} | self.rel.aliases(target)
        self.check_update_annotations(updated, annotated, self.liveness.live_after(s), s.span, "this update")
        self._weak_update(updated, t.args[0], stored)

    def _weak_update(self, updated: Set[Point], content_type: Type, stored: Value) -> None:
        """Every cell that may be the target now may hold the stored value"""
        touched: List[Point] = []
        base = self.rel.copy()
        for q in sorted(updated, key=show_point):
            if q[0] == ABSTRACT or q[0] not in self.owner_types:
                continue
            qgraph = self.domain.graph(self.owner_types[q[0]])
            qnode = qgraph.node_at(q[1].path)
            if qnode is None:
                continue
            for c in self.components(content_type):
                qc = qgraph.translate(qnode, c.path)
                if qc is None:
                    continue
                p = (q[0], qc)
                self.rel.touch(p)
                for source in stored.get(c, ()):
                    if source != p and compatible(p, source):
                        self.rel.add_with_copy(p, source, base=base)
                touched.append(p)
        for p1, p2 in itertools.combinations(touched, 2):
            if p1 != p2 and compatible(p1, p2):
                self.rel.add(p1, p2)

    # ============ Annotations ============

    def _is_live(self, owner: str, live: FrozenSet[str]) -> bool:
        name = self.owner_names.get(owner, owner)
        return (
            owner in self.formals
            or owner in self.state_var_types
            or name in self.poly
            or name in live
        )

    def check_update_annotations(
        self, updated: Set[Point], annotated: Set[str], live: FrozenSet[str], span: Span, what: str
    ) -> None:
        """Every live owner of an updated cell must be `!`-annotated"""
        missing = []
        for owner in sorted({p[0] for p in updated}):
            if owner == ABSTRACT:
                self.error("E204", span, f"{what} may modify abstract data, which cannot be updated")
                continue
            if owner.startswith("$"):
                continue
            name = self.owner_names.get(owner, owner)
            if owner in self.formals and not self.formals[owner]:
                self.error(
                    "E201", span,
                    f"parameter {name} may be updated by {what} but is not declared mutable "
                    f"(!{name}) in the sharing pattern of {self.fn.name}",
                )
                continue
            if name in annotated:
                continue
            if self._is_live(owner, live):
                missing.append(name)
        if missing:
            names = ", ".join(sorted(set(missing)))
            self.error("E201", span, f"{names} may be affected by {what} but not annotated with !")

    # ============ Calls ============

    def check_call(self, e: ast.App) -> Value:
        func = e.func
        name: Optional[str] = None
        clause: Optional[ast.SharingClause] = None
        arity: Optional[int] = None
        if isinstance(func, ast.Var) and self.lookup(func.name) is None and self.a.is_global(func.name):
            name = func.name
            clause = self.a.clause_of(name)
            arity = self.a.arity_of(name)
        elif isinstance(func, ast.Var) and isinstance(func.ty, TArrow):
            clause = func.ty.annot
            arity = len(func.ty.params)
        else:
            self.eval(func)
        label = func.name if isinstance(func, ast.Var) else "function"
        values = [self.eval(a.expr) for a in e.args]

        if arity is None:
            sig = self.a.signature(None, None, [a.expr.ty for a in e.args], e.ty, e.span)
            return self._apply_summary(e, label, sig, e.args, values, e.ty)
        if len(e.args) < arity:
            # closures have no components; captured data is treated as abstract
            for value in values:
                for sources in value.values():
                    for s in sources:
                        self.rel.add(s, abstract_point(s))
            return {}
        split = split_arrow(func.ty, arity)
        if split is None:
            return {}
        params, result_type = split
        sig = self.a.signature(name, clause, params, result_type, e.span)
        args, rest = e.args[:arity], e.args[arity:]
        self._check_arrow_args(label, args, params)
        value = self._apply_summary(e, label, sig, args, values[:arity], result_type)
        if rest:
            extra = self.a.signature(None, None, [a.expr.ty for a in rest], e.ty, e.span)
            value = self._apply_summary(e, label, extra, rest, values[arity:], e.ty)
        return value

    def _apply_summary(
        self,
        e: ast.App,
        label: str,
        sig: SignatureRels,
        args: List[ast.Arg],
        values: List[Value],
        result_type: Type,
    ) -> Value:
        annotated = set(e.annotations) | {a.expr.name for a in args if a.marked}
        mutable_vars: Dict[int, str] = {}
        for i, arg in enumerate(args):
            if not sig.mutable[i] or not isinstance(arg.expr, ast.Var):
                continue
            owner = self.lookup(arg.expr.name)
            if owner is None:
                continue
            mutable_vars[i] = owner
            if not arg.marked:
                self.error(
                    "E201", arg.span,
                    f"argument {i + 1} of {label} may be updated and must be marked !{arg.expr.name}",
                )
                annotated.add(arg.expr.name)
        # a missing ! on a call with implicits is reported by the state variable checks
        annotated |= set(sig.implicits)

        self._check_pre(label, sig, args, values, e.span)
        self._check_escape_args(label, sig, args, values)

        updated: Set[Point] = set()
        for i, owner in mutable_vars.items():
            for p in self.owner_points(owner):
                updated |= {p} | self.rel.aliases(p)
        for var, mode in sig.implicits.items():
            if mode in ("wo", "rw") and var in self.state_var_types:
                for p in self.owner_points(var):
                    updated |= {p} | self.rel.aliases(p)
        if updated:
            self.check_update_annotations(
                updated, annotated, self.liveness.live_after(e), e.span, f"the call of {label}"
            )

        temp = self.temp(result_type)

        def image(p: Point) -> Set[Point]:
            owner = p[0]
            if owner == RESULT:
                return {(temp, p[1])}
            if owner == ABSTRACT:
                return {p}
            i = int(owner[1:]) - 1
            if i in mutable_vars:
                return {(mutable_vars[i], p[1])}
            return set(values[i].get(p[1], set())) if i < len(values) else set()

        changing = {RESULT} | {param_owner(i) for i, m in enumerate(sig.mutable) if m}
        base = self.rel.copy()
        for p, q in sig.post.pairs():
            if p[0] not in changing and q[0] not in changing:
                continue
            for a in image(p):
                for b in image(q):
                    if a != b and compatible(a, b):
                        self.rel.add_with_copy(a, b, base=base)
        for owner in mutable_vars.values():
            for p in self.owner_points(owner, existing=False):
                self.rel.touch(p)
        for var, mode in sig.implicits.items():
            if mode in ("wo", "rw") and var in self.state_var_types:
                for p in self.owner_points(var, existing=False):
                    self.rel.touch(p)
        for p in self.owner_points(temp, existing=False):
            self.rel.touch(p)
        return self.owner_value(temp)

    def _may_alias(self, left: Set[Point], right: Set[Point]) -> bool:
        return any(s in right or self.rel.aliases(s) & right for s in left)

    def _check_pre(
        self, label: str, sig: SignatureRels, args: List[ast.Arg], values: List[Value], span: Span
    ) -> None:
        for i, j in itertools.combinations(range(len(values)), 2):
            for c, left in values[i].items():
                for d, right in values[j].items():
                    pc, pd = (param_owner(i), c), (param_owner(j), d)
                    if not compatible(pc, pd) or not self._may_alias(left, right):
                        continue
                    if pd in sig.pre.aliases(pc):
                        continue
                    self.error(
                        "E202", span,
                        f"call of {label} violates its precondition: "
                        f"{_arg_label(args[i], i)}.{c.show()} may share with {_arg_label(args[j], j)}.{d.show()}",
                    )
                    return

    def _check_arrow_args(self, label: str, args: List[ast.Arg], params: List[Type]) -> None:
        for i, (arg, expected) in enumerate(zip(args, params)):
            if not isinstance(expected, TArrow):
                continue
            actual = self._function_clause(arg.expr)
            if actual is None:
                continue
            clause, arity = actual
            if arity != len(expected.params):
                continue
            problems = self._arrow_problems(clause, expected)
            if problems:
                self.error(
                    "E202", arg.span,
                    f"{arg.expr.name} cannot be passed as argument {i + 1} of {label}: {'; '.join(problems)}",
                )

    def _function_clause(self, e: ast.Expr) -> Optional[Tuple[Optional[ast.SharingClause], int]]:
        if not isinstance(e, ast.Var):
            return None
        if self.lookup(e.name) is not None:
            return (e.ty.annot, len(e.ty.params)) if isinstance(e.ty, TArrow) else None
        if self.a.is_global(e.name):
            return self.a.clause_of(e.name), self.a.arity_of(e.name)
        return None

    def _arrow_problems(self, clause: Optional[ast.SharingClause], expected: TArrow) -> List[str]:
        params, result = list(expected.params), expected.result
        try:
            want = elaborate_signature(expected.annot, params, result, self.domain)
            have = elaborate_signature(clause, params, result, self.domain)
        except PawnsError:
            return []
        problems = []
        for k, (m_have, m_want) in enumerate(zip(have.mutable, want.mutable)):
            if m_have and not m_want:
                problems.append(f"it may update argument {k + 1}")
        # precondition sharing only matters where the function may update
        if any(have.mutable) and violations(want.pre, have.pre):
            problems.append("its precondition allows less sharing than expected")
        if violations(have.post, want.post):
            problems.append("its postcondition allows more sharing than expected")
        for var, mode in sorted(have.implicits.items()):
            allowed = want.implicits.get(var)
            if allowed is None or (allowed != mode and allowed != "rw"):
                problems.append(f"implicit {mode} {var} is not permitted")
        return problems

    # ============ State variable escape ============

    def _state_refs(self, value: Value) -> Set[str]:
        """State variables whose ref cell the value may alias"""
        found = set()
        for sources in value.values():
            for s in sources:
                for q in {s} | self.rel.aliases(s):
                    if q[0] in self.state_var_types and q[1].path == (REF_STEP,):
                        found.add(q[0])
        return found

    def _check_escape_args(self, label: str, sig: SignatureRels, args: List[ast.Arg], values: List[Value]) -> None:
        for arg, value in zip(args, values):
            for var in sorted(self._state_refs(value) - set(sig.implicits)):
                self.error(
                    "E301", arg.span,
                    f"state variable {var} escapes as an argument of {label}, which does not declare it implicit",
                )

    def _check_escape(self, value: Value, declared: Set[str], span: Span, what: str) -> None:
        for var in sorted(self._state_refs(value) - declared):
            self.error("E301", span, f"state variable {var} escapes as {what}")


def _arg_label(arg: ast.Arg, i: int) -> str:
    if isinstance(arg.expr, ast.Var):
        return arg.expr.name
    return f"argument {i + 1}"


def _join_values(values: Iterable[Value]) -> Value:
    joined: Value = {}
    for v in values:
        for c, sources in v.items():
            joined.setdefault(c, set()).update(sources)
    return joined


# ============ Postcondition inference ============

class _Unrepresentable(Exception):
    pass


def _infer_decl(fn: ast.FunctionDef, clause: ast.SharingClause, exit_rel: SharingRel) -> ast.SharingDecl:
    """
    Express the result's sharing as declaration equations.

    A body that builds its result from parameters and constructors becomes
    one equation `r = <term>`; anything else falls back to `r = p` for each
    parameter the result may share with.
    """
    names = {p: clause.params[i].name for i, p in enumerate(fn.params)}
    result = ast.DVar(clause.result_name)
    try:
        term = _result_term(fn.body, names)
        leaves = _leaves(term)
        if not leaves:
            return ast.SharingDecl.nosharing()
        if _has_atoms(term):
            return ast.SharingDecl("equations", [[result, ast.DVar(v)] for v in leaves])
        return ast.SharingDecl("equations", [[result, term]])
    except _Unrepresentable:
        return _shared_params_decl(fn, clause, exit_rel)


def _shared_params_decl(fn: ast.FunctionDef, clause: ast.SharingClause, exit_rel: SharingRel) -> ast.SharingDecl:
    """`r = p` for each parameter p the result may share with"""
    names = {p: clause.params[i].name for i, p in enumerate(fn.params)}
    result = ast.DVar(clause.result_name)
    shared = []
    for p in fn.params:
        if any(a[0] == RESULT_OWNER and b[0] == p or b[0] == RESULT_OWNER and a[0] == p
               for a, b in exit_rel.pairs()):
            shared.append(names[p])
    if not shared:
        return ast.SharingDecl.nosharing()
    return ast.SharingDecl("equations", [[result, ast.DVar(v)] for v in shared])


def _result_term(body: ast.Expr, names: Dict[str, str]):
    env: Dict[str, ast.Expr] = {}
    if isinstance(body, ast.Seq):
        *lets, last = body.stmts
        for s in lets:
            if not isinstance(s, ast.Let):
                raise _Unrepresentable()
            env[s.name] = s.expr
        if not isinstance(last, ast.ExprStmt):
            raise _Unrepresentable()
        body = last.expr
    return _term(body, names, env)


def _term(e: ast.Expr, names: Dict[str, str], env: Dict[str, ast.Expr]):
    """Declaration term for an expression; None stands for an atomic value"""
    if isinstance(e, ast.Var):
        if e.name in names:
            return ast.DVar(names[e.name])
        if e.name in env:
            return _term(env[e.name], names, env)
        raise _Unrepresentable()
    if isinstance(e, ast.Ctor):
        return ast.DCtor(e.name, [_term(a, names, env) for a in e.args])
    if isinstance(e, ast.Cast):
        return _term(e.expr, names, env)
    if isinstance(e, (ast.IntLit, ast.UnitLit, ast.BinOp)):
        return None
    raise _Unrepresentable()


def _leaves(term) -> List[str]:
    if isinstance(term, ast.DVar):
        return [term.name]
    if isinstance(term, ast.DCtor):
        found: List[str] = []
        for a in term.args:
            for v in _leaves(a):
                if v not in found:
                    found.append(v)
        return found
    return []


def _has_atoms(term) -> bool:
    if term is None:
        return True
    if isinstance(term, ast.DCtor):
        return any(_has_atoms(a) for a in term.args)
    return False


def analyze_sharing(program: ast.Program, types: TypeCheckResult) -> SharingReport:
    """Analyze every well-typed definition of a program"""
    return SharingAnalyzer(program, types).analyze_program()
