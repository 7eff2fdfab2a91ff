"""
Pawns Type Checker
Hindley-Milner inference with signatures, monomorphic locals and
instantiation at update sites.

Definitions without signatures are inferred in dependency order (strongly
connected groups) and generalized; signature type variables are rigid while
the definition is checked, so a signature may be more specific than the
definition but never more general.
"""
import logging
from dataclasses import dataclass, field
from typing import Dict, Iterable, List, Optional, Set, Tuple

from app.core.errors import PawnsError, PawnsTypeError, ResolutionError
from app.models import ast
from app.models.dataenv import DataEnv
from app.models.types import (
    BOOL, INT, UNIT, TArrow, TCon, TVar, Type, fresh_var, is_ref, ref,
    show_type, substitute, type_vars,
)
from app.schemas.diagnostic import Diagnostic, Span
from app.utils.prelude import COMPARE_OPS, PRIMITIVES

logger = logging.getLogger(__name__)


class _Mismatch(Exception):
    def __init__(self, left: Type, right: Type):
        super().__init__()
        self.left = left
        self.right = right


def show_pair(a: Type, b: Type) -> Tuple[str, str]:
    """Render two types with one consistent variable naming"""
    names: Dict[TVar, str] = {}
    for v in list(type_vars(a)) + list(type_vars(b)):
        if v not in names:
            names[v] = v.name if v.name and v.rigid else chr(ord("a") + len(names) % 26)
    return show_type(a, names), show_type(b, names)


# ============ Typing state ============

class TypingState:
    """Substitution, local scopes and queued warnings for one definition"""

    def __init__(self):
        self.subst: Dict[TVar, Type] = {}
        self.scopes: List[Dict[str, Type]] = [{}]
        self.params: Set[str] = set()
        # created with a type containing a flexible type variable
        self.poly_locals: Set[str] = set()
        self.warnings: List[Diagnostic] = []

    def resolve(self, t: Type) -> Type:
        while isinstance(t, TVar) and t in self.subst:
            t = self.subst[t]
        return t

    def zonk(self, t: Optional[Type]) -> Optional[Type]:
        if t is None:
            return None
        t = self.resolve(t)
        if isinstance(t, TCon):
            if not t.args:
                return t
            return TCon(t.name, tuple(self.zonk(a) for a in t.args))
        if isinstance(t, TArrow):
            return TArrow(tuple(self.zonk(p) for p in t.params), self.zonk(t.result), t.annot)
        return t

    def unify(self, a: Type, b: Type) -> None:
        a = self.resolve(a)
        b = self.resolve(b)
        if a == b:
            return
        if isinstance(a, TVar) and not a.rigid:
            self._bind(a, b)
        elif isinstance(b, TVar) and not b.rigid:
            self._bind(b, a)
        elif isinstance(a, TCon) and isinstance(b, TCon):
            if a.name != b.name or len(a.args) != len(b.args):
                raise _Mismatch(a, b)
            for x, y in zip(a.args, b.args):
                self.unify(x, y)
        elif isinstance(a, TArrow) and isinstance(b, TArrow):
            n, m = len(a.params), len(b.params)
            k = min(n, m)
            for x, y in zip(a.params[:k], b.params[:k]):
                self.unify(x, y)
            rest_a = a.result if n == k else TArrow(a.params[k:], a.result)
            rest_b = b.result if m == k else TArrow(b.params[k:], b.result)
            self.unify(rest_a, rest_b)
        else:
            raise _Mismatch(a, b)

    def _bind(self, v: TVar, t: Type) -> None:
        if any(w == v for w in type_vars(self.zonk(t))):
            raise _Mismatch(v, t)
        self.subst[v] = t

    def unify_or_report(self, expected: Type, found: Type, span: Span, what: str) -> None:
        try:
            self.unify(expected, found)
        except _Mismatch:
            e, f = show_pair(self.zonk(expected), self.zonk(found))
            raise PawnsTypeError(f"{what}: expected {e}, found {f}", span)

    # ============ Scopes ============

    def lookup(self, name: str) -> Optional[Type]:
        for scope in reversed(self.scopes):
            if name in scope:
                return scope[name]
        return None

    def bind(self, name: str, t: Type, span: Span) -> None:
        if self.lookup(name) is not None:
            raise ResolutionError(f"{name} is already bound", span)
        self.scopes[-1][name] = t
        if any(not v.rigid for v in type_vars(self.zonk(t))):
            self.poly_locals.add(name)

    def visible_locals(self) -> Dict[str, Type]:
        result: Dict[str, Type] = {}
        for scope in self.scopes:
            result.update(scope)
        return {n: t for n, t in result.items() if n not in self.params}

    def snapshot(self) -> Dict[str, Type]:
        return {n: self.zonk(t) for n, t in self.visible_locals().items()}

    def note_instantiations(self, before: Dict[str, Type], span: Span) -> None:
        for name, old in sorted(before.items()):
            new = self.zonk(self.lookup(name))
            if new != old:
                self.warnings.append(Diagnostic.warning(
                    "W101", span,
                    f"type of {name} instantiated by update from {show_type(old)} to {show_type(new)}",
                ))


def instantiate_on_update(name: str, required: Type, state: TypingState, span: Span) -> TypingState:
    """
    Unify the type of `name` (an update position) with `required`.

    Every visible local whose type changes as a result gets a W101.
    """
    current = state.lookup(name)
    before = state.snapshot()
    state.unify_or_report(required, current, span, f"update of {name}")
    state.note_instantiations(before, span)
    return state


def check_cast(expr_type: Type, declared: Type, state: TypingState, span: Span) -> TypingState:
    """`e :: T`: unify the inferred type with T; failure is E102"""
    try:
        state.unify(declared, expr_type)
    except _Mismatch:
        d, f = show_pair(state.zonk(declared), state.zonk(expr_type))
        raise PawnsTypeError(f"cannot cast expression of type {f} to {d}", span, code="E102")
    return state


# ============ Results ============

@dataclass
class TypeCheckResult:
    data_env: DataEnv
    # top-level function types; every type variable is implicitly quantified
    fn_types: Dict[str, Type] = field(default_factory=dict)
    state_var_types: Dict[str, Type] = field(default_factory=dict)
    poly_locals: Dict[str, Set[str]] = field(default_factory=dict)
    diagnostics: List[Diagnostic] = field(default_factory=list)
    failed: Set[str] = field(default_factory=set)

    @property
    def ok(self) -> bool:
        return not any(d.is_error for d in self.diagnostics)

    def dump_types(self, names: Iterable[str]) -> str:
        lines = []
        for name in sorted(names):
            if name in self.fn_types:
                lines.append(f"{name} :: {show_type(self.fn_types[name])}")
        return "".join(line + "\n" for line in lines)


def instantiate(t: Type) -> Type:
    """Fresh flexible copy of a quantified top-level type"""
    mapping = {}
    for v in type_vars(t):
        if v not in mapping:
            mapping[v] = fresh_var()
    return substitute(t, mapping)


# ============ Checker ============

class TypeChecker:
    def __init__(self, program: ast.Program):
        self.program = program
        self.result: Optional[TypeCheckResult] = None
        # signature types as declared (type variables named, not rigid)
        self.signed: Dict[str, Type] = {}

    def check(self) -> TypeCheckResult:
        diagnostics: List[Diagnostic] = []
        try:
            data_env = DataEnv.from_program(self.program)
        except PawnsError as e:
            data_env = DataEnv()
            diagnostics.append(e.diagnostic)
        self.result = TypeCheckResult(data_env=data_env, diagnostics=diagnostics)

        self._convert_state_vars()
        self._convert_signatures()

        for name in self.signed:
            if name not in self.program.defs and name not in PRIMITIVES:
                sig = self.program.signatures[name]
                self._report(name, ResolutionError(f"{name} has a type signature but no definition", sig.span))

        for group in self._unsigned_groups():
            self._check_group(group)
        for name, fn in self.program.defs.items():
            if name in self.signed:
                self._check_signed(fn)

        logger.info(f"[TypeCheck] {len(self.program.defs)} definitions, {len(self.result.failed)} failed")
        return self.result

    def _report(self, name: Optional[str], error: PawnsError) -> None:
        self.result.diagnostics.append(error.diagnostic)
        if name is not None:
            self.result.failed.add(name)

    def _convert_state_vars(self) -> None:
        env = self.result.data_env
        for name, decl in self.program.state_vars.items():
            try:
                t = env.to_type(decl.type, {})
                if not is_ref(t):
                    raise PawnsTypeError(f"state variable {name} must have a Ref type", decl.span)
                self.result.state_var_types[name] = t
            except PawnsError as e:
                self._report(None, e)

    def _convert_signatures(self) -> None:
        env = self.result.data_env
        for name, sig in self.program.signatures.items():
            try:
                t = env.to_type(sig.type, {}, lambda n: fresh_var(n))
            except PawnsError as e:
                self._report(name, e)
                continue
            self.signed[name] = t
            self.result.fn_types[name] = t

    # ============ Dependency groups ============

    def _unsigned_groups(self) -> List[List[str]]:
        """Strongly connected groups of unsigned definitions, callees first"""
        unsigned = [n for n in self.program.defs if n not in self.signed]
        deps = {n: self._references(self.program.defs[n]) & set(unsigned) for n in unsigned}

        index: Dict[str, int] = {}
        low: Dict[str, int] = {}
        stack: List[str] = []
        on_stack: Set[str] = set()
        groups: List[List[str]] = []

        def visit(n: str) -> None:
            index[n] = low[n] = len(index)
            stack.append(n)
            on_stack.add(n)
            for m in sorted(deps[n]):
                if m not in index:
                    visit(m)
                    low[n] = min(low[n], low[m])
                elif m in on_stack:
                    low[n] = min(low[n], index[m])
            if low[n] == index[n]:
                group = []
                while True:
                    m = stack.pop()
                    on_stack.discard(m)
                    group.append(m)
                    if m == n:
                        break
                groups.append(sorted(group))

        for n in unsigned:
            if n not in index:
                visit(n)
        return groups

    @staticmethod
    def _references(fn: ast.FunctionDef) -> Set[str]:
        names = set()
        for node in ast.walk(fn.body):
            if isinstance(node, ast.Var):
                names.add(node.name)
        return names

    # ============ Definitions ============

    def _check_group(self, group: List[str]) -> None:
        state = TypingState()
        mono = {name: fresh_var() for name in group}
        checked = []
        poly: Dict[str, Set[str]] = {}
        for name in group:
            fn = self.program.defs[name]
            try:
                fn_type = self._infer_def(fn, state, mono, sig_scope={})
                poly[name] = set(state.poly_locals)
                state.unify_or_report(mono[name], fn_type, fn.span, f"recursive use of {name}")
                checked.append(fn)
            except PawnsError as e:
                self._report(name, e)
        self.result.diagnostics.extend(state.warnings)
        for fn in checked:
            self._zonk_def(fn, state)
            self.result.fn_types[fn.name] = self._public_type(fn)
            self.result.poly_locals[fn.name] = poly[fn.name]
        for name in group:
            if name not in self.result.fn_types:
                # keep later definitions checkable
                self.result.fn_types[name] = fresh_var()

    def _check_signed(self, fn: ast.FunctionDef) -> None:
        state = TypingState()
        declared = self.signed[fn.name]
        rigid = {v: fresh_var(v.name, rigid=True) for v in type_vars(declared)}
        sig_type = substitute(declared, rigid)
        sig_scope = {v.name: r for v, r in rigid.items() if v.name}
        try:
            fn_type = self._infer_def(fn, state, {}, sig_scope, sig_type)
            state.unify_or_report(sig_type, fn_type, fn.span, f"definition of {fn.name} does not match its signature")
            self._zonk_def(fn, state, sig_type)
            self.result.poly_locals[fn.name] = set(state.poly_locals)
        except PawnsError as e:
            self._report(fn.name, e)
        self.result.diagnostics.extend(state.warnings)

    @staticmethod
    def _public_type(fn: ast.FunctionDef) -> Type:
        t = fn.ty
        return t.result if not t.params else t

    def _infer_def(
        self,
        fn: ast.FunctionDef,
        state: TypingState,
        mono: Dict[str, Type],
        sig_scope: Dict[str, TVar],
        declared: Optional[Type] = None,
    ) -> Type:
        """
        Infer the type of one definition; returns the function (or constant) type.

        With a `declared` (rigid) signature the parameters start at their
        declared types, so higher-order parameters keep their annotations.
        """
        state.scopes = [{}]
        state.params = set(fn.params)
        state.poly_locals = set()
        split = split_signature(declared, len(fn.params)) if declared is not None else None
        param_types = []
        for i, p in enumerate(fn.params):
            t = split[0][i] if split is not None else fresh_var()
            if p in state.scopes[0]:
                raise ResolutionError(f"parameter {p} appears twice", fn.span)
            state.scopes[0][p] = t
            param_types.append(t)
        body = _ExprInference(self, state, mono, sig_scope).infer(fn.body)
        if split is not None:
            state.unify_or_report(split[1], body, fn.body.span, f"result of {fn.name}")
        fn.ty = TArrow(tuple(param_types), body)
        return fn.ty if param_types else body

    def _zonk_def(self, fn: ast.FunctionDef, state: TypingState, declared: Optional[Type] = None) -> None:
        fn.ty = state.zonk(fn.ty)
        if declared is not None:
            # the signature's annotations and variable names win
            fn.ty = _align_with_signature(fn.ty, state.zonk(declared), len(fn.params))
        for node in ast.walk(fn.body):
            if hasattr(node, "ty"):
                node.ty = state.zonk(node.ty)
            if isinstance(node, ast.Case):
                for arm in node.arms:
                    for b in arm.pattern.binders:
                        b.ty = state.zonk(b.ty)


def split_signature(declared: Type, n: int) -> Optional[Tuple[List[Type], Type]]:
    """Split a declared type into `n` parameter types plus the result, if it has that many"""
    params: List[Type] = []
    t = declared
    while len(params) < n and isinstance(t, TArrow):
        take = t.params[: n - len(params)]
        params.extend(take)
        t = t.result if len(take) == len(t.params) else TArrow(t.params[len(take):], t.result)
    if len(params) < n:
        return None
    return params, t


def _align_with_signature(inferred: TArrow, declared: Type, n: int) -> TArrow:
    split = split_signature(declared, n)
    if split is None:
        return inferred
    return TArrow(tuple(split[0]), split[1], declared.annot if isinstance(declared, TArrow) else None)


class _ExprInference:
    def __init__(self, checker: TypeChecker, state: TypingState, mono: Dict[str, Type], sig_scope: Dict[str, TVar]):
        self.checker = checker
        self.env = checker.result.data_env
        self.state = state
        self.mono = mono
        self.sig_scope = sig_scope

    def infer(self, e: ast.Expr) -> Type:
        t = self._infer(e)
        e.ty = t
        return t

    def _infer(self, e: ast.Expr) -> Type:
        state = self.state
        if isinstance(e, ast.IntLit):
            return INT
        if isinstance(e, ast.UnitLit):
            return UNIT
        if isinstance(e, ast.Var):
            return self._var_type(e.name, e.span)
        if isinstance(e, ast.Deref):
            target = fresh_var()
            state.unify_or_report(ref(target), self._var_type(e.name, e.span), e.span, f"dereference of {e.name}")
            return target
        if isinstance(e, ast.Ctor):
            return self._ctor(e)
        if isinstance(e, ast.App):
            return self._app(e)
        if isinstance(e, ast.BinOp):
            left = self.infer(e.left)
            right = self.infer(e.right)
            state.unify_or_report(INT, left, e.left.span, f"left operand of {e.op}")
            state.unify_or_report(INT, right, e.right.span, f"right operand of {e.op}")
            return BOOL if e.op in COMPARE_OPS else INT
        if isinstance(e, ast.If):
            state.unify_or_report(BOOL, self.infer(e.cond), e.cond.span, "condition")
            then = self.infer(e.then)
            state.unify_or_report(then, self.infer(e.orelse), e.orelse.span, "else branch")
            return then
        if isinstance(e, ast.Case):
            return self._case(e)
        if isinstance(e, ast.Cast):
            inner = self.infer(e.expr)
            scope = dict(self.sig_scope)
            declared = self.env.to_type(e.type, scope, lambda n: fresh_var())
            check_cast(inner, declared, state, e.span)
            return declared
        if isinstance(e, ast.Seq):
            return self._seq(e)
        raise PawnsTypeError(f"unexpected expression {type(e).__name__}", e.span)

    def _var_type(self, name: str, span: Span) -> Type:
        local = self.state.lookup(name)
        if local is not None:
            return local
        if name in self.mono:
            return self.mono[name]
        result = self.checker.result
        if name in result.fn_types:
            return instantiate(result.fn_types[name])
        if name in result.state_var_types:
            return result.state_var_types[name]
        raise ResolutionError(f"unknown name {name}", span)

    def _ctor(self, e: ast.Ctor) -> Type:
        if e.name not in self.env.ctors:
            raise ResolutionError(f"unknown data constructor {e.name}", e.span)
        result, arg_types = self.env.instance(e.name)
        if len(e.args) != len(arg_types):
            raise PawnsTypeError(
                f"constructor {e.name} expects {len(arg_types)} argument(s), given {len(e.args)}", e.span
            )
        for i, (arg, expected) in enumerate(zip(e.args, arg_types), 1):
            self.state.unify_or_report(expected, self.infer(arg), arg.span, f"argument {i} of {e.name}")
        return result

    def _app(self, e: ast.App) -> Type:
        state = self.state
        func = self.infer(e.func)
        arg_types = [self.infer(a.expr) for a in e.args]
        for a in e.args:
            if a.marked and not isinstance(a.expr, ast.Var):
                raise PawnsTypeError("only variables can be marked with !", a.span)
        updating = any(a.marked for a in e.args) or bool(e.annotations)
        before = state.snapshot() if updating else None
        callee = e.func.name if isinstance(e.func, ast.Var) else "function"

        t = func
        i = 0
        while i < len(arg_types):
            t = state.resolve(t)
            if isinstance(t, TArrow):
                take = min(len(t.params), len(arg_types) - i)
                for j in range(take):
                    arg = e.args[i + j]
                    state.unify_or_report(t.params[j], arg_types[i + j], arg.span, f"argument {i + j + 1} of {callee}")
                t = t.result if take == len(t.params) else TArrow(t.params[take:], t.result)
                i += take
            elif isinstance(t, TVar) and not t.rigid:
                result = fresh_var()
                state.unify_or_report(t, TArrow(tuple(arg_types[i:]), result), e.span, f"call of {callee}")
                t = result
                i = len(arg_types)
            else:
                raise PawnsTypeError(
                    f"{callee} is applied to too many arguments (type {show_type(state.zonk(func))})", e.span
                )
        if before is not None:
            state.note_instantiations(before, e.span)
        return t

    def _case(self, e: ast.Case) -> Type:
        state = self.state
        scrutinee = self.infer(e.scrutinee)
        result = fresh_var()
        for arm in e.arms:
            state.scopes.append({})
            pattern = arm.pattern
            if pattern.ctor is not None:
                if pattern.ctor not in self.env.ctors:
                    raise ResolutionError(f"unknown data constructor {pattern.ctor}", pattern.span)
                instance, arg_types = self.env.instance(pattern.ctor)
                if len(pattern.binders) != len(arg_types):
                    raise PawnsTypeError(
                        f"pattern {pattern.ctor} expects {len(arg_types)} binder(s), given {len(pattern.binders)}",
                        pattern.span,
                    )
                state.unify_or_report(instance, scrutinee, pattern.span, f"pattern {pattern.ctor}")
                for binder, arg_type in zip(pattern.binders, arg_types):
                    binder.ty = ref(arg_type) if binder.deref else arg_type
                    if binder.name is not None:
                        state.bind(binder.name, binder.ty, binder.span)
            state.unify_or_report(result, self.infer(arm.body), arm.body.span, "case arm")
            state.scopes.pop()
        return result

    def _seq(self, e: ast.Seq) -> Type:
        state = self.state
        state.scopes.append({})
        value: Type = UNIT
        try:
            for stmt in e.stmts:
                value = self._stmt(stmt)
        finally:
            state.scopes.pop()
        return value

    def _stmt(self, s: ast.Stmt) -> Type:
        state = self.state
        result = self.checker.result
        if isinstance(s, ast.Let):
            if s.name in result.state_var_types and state.lookup(s.name) is None:
                raise ResolutionError(f"{s.name} is a state variable and can only be bound with *{s.name} = ...", s.span)
            s.ty = self.infer(s.expr)
            state.bind(s.name, s.ty, s.span)
            return UNIT
        if isinstance(s, ast.RefBind):
            value = self.infer(s.expr)
            s.ty = ref(value)
            if state.lookup(s.name) is None and s.name in result.state_var_types:
                state.unify_or_report(result.state_var_types[s.name], s.ty, s.span, f"binding of state variable {s.name}")
            else:
                state.bind(s.name, s.ty, s.span)
            return UNIT
        if isinstance(s, ast.Update):
            value = self.infer(s.expr)
            if state.lookup(s.name) is None and s.name not in result.state_var_types:
                raise ResolutionError(f"unknown name {s.name}", s.span)
            current = state.lookup(s.name) or result.state_var_types[s.name]
            if state.lookup(s.name) is None:
                state.unify_or_report(current, ref(value), s.span, f"update of {s.name}")
            else:
                instantiate_on_update(s.name, ref(value), state, s.span)
            return UNIT
        return self.infer(s.expr)


def check_types(program: ast.Program) -> TypeCheckResult:
    """Type check a prelude-attached program, annotating every expression"""
    return TypeChecker(program).check()
