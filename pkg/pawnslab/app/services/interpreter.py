"""
Strict interpreter.

Constructor arguments live in heap cells: a constructor value holds the
addresses of its argument cells, a reference value holds one address.
Dereference patterns bind references to the argument cells themselves, so
`*!x := e` through such a binder updates the enclosing value in place.
"""
import logging
import sys
from collections import Counter
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Protocol, Sequence, TextIO, Tuple, Union

from app.core.config import Settings, get_settings
from app.core.errors import PawnsRuntimeError
from app.models import ast
from app.schemas.diagnostic import Span
from app.utils.prelude import PRIMITIVES

logger = logging.getLogger(__name__)

READS = ("ro", "rw")
WRITES = ("wo", "rw")

# Python frames used per interpreted call, generously
_FRAMES_PER_CALL = 40


# ============ Values ============

@dataclass(frozen=True)
class UnitValue:
    def __repr__(self) -> str:
        return "()"


UNIT = UnitValue()


@dataclass(frozen=True)
class CtorValue:
    tag: str
    addrs: Tuple[int, ...] = ()


@dataclass(frozen=True)
class RefValue:
    addr: int


@dataclass(frozen=True)
class Closure:
    name: str
    args: Tuple["Value", ...]
    arity: int

    @property
    def remaining(self) -> int:
        return self.arity - len(self.args)


Value = Union[int, UnitValue, CtorValue, RefValue, Closure]

TRUE = CtorValue("True")
FALSE = CtorValue("False")

# state variable -> its current binding in one frame (None while unbound)
StateSlots = Dict[str, Optional[RefValue]]


class Heap:
    """Growable cell store; addresses are never reused within a run"""

    def __init__(self):
        self.cells: List[Value] = []
        # constructor applications with arguments per tag, plus "Ref" for ref cells
        self.allocations: Counter = Counter()

    def alloc(self, value: Value) -> int:
        self.cells.append(value)
        return len(self.cells) - 1

    def read(self, addr: int) -> Value:
        return self.cells[addr]

    def write(self, addr: int, value: Value) -> None:
        self.cells[addr] = value

    def construct(self, tag: str, values: Sequence[Value]) -> CtorValue:
        if not values:
            return CtorValue(tag)
        self.allocations[tag] += 1
        return CtorValue(tag, tuple(self.alloc(v) for v in values))

    def new_ref(self, value: Value) -> RefValue:
        self.allocations["Ref"] += 1
        return RefValue(self.alloc(value))


def match_pattern(pattern: ast.Pattern, value: Value, heap: Heap) -> Optional[Dict[str, Value]]:
    """Bindings of a matching arm, or None; `*x` binders address the argument cells"""
    if pattern.ctor is None:
        return {}
    if not isinstance(value, CtorValue) or value.tag != pattern.ctor:
        return None
    env: Dict[str, Value] = {}
    for binder, addr in zip(pattern.binders, value.addrs):
        if binder.name is None:
            continue
        env[binder.name] = RefValue(addr) if binder.deref else heap.read(addr)
    return env


def exec_update(ref: RefValue, value: Value, heap: Heap) -> None:
    heap.write(ref.addr, value)


def to_python(value: Value, heap: Heap):
    """Plain nested tuples for comparisons: `("Cons", 1, ("Nil",))`"""
    if isinstance(value, int):
        return value
    if isinstance(value, UnitValue):
        return ()
    if isinstance(value, CtorValue):
        return (value.tag,) + tuple(to_python(heap.read(a), heap) for a in value.addrs)
    if isinstance(value, RefValue):
        return ("Ref", to_python(heap.read(value.addr), heap))
    return f"<closure {value.name}/{value.remaining}>"


class StatementObserver(Protocol):
    def observe(self, fn: str, stmt: ast.Stmt, env: Dict[str, Value], heap: Heap) -> None:
        ...


@dataclass
class _Frame:
    fn: str
    env: Dict[str, Value]
    slots: StateSlots = field(default_factory=dict)

    def child(self, bindings: Optional[Dict[str, Value]] = None) -> "_Frame":
        env = dict(self.env)
        if bindings:
            env.update(bindings)
        return _Frame(self.fn, env, self.slots)


# ============ Interpreter ============

class Interpreter:
    """One evaluation context: owns its heap, output stream and call depth"""

    def __init__(
        self,
        program: ast.Program,
        settings: Optional[Settings] = None,
        out: Optional[TextIO] = None,
        observer: Optional[StatementObserver] = None,
    ):
        self.program = program
        self.settings = settings or get_settings()
        self.out = out if out is not None else sys.stdout
        self.observer = observer
        self.heap = Heap()
        self.depth = 0
        self._half = 1 << (self.settings.int_bits - 1)
        self._implicits: Dict[str, Dict[str, str]] = {}
        for name, sig in program.signatures.items():
            clause = sig.clause
            if clause is not None:
                self._implicits[name] = clause.implicit_modes()
        wanted = _FRAMES_PER_CALL * self.settings.max_call_depth + 1000
        if sys.getrecursionlimit() < wanted:
            sys.setrecursionlimit(wanted)

    # ============ Entry points ============

    def run_main(self) -> Value:
        """Run `main` with `io` bound, as the driver does"""
        fn = self.program.defs.get("main")
        if fn is None:
            raise PawnsRuntimeError("program has no main function")
        slots: StateSlots = {"io": self.heap.new_ref(UNIT)}
        args = [UNIT] if fn.params else []
        logger.info("[Interpreter] running main")
        return self.call("main", args, slots)

    def call(self, name: str, args: Sequence[Value], slots: Optional[StateSlots] = None) -> Value:
        slots = slots if slots is not None else {}
        span = self.program.defs[name].span if name in self.program.defs else Span(file=self.program.file)
        try:
            return self.apply(self.function_value(name), list(args), slots, span)
        except RecursionError:
            raise PawnsRuntimeError("call depth exceeded", span)

    def list_value(self, items: Sequence[Value]) -> Value:
        value: Value = CtorValue("Nil")
        for item in reversed(items):
            value = self.heap.construct("Cons", [item, value])
        return value

    def construct(self, tag: str, *values: Value) -> CtorValue:
        return self.heap.construct(tag, list(values))

    # ============ Application ============

    def arity(self, name: str) -> int:
        if name in PRIMITIVES:
            return 1
        return len(self.program.defs[name].params)

    def function_value(self, name: str) -> Closure:
        return Closure(name, (), self.arity(name))

    def apply(self, fn: Value, args: List[Value], slots: StateSlots, span: Span) -> Value:
        if not isinstance(fn, Closure):
            raise PawnsRuntimeError("application of a value that is not a function", span)
        collected = fn.args + tuple(args)
        if len(collected) < fn.arity:
            return Closure(fn.name, collected, fn.arity)
        result = self.invoke(fn.name, collected[:fn.arity], slots, span)
        rest = list(collected[fn.arity:])
        return self.apply(result, rest, slots, span) if rest else result

    def invoke(self, name: str, args: Sequence[Value], caller_slots: StateSlots, span: Span) -> Value:
        """
        Run one call in a fresh frame.

        The callee sees the caller's bindings of its ro/rw state variables
        and an unbound slot for wo ones; its final wo/rw bindings are copied
        back. Other state variables it binds stay local to its frame.
        """
        modes = self._implicits.get(name, {})
        slots: StateSlots = {v: caller_slots.get(v) if mode in READS else None for v, mode in modes.items()}
        self.depth += 1
        if self.depth > self.settings.max_call_depth:
            raise PawnsRuntimeError(f"call depth exceeded ({self.settings.max_call_depth})", span)
        try:
            if name in PRIMITIVES:
                result = self._primitive(name, args)
            else:
                fn = self.program.defs[name]
                result = self.eval(fn.body, _Frame(name, dict(zip(fn.params, args)), slots))
        finally:
            self.depth -= 1
        for var, mode in modes.items():
            if mode in WRITES:
                caller_slots[var] = slots[var]
        return result

    def _primitive(self, name: str, args: Sequence[Value]) -> Value:
        if name == "print_int":
            self.out.write(f"{args[0]}\n")
            return UNIT
        raise PawnsRuntimeError(f"unknown primitive {name}")

    # ============ Expressions ============

    def eval_expr(self, e: ast.Expr, env: Dict[str, Value], slots: Optional[StateSlots] = None) -> Value:
        return self.eval(e, _Frame("<expr>", dict(env), slots if slots is not None else {}))

    def eval(self, e: ast.Expr, frame: _Frame) -> Value:
        if isinstance(e, ast.IntLit):
            return self.wrap(e.value)
        if isinstance(e, ast.UnitLit):
            return UNIT
        if isinstance(e, ast.Var):
            return self.lookup(e.name, frame, e.span)
        if isinstance(e, ast.Deref):
            ref = self.lookup(e.name, frame, e.span)
            return self.heap.read(ref.addr)
        if isinstance(e, ast.Ctor):
            return self.heap.construct(e.name, [self.eval(a, frame) for a in e.args])
        if isinstance(e, ast.App):
            fn = self.eval(e.func, frame)
            args = [self.eval(a.expr, frame) for a in e.args]
            return self.apply(fn, args, frame.slots, e.span)
        if isinstance(e, ast.BinOp):
            return self.binop(e, self.eval(e.left, frame), self.eval(e.right, frame))
        if isinstance(e, ast.Case):
            value = self.eval(e.scrutinee, frame)
            for arm in e.arms:
                bindings = match_pattern(arm.pattern, value, self.heap)
                if bindings is not None:
                    return self.eval(arm.body, frame.child(bindings))
            tag = value.tag if isinstance(value, CtorValue) else repr(value)
            raise PawnsRuntimeError(f"no case arm matches {tag}", e.span)
        if isinstance(e, ast.If):
            cond = self.eval(e.cond, frame)
            return self.eval(e.then if cond == TRUE else e.orelse, frame)
        if isinstance(e, ast.Cast):
            return self.eval(e.expr, frame)
        if isinstance(e, ast.Seq):
            scope = frame.child()
            value: Value = UNIT
            for s in e.stmts:
                value = self.exec_stmt(s, scope)
                if self.observer is not None:
                    self.observer.observe(scope.fn, s, scope.env, self.heap)
            return value
        raise PawnsRuntimeError(f"cannot evaluate {type(e).__name__}", getattr(e, "span", None))

    def lookup(self, name: str, frame: _Frame, span: Span) -> Value:
        if name in frame.env:
            return frame.env[name]
        if name in self.program.state_vars:
            ref = frame.slots.get(name)
            if ref is None:
                raise PawnsRuntimeError(f"state variable {name} is not bound", span)
            return ref
        if name in self.program.defs or name in PRIMITIVES:
            fn = self.function_value(name)
            return self.invoke(name, (), frame.slots, span) if fn.arity == 0 else fn
        raise PawnsRuntimeError(f"unbound name {name}", span)

    def exec_stmt(self, s: ast.Stmt, frame: _Frame) -> Value:
        value = self.eval(s.expr, frame)
        if isinstance(s, ast.ExprStmt):
            return value
        if isinstance(s, ast.Let):
            frame.env[s.name] = value
        elif isinstance(s, ast.RefBind):
            ref = self.heap.new_ref(value)
            if s.name not in frame.env and s.name in self.program.state_vars:
                frame.slots[s.name] = ref
            else:
                frame.env[s.name] = ref
        elif isinstance(s, ast.Update):
            exec_update(self.lookup(s.name, frame, s.span), value, self.heap)
        return UNIT

    # ============ Arithmetic ============

    def wrap(self, n: int) -> int:
        return (n + self._half) % (2 * self._half) - self._half

    def binop(self, e: ast.BinOp, left: int, right: int) -> Value:
        op = e.op
        if op == "+":
            return self.wrap(left + right)
        if op == "-":
            return self.wrap(left - right)
        if op == "*":
            return self.wrap(left * right)
        if op in ("div", "mod"):
            if right == 0:
                raise PawnsRuntimeError("division by zero", e.span)
            quotient = abs(left) // abs(right)
            if (left < 0) != (right < 0):
                quotient = -quotient
            return self.wrap(quotient if op == "div" else left - right * quotient)
        comparisons = {
            "<=": left <= right, "<": left < right, "==": left == right,
            ">=": left >= right, ">": left > right,
        }
        if op in comparisons:
            return TRUE if comparisons[op] else FALSE
        raise PawnsRuntimeError(f"unknown operator {op}", e.span)
