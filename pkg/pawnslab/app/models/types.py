"""
Semantic types used by the type checker, the sharing domain and the analysis
"""
import itertools
from dataclasses import dataclass, field
from typing import Dict, Iterator, Optional, Tuple, Union

from app.models.ast import SharingClause


@dataclass(frozen=True)
class TVar:
    id: int
    name: Optional[str] = field(default=None, compare=False)
    # signature variables are rigid while the definition is checked
    rigid: bool = field(default=False, compare=False)


@dataclass(frozen=True)
class TCon:
    name: str
    args: Tuple["Type", ...] = ()


@dataclass(frozen=True)
class TArrow:
    params: Tuple["Type", ...]
    result: "Type"
    # sharing annotation; never part of type identity
    annot: Optional[SharingClause] = field(default=None, compare=False, hash=False)


Type = Union[TVar, TCon, TArrow]

INT = TCon("Int")
BOOL = TCon("Bool")
UNIT = TCon("()")


def ref(t: Type) -> TCon:
    return TCon("Ref", (t,))


def list_of(t: Type) -> TCon:
    return TCon("List", (t,))


def is_ref(t: Type) -> bool:
    return isinstance(t, TCon) and t.name == "Ref"


def type_vars(t: Type) -> Iterator[TVar]:
    if isinstance(t, TVar):
        yield t
    elif isinstance(t, TCon):
        for a in t.args:
            yield from type_vars(a)
    else:
        for p in t.params:
            yield from type_vars(p)
        yield from type_vars(t.result)


def substitute(t: Type, mapping: Dict[TVar, Type]) -> Type:
    if isinstance(t, TVar):
        return mapping.get(t, t)
    if isinstance(t, TCon):
        if not t.args:
            return t
        return TCon(t.name, tuple(substitute(a, mapping) for a in t.args))
    return TArrow(
        tuple(substitute(p, mapping) for p in t.params),
        substitute(t.result, mapping),
        t.annot,
    )


def show_type(t: Type, names: Optional[Dict[TVar, str]] = None) -> str:
    """Render a type; unnamed variables are lettered by first appearance"""
    if names is None:
        names = {}
        for v in type_vars(t):
            if v not in names:
                names[v] = v.name or _letter(len(names))
    return _show(t, names, top=True)


def _letter(i: int) -> str:
    return chr(ord("a") + i) if i < 26 else f"t{i}"


def _show(t: Type, names: Dict[TVar, str], top: bool = False) -> str:
    if isinstance(t, TVar):
        return names.get(t) or t.name or f"t{t.id}"
    if isinstance(t, TCon):
        if not t.args:
            return t.name
        return t.name + " " + " ".join(_show_atom(a, names) for a in t.args)
    parts = [_show_param(p, names) for p in t.params]
    return " -> ".join(parts + [_show(t.result, names)])


def _show_param(t: Type, names: Dict[TVar, str]) -> str:
    if isinstance(t, TArrow):
        return "(" + _show(t, names) + ")"
    return _show(t, names)


def _show_atom(t: Type, names: Dict[TVar, str]) -> str:
    if isinstance(t, TArrow) or (isinstance(t, TCon) and t.args):
        return "(" + _show(t, names) + ")"
    return _show(t, names)


_ids = itertools.count(1)


def fresh_var(name: Optional[str] = None, rigid: bool = False) -> TVar:
    return TVar(next(_ids), name, rigid)
