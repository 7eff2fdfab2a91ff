"""
Sharing relation and elaboration of sharing declarations.

A point is an (owner, component) pair; owners are variables, the
`abstract` pseudo-variable, `$`-prefixed temporaries and, inside signatures,
positional names `%1 .. %n` and `%r`. A self pair marks a component that
may exist.
"""
from dataclasses import dataclass, field
from itertools import combinations
from typing import Dict, Iterable, List, Optional, Set, Tuple

from app.core.errors import PawnsTypeError, ResolutionError
from app.models import ast
from app.models.types import Type
from app.schemas.diagnostic import Span
from app.services.sharedom import REF_STEP, Component, SharingDomain, alias_compatible

Point = Tuple[str, Component]

ABSTRACT = "abstract"
RESULT = "%r"


def param_owner(i: int) -> str:
    return f"%{i + 1}"


def abstract_point(p: Point) -> Point:
    c = p[1]
    return ABSTRACT, Component((c.terminal,), c.cell_type)


def compatible(p: Point, q: Point) -> bool:
    return alias_compatible(p[1], q[1])


def show_point(p: Point) -> str:
    return f"{p[0]}.{p[1].show()}"


def is_temp(owner: str) -> bool:
    return owner.startswith("$") and owner != "$result"


class SharingRel:
    """Symmetric may-alias relation over points"""

    def __init__(self):
        self._adj: Dict[Point, Set[Point]] = {}

    def copy(self) -> "SharingRel":
        rel = SharingRel()
        rel._adj = {p: set(qs) for p, qs in self._adj.items()}
        return rel

    def __eq__(self, other) -> bool:
        return isinstance(other, SharingRel) and self._adj == other._adj

    def add(self, p: Point, q: Point) -> None:
        self._adj.setdefault(p, {p}).add(q)
        self._adj.setdefault(q, {q}).add(p)

    def touch(self, p: Point) -> None:
        """Mark a component as possibly existing"""
        self._adj.setdefault(p, {p})

    def exists(self, p: Point) -> bool:
        return p in self._adj

    def aliases(self, p: Point) -> Set[Point]:
        return self._adj.get(p, set()) - {p}

    def points(self, owner: Optional[str] = None) -> List[Point]:
        return [p for p in self._adj if owner is None or p[0] == owner]

    def owners(self) -> Set[str]:
        return {p[0] for p in self._adj}

    def merge(self, other: "SharingRel") -> None:
        for p, qs in other._adj.items():
            self._adj.setdefault(p, set()).update(qs)

    def drop(self, owner: str) -> None:
        for p in self.points(owner):
            for q in self._adj.pop(p):
                if q != p and q in self._adj:
                    self._adj[q].discard(p)

    def pairs(self, distinct: bool = True) -> List[Tuple[Point, Point]]:
        """Unordered pairs (sorted); only pairs of distinct owners unless `distinct` is False"""
        result = set()
        for p, qs in self._adj.items():
            for q in qs:
                if distinct and p[0] == q[0]:
                    continue
                a, b = sorted((p, q), key=show_point)
                result.add((a, b))
        return sorted(result, key=lambda pq: (show_point(pq[0]), show_point(pq[1])))

    def add_with_copy(self, p: Point, q: Point, base: Optional["SharingRel"] = None) -> None:
        """Add p ~ q and let each side inherit the other's aliases (from `base`)"""
        base = base if base is not None else self
        p_aliases = base.aliases(p)
        q_aliases = base.aliases(q)
        self.add(p, q)
        for r in q_aliases:
            if r != p and compatible(p, r):
                self.add(p, r)
        for r in p_aliases:
            if r != q and compatible(q, r):
                self.add(q, r)

    def show(self, exclude_temps: bool = True) -> List[str]:
        lines = []
        for p, q in self.pairs():
            if exclude_temps and (is_temp(p[0]) or is_temp(q[0])):
                continue
            lines.append(f"{show_point(p)} ~ {show_point(q)}")
        return lines


def entails(computed: SharingRel, declared: SharingRel, owners: Optional[Iterable[str]] = None) -> bool:
    """Every distinct-owner pair of `computed` (over `owners`) is in `declared`"""
    return not violations(computed, declared, owners)


def violations(
    computed: SharingRel, declared: SharingRel, owners: Optional[Iterable[str]] = None
) -> List[Tuple[Point, Point]]:
    keep = set(owners) if owners is not None else None
    missing = []
    for p, q in computed.pairs():
        if keep is not None and (p[0] not in keep or q[0] not in keep):
            continue
        if q not in declared.aliases(p):
            missing.append((p, q))
    return missing


# ============ Elaboration ============

class DeclElaborator:
    """Turns sharing declarations over typed owners into relations"""

    def __init__(self, domain: SharingDomain, owners: Dict[str, Type], names: Dict[str, str]):
        self.domain = domain
        self.owners = owners
        # declared name -> owner key
        self.names = names

    def owner_points(self, owner: str) -> List[Point]:
        return [(owner, c) for c in self.domain.components(self.owners[owner])]

    def existence(self, owners: Iterable[str]) -> SharingRel:
        rel = SharingRel()
        for o in owners:
            for p in self.owner_points(o):
                rel.touch(p)
        return rel

    def maximal(self, owners: List[str], base: SharingRel) -> SharingRel:
        rel = base.copy()
        points = [p for o in owners for p in self.owner_points(o)]
        for p in points:
            rel.touch(p)
            rel.add(p, abstract_point(p))
        for p, q in combinations(points, 2):
            if p[0] != q[0] and compatible(p, q):
                rel.add(p, q)
        return rel

    def elaborate(self, decl: Optional[ast.SharingDecl], owners: List[str], base: SharingRel) -> SharingRel:
        if decl is None:
            return self.maximal(owners, base)
        rel = base.copy()
        for o in owners:
            for p in self.owner_points(o):
                rel.touch(p)
        if decl.kind != "equations":
            return rel
        for equation in decl.equations:
            sides = [self.term_points(t, nested=False) for t in equation]
            for a, b in combinations(sides, 2):
                self._pair_sides(rel, a, b, base)
        return rel

    def _pair_sides(self, rel: SharingRel, a, b, base: SharingRel) -> None:
        if a is ABSTRACT and b is ABSTRACT:
            return
        if a is ABSTRACT or b is ABSTRACT:
            for p in (b if a is ABSTRACT else a):
                rel.add(p, abstract_point(p))
            return
        for p in a:
            for q in b:
                if p != q and compatible(p, q):
                    rel.add_with_copy(p, q, base)

    def term_points(self, term: ast.DeclTerm, nested: bool):
        """Points a declaration term may occupy (ABSTRACT for `abstract`)"""
        if isinstance(term, ast.DAbstract):
            return ABSTRACT
        if isinstance(term, ast.DVar):
            return set(self.owner_points(self._owner(term.name, term.span)))
        if isinstance(term, ast.DDeref):
            owner = self._owner(term.name, term.span)
            points = self.owner_points(owner)
            if not any(c.path == (REF_STEP,) for _, c in points):
                raise PawnsTypeError(f"*{term.name} in a sharing declaration needs a Ref type", term.span)
            # as a constructor argument the argument cell is the ref target itself
            return {p for p in points if p[1].path != (REF_STEP,) or nested}
        points: Set[Point] = set()
        for arg in term.args:
            sub = self.term_points(arg, nested=True)
            if sub is ABSTRACT:
                raise PawnsTypeError("abstract cannot appear inside a constructor term", term.span)
            points |= sub
        return points

    def _owner(self, name: str, span: Span) -> str:
        if name not in self.names:
            raise ResolutionError(f"{name} is not named in the sharing pattern", span)
        return self.names[name]


@dataclass
class SignatureRels:
    """Elaborated signature over positional owners %1..%n and %r"""
    arity: int
    mutable: Tuple[bool, ...]
    pre: SharingRel
    post: SharingRel
    implicits: Dict[str, str] = field(default_factory=dict)
    param_names: List[str] = field(default_factory=list)
    result_name: Optional[str] = None


def elaborate_signature(
    clause: Optional[ast.SharingClause],
    param_types: List[Type],
    result_type: Type,
    domain: SharingDomain,
    post_override: Optional[ast.SharingDecl] = None,
) -> SignatureRels:
    """Elaborate pre/post of a clause; missing pre or post is maximal"""
    n = len(param_types)
    owners = {param_owner(i): t for i, t in enumerate(param_types)}
    owners[RESULT] = result_type
    formals = [param_owner(i) for i in range(n)]
    names: Dict[str, str] = {}
    mutable = tuple(False for _ in range(n))
    param_names = list(formals)
    result_name = None
    pre_decl = post_decl = None
    implicits: Dict[str, str] = {}

    if clause is not None:
        implicits = clause.implicit_modes()
        pre_decl, post_decl = clause.pre, clause.post
        if clause.has_pattern:
            if len(clause.params) != n:
                raise PawnsTypeError(
                    f"sharing pattern names {len(clause.params)} argument(s) but the type has {n}", clause.span
                )
            for i, p in enumerate(clause.params):
                names[p.name] = param_owner(i)
            names[clause.result_name] = RESULT
            mutable = clause.mutable_flags()
            param_names = [p.name for p in clause.params]
            result_name = clause.result_name
        elif (pre_decl is not None and pre_decl.kind == "equations") or (
            post_decl is not None and post_decl.kind == "equations"
        ):
            raise ResolutionError("sharing equations need a sharing pattern naming the arguments", clause.span)

    if post_override is not None:
        post_decl = post_override
    elaborator = DeclElaborator(domain, owners, names)
    pre = elaborator.elaborate(pre_decl, formals, elaborator.existence(formals))
    post_base = pre.copy()
    for p in elaborator.owner_points(RESULT):
        post_base.touch(p)
    if post_decl is not None and post_decl.kind == "inferred" and post_override is None:
        post = elaborator.maximal(formals + [RESULT], post_base)
    else:
        post = elaborator.elaborate(post_decl, formals + [RESULT], post_base)
    return SignatureRels(
        arity=n,
        mutable=mutable,
        pre=pre,
        post=post,
        implicits=implicits,
        param_names=param_names,
        result_name=result_name,
    )


def rename_rel(rel: SharingRel, mapping: Dict[str, str]) -> SharingRel:
    out = SharingRel()
    for p in rel.points():
        out.touch((mapping.get(p[0], p[0]), p[1]))
    for p, q in rel.pairs(distinct=False):
        out.add((mapping.get(p[0], p[0]), p[1]), (mapping.get(q[0], q[0]), q[1]))
    return out
