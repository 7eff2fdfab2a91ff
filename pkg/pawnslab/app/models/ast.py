"""
Pawns abstract syntax tree
Every node carries its source span; spans and inferred types are ignored by
structural equality so a re-parsed program compares equal to the original.
"""
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Tuple, Union

from app.schemas.diagnostic import Span


def _span() -> Span:
    return field(default_factory=Span, compare=False, repr=False, kw_only=True)


def _ty():
    return field(default=None, compare=False, repr=False, kw_only=True)


# ============ Type expressions (syntax) ============

@dataclass
class TyVar:
    name: str
    span: Span = _span()


@dataclass
class TyCon:
    name: str
    args: List["TypeExpr"] = field(default_factory=list)
    span: Span = _span()


@dataclass
class TyArrow:
    params: List["TypeExpr"]
    result: "TypeExpr"
    clause: Optional["SharingClause"] = None
    span: Span = _span()


TypeExpr = Union[TyVar, TyCon, TyArrow]


# ============ Sharing declarations ============

@dataclass
class DVar:
    name: str
    span: Span = _span()


@dataclass
class DDeref:
    name: str
    span: Span = _span()


@dataclass
class DAbstract:
    span: Span = _span()


@dataclass
class DCtor:
    name: str
    args: List["DeclTerm"] = field(default_factory=list)
    span: Span = _span()


DeclTerm = Union[DVar, DDeref, DAbstract, DCtor]


@dataclass
class SharingDecl:
    """`nosharing`, `inferred`, or a list of equations `t1 = t2 (= t3)*`"""
    kind: str  # "nosharing" | "equations" | "inferred"
    equations: List[List[DeclTerm]] = field(default_factory=list)
    span: Span = _span()

    @classmethod
    def nosharing(cls) -> "SharingDecl":
        return cls(kind="nosharing")


@dataclass
class PatParam:
    name: str
    mutable: bool = False
    span: Span = _span()


@dataclass
class Implicit:
    mode: str  # "ro" | "wo" | "rw"
    var: str
    span: Span = _span()


@dataclass
class SharingClause:
    """The `sharing`/`pre`/`post`/`implicit` clauses attached to an arrow"""
    fn_name: Optional[str] = None
    params: List[PatParam] = field(default_factory=list)
    result_name: Optional[str] = None
    pre: Optional[SharingDecl] = None
    post: Optional[SharingDecl] = None
    implicits: List[Implicit] = field(default_factory=list)
    span: Span = _span()

    @property
    def has_pattern(self) -> bool:
        return self.fn_name is not None

    def implicit_modes(self) -> Dict[str, str]:
        return {i.var: i.mode for i in self.implicits}

    def mutable_flags(self) -> Tuple[bool, ...]:
        return tuple(p.mutable for p in self.params)


# ============ Patterns ============

@dataclass
class Binder:
    name: Optional[str]  # None for `_`
    deref: bool = False
    span: Span = _span()
    ty: object = _ty()


@dataclass
class Pattern:
    ctor: Optional[str]  # None for a wildcard arm `_`
    binders: List[Binder] = field(default_factory=list)
    span: Span = _span()


# ============ Expressions ============

@dataclass
class Var:
    name: str
    span: Span = _span()
    ty: object = _ty()


@dataclass
class IntLit:
    value: int
    span: Span = _span()
    ty: object = _ty()


@dataclass
class UnitLit:
    span: Span = _span()
    ty: object = _ty()


@dataclass
class Ctor:
    """Saturated constructor application (zero or more arguments)"""
    name: str
    args: List["Expr"] = field(default_factory=list)
    span: Span = _span()
    ty: object = _ty()


@dataclass
class Arg:
    expr: "Expr"
    marked: bool = False
    span: Span = _span()


@dataclass
class App:
    func: "Expr"
    args: List[Arg]
    annotations: List[str] = field(default_factory=list)
    state_call: bool = False
    span: Span = _span()
    ty: object = _ty()


@dataclass
class BinOp:
    op: str
    left: "Expr"
    right: "Expr"
    span: Span = _span()
    ty: object = _ty()


@dataclass
class Arm:
    pattern: Pattern
    body: "Expr"
    span: Span = _span()


@dataclass
class Case:
    scrutinee: "Expr"
    arms: List[Arm]
    span: Span = _span()
    ty: object = _ty()


@dataclass
class If:
    cond: "Expr"
    then: "Expr"
    orelse: "Expr"
    span: Span = _span()
    ty: object = _ty()


@dataclass
class Deref:
    name: str
    span: Span = _span()
    ty: object = _ty()


@dataclass
class Cast:
    expr: "Expr"
    type: TypeExpr
    span: Span = _span()
    ty: object = _ty()


@dataclass
class Seq:
    """`s1; s2; ...; sn` - value is the last statement's value"""
    stmts: List["Stmt"]
    span: Span = _span()
    ty: object = _ty()


Expr = Union[Var, IntLit, UnitLit, Ctor, App, BinOp, Case, If, Deref, Cast, Seq]


# ============ Statements ============

@dataclass
class Let:
    name: str
    expr: Expr
    span: Span = _span()
    ty: object = _ty()


@dataclass
class RefBind:
    name: str
    expr: Expr
    span: Span = _span()
    ty: object = _ty()


@dataclass
class Update:
    name: str
    marked: bool
    expr: Expr
    annotations: List[str] = field(default_factory=list)
    span: Span = _span()


@dataclass
class ExprStmt:
    expr: Expr
    span: Span = _span()


Stmt = Union[Let, RefBind, Update, ExprStmt]


# ============ Declarations ============

@dataclass
class CtorDecl:
    name: str
    args: List[TypeExpr] = field(default_factory=list)
    span: Span = _span()


@dataclass
class DataDecl:
    name: str
    params: List[str]
    ctors: List[CtorDecl]
    span: Span = _span()


@dataclass
class TypeAlias:
    name: str
    params: List[str]
    body: TypeExpr
    span: Span = _span()


@dataclass
class Signature:
    name: str
    type: TypeExpr
    span: Span = _span()

    @property
    def clause(self) -> Optional[SharingClause]:
        if isinstance(self.type, TyArrow):
            return self.type.clause
        return None


@dataclass
class StateVarDecl:
    name: str
    type: TypeExpr
    span: Span = _span()


@dataclass
class RenamingDecl:
    bindings: List[Tuple[str, str]]
    with_bindings: List[Tuple[str, str]] = field(default_factory=list)
    span: Span = _span()


@dataclass
class FunctionDef:
    name: str
    params: List[str]
    body: Expr
    span: Span = _span()
    ty: object = _ty()


@dataclass
class Program:
    data_decls: Dict[str, DataDecl] = field(default_factory=dict)
    type_aliases: Dict[str, TypeAlias] = field(default_factory=dict)
    signatures: Dict[str, Signature] = field(default_factory=dict)
    state_vars: Dict[str, StateVarDecl] = field(default_factory=dict)
    renamings: List[RenamingDecl] = field(default_factory=list)
    defs: Dict[str, FunctionDef] = field(default_factory=dict)
    # new name -> old name, filled by renaming expansion
    renamed_from: Dict[str, str] = field(default_factory=dict, compare=False)
    file: str = field(default="<input>", compare=False)


# ============ Traversal ============

def children(node) -> List[object]:
    """Direct expression/statement children of an expression or statement"""
    if isinstance(node, Ctor):
        return list(node.args)
    if isinstance(node, App):
        return [node.func] + [a.expr for a in node.args]
    if isinstance(node, BinOp):
        return [node.left, node.right]
    if isinstance(node, Case):
        return [node.scrutinee] + [a.body for a in node.arms]
    if isinstance(node, If):
        return [node.cond, node.then, node.orelse]
    if isinstance(node, Cast):
        return [node.expr]
    if isinstance(node, Seq):
        return list(node.stmts)
    if isinstance(node, (Let, RefBind, Update, ExprStmt)):
        return [node.expr]
    return []


def walk(node):
    """Pre-order traversal over expressions and statements"""
    yield node
    for child in children(node):
        yield from walk(child)
