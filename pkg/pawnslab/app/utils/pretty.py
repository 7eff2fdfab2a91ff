"""
Pretty printer for Pawns programs.
Output re-parses to a structurally equal Program (spans ignored).
"""
from typing import List

from app.models import ast

INDENT = "    "

_LEVEL = {"<=": 1, "<": 1, "==": 1, ">=": 1, ">": 1, "+": 2, "-": 2, "*": 3, "div": 3, "mod": 3}
_APP = 4
_ATOM = 5


def pretty_program(program: ast.Program) -> str:
    blocks: List[str] = []
    for decl in program.data_decls.values():
        blocks.append(pretty_data(decl))
    for alias in program.type_aliases.values():
        head = " ".join([alias.name] + alias.params)
        blocks.append(f"type {head} = {pretty_type(alias.body)}")
    for var in program.state_vars.values():
        blocks.append(f"!{var.name} :: {pretty_type(var.type)}")
    for name, sig in program.signatures.items():
        if name not in program.defs:
            blocks.append(pretty_signature(sig))
    for name, fn in program.defs.items():
        sig = program.signatures.get(name)
        text = pretty_def(fn)
        if sig is not None:
            text = pretty_signature(sig) + "\n" + text
        blocks.append(text)
    for renaming in program.renamings:
        blocks.append(pretty_renaming(renaming))
    return "\n\n".join(blocks) + ("\n" if blocks else "")


# ============ Declarations ============

def pretty_data(decl: ast.DataDecl) -> str:
    head = " ".join([decl.name] + decl.params)
    ctors = []
    for c in decl.ctors:
        ctors.append(" ".join([c.name] + [_type_atom(a) for a in c.args]))
    return f"data {head} = " + " | ".join(ctors)


def pretty_renaming(decl: ast.RenamingDecl) -> str:
    text = "renaming " + " ".join(f"{new} = {old}" for new, old in decl.bindings)
    if decl.with_bindings:
        text += " with " + " ".join(f"{new} = {old}" for new, old in decl.with_bindings)
    return text


def pretty_signature(sig: ast.Signature) -> str:
    type_ = sig.type
    if isinstance(type_, ast.TyArrow) and type_.clause is not None:
        lines = [f"{sig.name} :: {_arrow(type_)}"]
        lines.extend(INDENT + line for line in pretty_clause(type_.clause))
        return "\n".join(lines)
    return f"{sig.name} :: {pretty_type(type_)}"


def pretty_clause(clause: ast.SharingClause) -> List[str]:
    lines = []
    if clause.has_pattern:
        words = [clause.fn_name] + [("!" if p.mutable else "") + p.name for p in clause.params]
        lines.append(f"sharing {' '.join(words)} = {clause.result_name}")
    if clause.pre is not None:
        lines.append("pre " + pretty_sharing_decl(clause.pre))
    if clause.post is not None:
        lines.append("post " + pretty_sharing_decl(clause.post))
    if clause.implicits:
        lines.append("implicit " + ", ".join(f"{i.mode} {i.var}" for i in clause.implicits))
    return lines


def pretty_sharing_decl(decl: ast.SharingDecl) -> str:
    if decl.kind != "equations":
        return decl.kind
    return "; ".join(" = ".join(pretty_term(t) for t in eq) for eq in decl.equations)


def pretty_term(term: ast.DeclTerm, nested: bool = False) -> str:
    if isinstance(term, ast.DVar):
        return term.name
    if isinstance(term, ast.DDeref):
        return "*" + term.name
    if isinstance(term, ast.DAbstract):
        return "abstract"
    if not term.args:
        return term.name
    text = " ".join([term.name] + [pretty_term(a, nested=True) for a in term.args])
    return f"({text})" if nested else text


def pretty_def(fn: ast.FunctionDef) -> str:
    head = " ".join([fn.name] + fn.params)
    return f"{head} =\n{INDENT}{pretty_body(fn.body)}"


# ============ Types ============

def pretty_type(t: ast.TypeExpr) -> str:
    if isinstance(t, ast.TyArrow):
        if t.clause is not None:
            return f"({_arrow(t)} {' '.join(pretty_clause(t.clause))})"
        return _arrow(t)
    if isinstance(t, ast.TyCon) and t.args:
        return " ".join([t.name] + [_type_atom(a) for a in t.args])
    return _type_atom(t)


def _arrow(t: ast.TyArrow) -> str:
    parts = [_type_operand(p) for p in t.params]
    return " -> ".join(parts + [_type_operand(t.result)])


def _type_operand(t: ast.TypeExpr) -> str:
    if isinstance(t, ast.TyArrow):
        return "(" + pretty_type(t) + ")" if t.clause is None else pretty_type(t)
    return pretty_type(t)


def _type_atom(t: ast.TypeExpr) -> str:
    if isinstance(t, ast.TyVar):
        return t.name
    if isinstance(t, ast.TyCon):
        if t.name == "()":
            return "()"
        if not t.args:
            return t.name
        return "(" + pretty_type(t) + ")"
    return _type_operand(t) if t.clause is not None else "(" + pretty_type(t) + ")"


# ============ Statements and expressions ============

def pretty_body(e: ast.Expr) -> str:
    if isinstance(e, ast.Seq):
        return "; ".join(pretty_stmt(s) for s in e.stmts)
    return _stmt_expr(e)


def pretty_stmt(s: ast.Stmt) -> str:
    if isinstance(s, ast.Let):
        return f"{s.name} = {_stmt_expr(s.expr)}"
    if isinstance(s, ast.RefBind):
        return f"*{s.name} = {_stmt_expr(s.expr)}"
    if isinstance(s, ast.Update):
        bang = "!" if s.marked else ""
        # the right-hand side is parsed without `!x` arguments
        if _has_marks(s.expr) or isinstance(s.expr, (ast.Case, ast.If, ast.Cast)):
            rhs = _wrap(s.expr)
        else:
            rhs = _stmt_expr(s.expr)
        notes = "".join(f" !{a}" for a in s.annotations)
        return f"*{bang}{s.name} := {rhs}{notes}"
    return _stmt_expr(s.expr)


def _stmt_expr(e: ast.Expr) -> str:
    """An expression in statement position: case, if and casts need no parentheses"""
    if isinstance(e, ast.Case):
        arms = " ".join(
            f"| {pretty_pattern(a.pattern)} -> {_expr(a.body, 0)}" for a in e.arms
        )
        return f"case {_expr(e.scrutinee, 0)} of {arms}"
    if isinstance(e, ast.If):
        return f"if {_expr(e.cond, 0)} then {_expr(e.then, 0)} else {_expr(e.orelse, 0)}"
    if isinstance(e, ast.Cast):
        return f"{_expr(e.expr, 1)} :: {pretty_type(e.type)}"
    return _expr(e, 0)


def _wrap(e: ast.Expr) -> str:
    if isinstance(e, ast.Seq):
        return "{ " + pretty_body(e) + " }"
    return "(" + _stmt_expr(e) + ")"


def _has_marks(e: ast.Expr) -> bool:
    if isinstance(e, ast.App):
        return any(a.marked for a in e.args)
    if isinstance(e, ast.BinOp):
        return _has_marks(e.left) or _has_marks(e.right)
    return False


def _expr(e: ast.Expr, level: int) -> str:
    if isinstance(e, ast.Var):
        return e.name
    if isinstance(e, ast.IntLit):
        return str(e.value)
    if isinstance(e, ast.UnitLit):
        return "()"
    if isinstance(e, ast.Deref):
        return "*" + e.name
    if isinstance(e, ast.Ctor):
        if not e.args:
            return e.name
        text = " ".join([e.name] + [_expr(a, _ATOM) for a in e.args])
        return text if level <= _APP else f"({text})"
    if isinstance(e, ast.App):
        text = _app(e)
        return text if level <= _APP else f"({text})"
    if isinstance(e, ast.BinOp):
        prec = _LEVEL[e.op]
        if prec == 1:
            text = f"{_expr(e.left, 2)} {e.op} {_expr(e.right, 2)}"
        else:
            text = f"{_expr(e.left, prec)} {e.op} {_expr(e.right, prec + 1)}"
        return text if level <= prec else f"({text})"
    return _wrap(e)


def _app(e: ast.App) -> str:
    parts = []
    head = _expr(e.func, _ATOM)
    parts.append("!" + head if e.state_call else head)
    for arg in e.args:
        parts.append("!" + arg.expr.name if arg.marked else _expr(arg.expr, _ATOM))
    text = " ".join(parts)
    if e.annotations:
        text = f"({text})" + "".join(f" !{a}" for a in e.annotations)
    return text


def pretty_pattern(p: ast.Pattern) -> str:
    if p.ctor is None:
        return "_"
    binders = [("*" if b.deref else "") + (b.name or "_") for b in p.binders]
    return " ".join([p.ctor] + binders)
