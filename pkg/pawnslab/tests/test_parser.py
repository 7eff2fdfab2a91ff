import pytest

from app.core.errors import PawnsSyntaxError, ResolutionError
from app.models import ast
from app.services.parser import parse_source, parse_type
from app.utils.pretty import pretty_program
from tests.helpers import CORPUS

CORPUS_FILES = sorted(p.name for p in CORPUS.glob("*.pawns"))


def _body(source: str, name: str = "f") -> ast.Expr:
    return parse_source(source).defs[name].body


def test_statements_of_a_sequence():
    body = _body("f x =\n    *p = x;\n    *!p := 3;\n    y = *p;\n    y\n")
    assert isinstance(body, ast.Seq)
    kinds = [type(s) for s in body.stmts]
    assert kinds == [ast.RefBind, ast.Update, ast.Let, ast.ExprStmt]
    update = body.stmts[1]
    assert update.name == "p" and update.marked
    assert isinstance(body.stmts[2].expr, ast.Deref)


def test_single_expression_body_is_not_wrapped():
    assert isinstance(_body("f x = g x 1\n"), ast.App)


def test_update_annotations():
    body = _body("f xp =\n    *!xp := 43 !a!b;\n    ()\n")
    update = body.stmts[0]
    assert update.annotations == ["a", "b"]
    assert isinstance(update.expr, ast.IntLit)


def test_unmarked_update_parses():
    body = _body("f xp =\n    *xp := 1;\n    ()\n")
    assert body.stmts[0].marked is False


def test_marked_arguments_and_call_annotations():
    body = _body("f x y = (g !x 1) !y\n")
    assert isinstance(body, ast.App)
    assert body.annotations == ["y"]
    assert [a.marked for a in body.args] == [True, False]


def test_state_call():
    body = _body("f t =\n    !g t;\n    ()\n")
    call = body.stmts[0].expr
    assert isinstance(call, ast.App) and call.state_call


def test_cast_and_operators():
    body = _body("f x = (x + 2 * 3) :: Int\n")
    assert isinstance(body, ast.Cast)
    inner = body.expr
    assert isinstance(inner, ast.BinOp) and inner.op == "+"
    assert inner.right.op == "*"


def test_div_and_mod_are_multiplicative():
    body = _body("f x = x div 2 + x mod 3\n")
    assert body.op == "+"
    assert (body.left.op, body.right.op) == ("div", "mod")


def test_case_patterns():
    body = _body("f t =\n    case t of\n    | Node *l _ r -> r\n    | _ -> t\n")
    assert isinstance(body, ast.Case)
    first, second = body.arms
    assert first.pattern.ctor == "Node"
    assert [(b.name, b.deref) for b in first.pattern.binders] == [("l", True), (None, False), ("r", False)]
    assert second.pattern.ctor is None


def test_signature_with_sharing_clause():
    program = parse_source(
        "g :: Ref Int -> Int -> Int\n"
        "    sharing g !p x = r\n"
        "    pre nosharing\n"
        "    post r = inferred\n"
        "    implicit ro io\n"
    )
    clause = program.signatures["g"].clause
    assert [(p.name, p.mutable) for p in clause.params] == [("p", True), ("x", False)]
    assert clause.result_name == "r"
    assert clause.pre.kind == "nosharing"
    assert clause.post.kind == "inferred"
    assert clause.implicit_modes() == {"io": "ro"}


def test_declarations_of_every_kind():
    program = parse_source((CORPUS / "bst.pawns").read_text())
    assert set(program.data_decls) == {"BST"}
    assert set(program.type_aliases) == {"Ints"}
    assert program.renamings[0].bindings == [
        ("list_bst_concrete", "list_bst_pure"),
        ("bst_insert_concrete", "bst_insert_pure"),
    ]
    assert program.renamings[0].with_bindings == [("foldlBST", "foldl")]
    higher_order = program.signatures["foldl_du"].type.params[0]
    assert isinstance(higher_order, ast.TyArrow) and higher_order.clause is not None


def test_state_variable_declaration():
    program = parse_source("!nsum :: Ref Int\n")
    assert program.state_vars["nsum"].type == ast.TyCon("Ref", [ast.TyCon("Int")])


def test_parse_type():
    assert parse_type("List (Ref Int)") == ast.TyCon("List", [ast.TyCon("Ref", [ast.TyCon("Int")])])


def test_syntax_error_is_collected_per_declaration():
    errors = []
    program = parse_source("f x = (x\n\ng y = y\n", "bad.pawns", errors)
    assert [d.code for d in errors] == ["E001"]
    assert errors[0].span.line == 1
    assert "g" in program.defs


def test_syntax_error_raises_without_a_sink():
    with pytest.raises(PawnsSyntaxError):
        parse_source("f x = )\n")


def test_duplicate_definition_is_e103():
    with pytest.raises(ResolutionError):
        parse_source("f x = x\nf y = y\n")


@pytest.mark.parametrize("name", CORPUS_FILES)
def test_pretty_output_reparses_to_the_same_program(name):
    program = parse_source((CORPUS / name).read_text(), name)
    assert parse_source(pretty_program(program), name) == program


def test_declarations_start_in_column_one():
    program = parse_source("f x =\n  g\n     x\ng y = y\n")
    assert sorted(program.defs) == ["f", "g"]
    assert program.defs["f"].body == ast.App(ast.Var("g"), [ast.Arg(ast.Var("x"))])
