import pytest

from app.models import ast
from app.services.parser import parse_source
from app.services.renaming import expand_renamings
from tests.helpers import CORPUS


def _expand(source: str):
    errors = []
    program = expand_renamings(parse_source(source), errors)
    return program, errors


def _called(fn: ast.FunctionDef):
    return {n.name for n in ast.walk(fn.body) if isinstance(n, ast.Var)}


def test_group_copies_call_the_renamed_functions():
    program, errors = _expand((CORPUS / "bst.pawns").read_text())
    assert errors == []
    assert _called(program.defs["list_bst_concrete"]) == {"foldlBST", "bst_insert_concrete", "xs"}
    assert "bst_insert_concrete" in _called(program.defs["bst_insert_concrete"])
    assert "foldlBST" in _called(program.defs["foldlBST"])
    # the originals are untouched
    assert _called(program.defs["list_bst_pure"]) == {"foldl", "bst_insert_pure", "xs"}
    assert program.renamed_from["foldlBST"] == "foldl"


def test_signatures_are_copied_unless_declared():
    program, _ = _expand((CORPUS / "bst.pawns").read_text())
    copied = program.signatures["foldlBST"]
    assert copied.name == "foldlBST"
    assert copied.type == program.signatures["foldl"].type
    declared = program.signatures["bst_insert_concrete"].clause
    assert declared.post.kind == "equations"
    assert program.signatures["list_bst_concrete"].type == program.signatures["list_bst_pure"].type


def test_copied_sharing_pattern_is_renamed():
    program, errors = _expand(
        "f :: Ref Int -> ()\n"
        "    sharing f !p = v\n"
        "    pre nosharing\n"
        "    post nosharing\n"
        "f p = *!p := 1\n"
        "renaming g = f\n"
    )
    assert errors == []
    assert program.signatures["g"].clause.fn_name == "g"
    assert program.signatures["f"].clause.fn_name == "f"


def test_locals_shadowing_a_renamed_name_are_kept():
    program, _ = _expand(
        "f x = g x\n"
        "g y =\n"
        "    f = y;\n"
        "    f\n"
        "renaming f2 = f with g2 = g\n"
    )
    assert _called(program.defs["f2"]) == {"g2", "x"}
    assert _called(program.defs["g2"]) == {"f", "y"}


def test_expansion_is_idempotent():
    once, _ = _expand((CORPUS / "bst.pawns").read_text())
    errors = []
    again = expand_renamings(once, errors)
    assert errors == []
    assert again == once


def test_missing_source():
    _, errors = _expand("renaming g = nothing\n")
    assert [(d.code, d.message) for d in errors] == [("E103", "renaming source nothing has no definition")]


def test_cyclic_renaming():
    _, errors = _expand("renaming a = b\nrenaming b = a\n")
    assert [(d.code, d.message) for d in errors] == [("E103", "cyclic renaming: a -> b -> a")]


def test_chained_renaming():
    program, errors = _expand("f x = x\nrenaming g = f\nrenaming h = g\n")
    assert errors == []
    assert program.defs["h"].body == ast.Var("x")


def test_conflicting_definition():
    _, errors = _expand("f x = x\ng y = 0\nrenaming g = f\n")
    assert [d.message for d in errors] == ["g is both defined and introduced by a renaming"]


def test_renamed_twice():
    _, errors = _expand("f x = x\nrenaming g = f\nrenaming g = f\n")
    assert [d.message for d in errors] == ["g is renamed more than once"]


@pytest.mark.parametrize("body", [
    "    case b of\n"
    "    | Cons g _ -> g\n"
    "    | Nil -> g 0\n",
    "    { g = b; g };\n"
    "    g 0\n",
], ids=["case_arm", "block"])
def test_local_binding_is_scoped_to_its_arm_or_block(body):
    program, errors = _expand("f b =\n" + body + "g y = y\nrenaming f2 = f with g2 = g\n")
    assert errors == []
    assert _called(program.defs["f2"]) == {"b", "g", "g2"}
