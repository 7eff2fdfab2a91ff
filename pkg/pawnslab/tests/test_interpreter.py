import io
import random

import pytest

from app.core.errors import PawnsRuntimeError
from app.models import ast
from app.services.interpreter import UNIT, Interpreter, to_python
from tests.helpers import codes, list_items, random_cord


@pytest.fixture
def interpreter(check, settings):
    """Interpreter over a checked program, writing to a throwaway buffer"""
    def _make(source: str, **overrides) -> Interpreter:
        result = check(source)
        return Interpreter(result.program, settings.model_copy(update=overrides), io.StringIO())
    return _make


def _inorder(tree):
    if tree == ("Empty",):
        return []
    _, left, n, right = tree
    return _inorder(left) + [n] + _inorder(right)


def test_four_bst_constructions_agree(interpreter, corpus_source):
    interp = interpreter(corpus_source("bst.pawns"))
    rng = random.Random(20240917)
    for _ in range(500):
        values = [rng.randint(-50, 50) for _ in range(rng.randint(0, 20))]
        xs = interp.list_value(values)
        pure = to_python(interp.call("list_bst_pure", [xs]), interp.heap)
        pointers = to_python(
            interp.call("foldl", [interp.function_value("bst_insert_pure_p"), interp.construct("Empty"), xs]),
            interp.heap,
        )
        destructive = to_python(interp.call("list_bst_du", [xs]), interp.heap)
        concrete = to_python(interp.call("list_bst_concrete", [xs]), interp.heap)
        assert pure == pointers == destructive == concrete
        assert _inorder(pure) == sorted(values)
        assert to_python(xs, interp.heap) == to_python(interp.list_value(values), interp.heap)


def test_cord_flattening_allocates_no_list_cells(interpreter, corpus_source):
    interp = interpreter(corpus_source("cord.pawns"))
    c1 = interp.call("list_cord", [interp.list_value([1, 2])])
    c2 = interp.call("cord_app_list", [c1, interp.list_value([3])])
    c3 = interp.call("cord_prep_list", [interp.list_value([0]), c2])
    c4 = interp.call("cord_app", [c3, interp.call("list_cord", [interp.list_value([4, 5])])])
    before = interp.heap.allocations["Cons"]
    flat = interp.call("cord_list", [c4])
    assert interp.heap.allocations["Cons"] == before
    expected = interp.list_value([0, 1, 2, 3, 4, 5])
    assert to_python(flat, interp.heap) == to_python(expected, interp.heap)


def test_random_cords_flatten_in_place(interpreter, corpus_source):
    interp = interpreter(corpus_source("cord.pawns"))
    rng = random.Random(1009)
    for _ in range(500):
        cord, items = random_cord(interp, rng)
        before = interp.heap.allocations["Cons"]
        flat = interp.call("cord_list", [cord])
        assert interp.heap.allocations["Cons"] == before
        assert list_items(to_python(flat, interp.heap)) == items


def test_bst_sum_with_nested_state(interpreter, corpus_source):
    interp = interpreter(corpus_source("bst_sum.pawns"))
    rng = random.Random(7)
    for _ in range(500):
        values = [rng.randint(0, 100) for _ in range(rng.randint(0, 15))]
        tree = interp.call("list_bst", [interp.list_value(values)])
        assert interp.call("bst_sum", [tree]) == sum(values)


def test_update_through_a_pattern_binder_is_in_place(interpreter):
    interp = interpreter(
        "set_head :: List Int -> ()\n"
        "    sharing set_head !xs = v\n"
        "    pre nosharing\n"
        "    post nosharing\n"
        "set_head xs =\n"
        "    case xs of\n"
        "    | Nil -> ()\n"
        "    | Cons *hp _ -> { *!hp := 99 !xs }\n"
    )
    xs = interp.list_value([1, 2])
    assert interp.call("set_head", [xs]) == UNIT
    assert to_python(xs, interp.heap) == ("Cons", 99, ("Cons", 2, ("Nil",)))


@pytest.mark.parametrize(
    "x, y, quotient, remainder",
    [(7, 2, 3, 1), (-7, 2, -3, -1), (7, -2, -3, 1), (-7, -2, 3, -1)],
)
def test_division_truncates_toward_zero(interpreter, x, y, quotient, remainder):
    interp = interpreter("quot x y = x div y\nrem x y = x mod y\n")
    assert interp.call("quot", [x, y]) == quotient
    assert interp.call("rem", [x, y]) == remainder


def test_division_by_zero(interpreter):
    interp = interpreter("quot x y = x div y\n")
    with pytest.raises(PawnsRuntimeError, match="division by zero"):
        interp.call("quot", [1, 0])


def test_arithmetic_wraps_at_64_bits(interpreter):
    interp = interpreter("dbl x = x + x\nsq x = x * x\n")
    assert interp.call("dbl", [1 << 62]) == -(1 << 63)
    assert interp.call("sq", [1 << 32]) == 0


def test_call_depth_limit(interpreter):
    interp = interpreter("spin x = spin x\n", max_call_depth=100)
    with pytest.raises(PawnsRuntimeError, match="call depth exceeded"):
        interp.call("spin", [1])


def test_partial_application_and_constants(run):
    result = run(
        "add x y = x + y\n"
        "twice f x = f (f x)\n"
        "ten = 10\n"
        "main :: () -> ()\n"
        "    implicit rw io\n"
        "main u =\n"
        "    !print_int (twice (add 3) ten);\n"
        "    !print_int ten\n"
    )
    assert result.ok
    assert result.stdout == "16\n10\n"


def test_print_int_through_io(run, corpus_source):
    assert run(corpus_source("ref_update.pawns")).stdout == "42\n43\n"
    assert run(corpus_source("bst_sum.pawns")).stdout == "21\n"


def test_non_exhaustive_case_is_r001(run):
    result = run(
        "main :: () -> ()\n"
        "    implicit rw io\n"
        "main u =\n"
        "    xs = Nil :: List Int;\n"
        "    case xs of\n"
        "    | Cons x _ -> !print_int x\n"
    )
    assert not result.ok
    assert codes(result.diagnostics) == ["R001"]
    assert result.diagnostics[0].message == "no case arm matches Nil"
    assert result.diagnostics[0].span.line == 5


def test_missing_main(interpreter):
    interp = interpreter("f x = x\n")
    with pytest.raises(PawnsRuntimeError, match="no main"):
        interp.run_main()


def test_expression_in_an_explicit_environment(interpreter):
    interp = interpreter("f x = x\n")
    total = ast.BinOp("+", ast.Var("x"), ast.IntLit(1))
    assert interp.eval_expr(total, {"x": (1 << 63) - 1}) == -(1 << 63)
    cell = ast.Ctor("Cons", [ast.Var("x"), ast.Ctor("Nil")])
    assert to_python(interp.eval_expr(cell, {"x": 4}), interp.heap) == ("Cons", 4, ("Nil",))
    assert interp.eval_expr(ast.App(ast.Var("f"), [ast.Arg(ast.IntLit(3), False)]), {}) == 3
