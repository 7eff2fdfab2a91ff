import logging

import pytest

from app.models import ast
from app.services.pipeline import sharing_report
from app.services.shareanalysis import SharingAnalyzer, statements_of
from app.services.sharing import entails
from tests.helpers import codes, messages

CLEAN = ["bst.pawns", "bst_sum.pawns", "cord.pawns", "ref_update.pawns"]

INC = """\
inc :: Ref Int -> ()
    sharing inc !p = v
    pre nosharing
    post nosharing
inc p = *!p := *p + 1
"""


@pytest.mark.parametrize("name", CLEAN)
def test_corpus_programs_check_cleanly(check, corpus_source, name):
    result = check(corpus_source(name), name)
    assert result.diagnostics == []


def test_update_of_a_live_unannotated_alias(check, corpus_source):
    result = check(corpus_source("ref_update_unannotated.pawns"), "ref_update_unannotated.pawns")
    assert messages(result.diagnostics, "E201") == ["yp may be affected by this update but not annotated with !"]
    assert (result.diagnostics[0].span.line, result.diagnostics[0].span.column) == (8, 5)


def test_dead_alias_needs_no_annotation(check):
    result = check(
        "main :: () -> ()\n"
        "    implicit rw io\n"
        "main u =\n"
        "    *xp = 1;\n"
        "    yp = xp;\n"
        "    y = *yp;\n"
        "    *!xp := 2;\n"
        "    !print_int y\n"
    )
    assert result.diagnostics == []


def test_extra_annotations_are_accepted(check):
    result = check(
        "main :: () -> ()\n"
        "    implicit rw io\n"
        "main u =\n"
        "    *xp = 1;\n"
        "    z = 5;\n"
        "    *!xp := 2 !z;\n"
        "    !print_int *xp\n"
    )
    assert result.diagnostics == []


def test_unmarked_update(check):
    result = check(
        "bump :: Ref Int -> ()\n"
        "    sharing bump !p = v\n"
        "    pre nosharing\n"
        "    post nosharing\n"
        "bump p = *p := 2\n"
    )
    assert messages(result.diagnostics, "E201") == ["update of p must be marked: write *!p := ..."]


def test_update_of_a_parameter_not_declared_mutable(check):
    result = check("bump :: Ref Int -> ()\nbump p = *!p := 2\n")
    assert messages(result.diagnostics, "E201") == [
        "parameter p may be updated by this update but is not declared mutable (!p) in the sharing pattern of bump"
    ]


def test_mutable_argument_must_be_marked(check):
    result = check(
        INC +
        "\n"
        "f :: () -> Int\n"
        "f u =\n"
        "    *q = 1;\n"
        "    inc q;\n"
        "    *q\n"
    )
    assert messages(result.diagnostics, "E201") == ["argument 1 of inc may be updated and must be marked !q"]


def test_marked_mutable_argument(check):
    result = check(
        INC +
        "\n"
        "f :: () -> Int\n"
        "f u =\n"
        "    *q = 1;\n"
        "    inc !q;\n"
        "    *q\n"
    )
    assert result.diagnostics == []


def test_precondition_violation(check, corpus_source):
    result = check(corpus_source("cord_precondition.pawns"), "cord_precondition.pawns")
    assert codes(result.diagnostics) == ["E202"]
    assert result.diagnostics[0].message == (
        "call of cord_app_list violates its precondition: xc.Leaf/1.Cons/1 may share with xs.Cons/1"
    )


def test_postcondition_violation(check):
    result = check(
        "type Ints = List Int\n"
        "id_ints :: Ints -> Ints\n"
        "    sharing id_ints xs = ys\n"
        "    pre nosharing\n"
        "    post nosharing\n"
        "id_ints xs = xs\n"
    )
    assert messages(result.diagnostics, "E203") == [
        "id_ints may return sharing not allowed by its postcondition: result.Cons/1 ~ xs.Cons/1"
    ]


def test_update_of_abstract_data(check, corpus_source):
    result = check(corpus_source("abstract_update.pawns"), "abstract_update.pawns")
    assert codes(result.diagnostics) == ["E204"]
    assert (result.diagnostics[0].span.line, result.diagnostics[0].span.column) == (46, 27)


def test_inferred_postcondition(check, corpus_source):
    result = check(corpus_source("cord.pawns"), "cord.pawns")
    inferred = result.sharing.functions["cord_app_list"].inferred_post
    assert inferred.kind == "equations"
    assert inferred.equations == [[
        ast.DVar("xc1"),
        ast.DCtor("Branch", [ast.DVar("xc"), ast.DCtor("Leaf", [ast.DVar("xs")])]),
    ]]


def test_inference_needs_a_call_free_body(check):
    result = check(
        "type Ints = List Int\n"
        "g :: Ints -> Ints\n"
        "g xs = xs\n"
        "f :: Ints -> Ints\n"
        "    sharing f xs = ys\n"
        "    pre nosharing\n"
        "    post ys = inferred\n"
        "f xs = g xs\n"
    )
    assert messages(result.diagnostics, "E203") == ["post inferred for f needs definitions with calls or updates"]


def test_function_argument_with_unexpected_implicits(check):
    result = check(
        "call_it :: (Int -> ()) -> Int -> ()\n"
        "call_it f x = f x\n"
        "\n"
        "show_it :: Int -> ()\n"
        "    implicit rw io\n"
        "show_it x = !print_int x\n"
        "\n"
        "main :: () -> ()\n"
        "    implicit rw io\n"
        "main u = call_it show_it 3\n"
    )
    assert messages(result.diagnostics, "E202") == [
        "show_it cannot be passed as argument 1 of call_it: implicit rw io is not permitted"
    ]


def test_sharing_dump(check, corpus_source):
    result = check(corpus_source("ref_update.pawns"), "ref_update.pawns")
    dump = sharing_report(result, "main")
    assert "xp.* ~ yp.*" in dump.splitlines()[-1]
    assert dump.splitlines()[0].startswith("[")


def test_dead_alias_in_a_signed_function(check):
    result = check(
        "g :: Int -> Int\n"
        "g n =\n"
        "    *p = n;\n"
        "    q = p;\n"
        "    *!p := 1;\n"
        "    *p\n"
    )
    assert result.diagnostics == []


CORD_TYPES = "type Ints = List Int\ndata Cord = Leaf Ints | Branch Cord Cord\n\n"


@pytest.mark.parametrize("definition", [
    "cord_app_list :: Cord -> Ints -> Cord\n"
    "    sharing cord_app_list xc xs = xc1\n"
    "    pre nosharing\n"
    "    post xc1 = Branch xc (Leaf xs)\n"
    "cord_app_list xc xs = Branch xc (Leaf xs)\n",
    "cord_app :: Cord -> Cord -> Cord\n"
    "    sharing cord_app xc1 xc2 = xc\n"
    "    pre nosharing\n"
    "    post xc = Branch xc1 xc2\n"
    "cord_app xc1 xc2 = Branch xc1 xc2\n",
], ids=["cord_app_list", "cord_app"])
def test_sources_of_a_constructor_stay_apart(check, definition):
    result = check(CORD_TYPES + definition)
    assert result.diagnostics == []


@pytest.mark.parametrize("name, before, after", [
    ("bst.pawns", "foldl_du bst_insert_du !tp xs", "foldl_du bst_insert_du tp xs"),
    ("bst.pawns", "{ *!tp := Node Empty x Empty }", "{ *tp := Node Empty x Empty }"),
    ("bst.pawns", "(bst_insert_du !lp x) !tp", "(bst_insert_du lp x) !tp"),
    ("bst.pawns", "(bst_insert_du !rp x) !tp", "(bst_insert_du !rp x)"),
    ("bst.pawns", "{ f !y x;", "{ f y x;"),
    ("bst.pawns", "foldl_du f !y xs1", "foldl_du f y xs1"),
    ("bst.pawns", "sharing foldl_du f !xtp1 xs", "sharing foldl_du f xtp1 xs"),
    ("bst.pawns", "sharing bst_insert_du !tp x", "sharing bst_insert_du tp x"),
    ("cord.pawns", "sharing cord_list !xc = xs", "sharing cord_list xc = xs"),
    ("cord.pawns", "cord_list_a !xc !xsp", "cord_list_a xc !xsp"),
    ("cord.pawns", "cord_list_a !xc !xsp", "cord_list_a !xc xsp"),
    ("cord.pawns", "*!np := xs !xc!xs", "*np := xs !xc!xs"),
    ("cord.pawns", "*!np := xs !xc!xs", "*!np := xs !xs"),
    ("cord.pawns", "(cord_list_a !xc1 !np) !xc!xc2", "(cord_list_a !xc1 !np) !xc"),
    ("cord.pawns", "(cord_list_a !xc1 !np) !xc!xc2", "(cord_list_a !xc1 !np) !xc2"),
    ("cord.pawns", "(cord_list_a !xc2 !np1) !xc!np", "(cord_list_a !xc2 !np1) !xc"),
    ("cord.pawns", "(cord_list_a !xc2 !np1) !xc!np", "(cord_list_a !xc2 !np1) !np"),
    ("cord.pawns", "(cord_list !c4)", "(cord_list c4)"),
    ("ref_update.pawns", "*!xp := 43 !yp", "*!xp := 43"),
    ("ref_update.pawns", "*!xp := 43 !yp", "*xp := 43 !yp"),
    ("bst_sum.pawns", "*!nsum := *nsum + n", "*nsum := *nsum + n"),
])
def test_each_required_bang_is_enforced(check, corpus_source, name, before, after):
    source = corpus_source(name)
    assert source.count(before) == 1
    result = check(source.replace(before, after), name)
    assert codes(result.diagnostics) == ["E201"]


def test_inferred_and_declared_postconditions_agree(check, corpus_source):
    source = corpus_source("cord.pawns").replace("    post xc = Leaf xs\nlist_cord", "    post xc = inferred\nlist_cord")
    result = check(source, "cord.pawns")
    assert result.diagnostics == []
    analyzer = SharingAnalyzer(result.program, result.types)
    analyzer.analyze_program()
    for name, declared in [
        ("list_cord", [ast.DVar("xc"), ast.DCtor("Leaf", [ast.DVar("xs")])]),
        ("cord_app_list", [ast.DVar("xc1"), ast.DCtor("Branch", [ast.DVar("xc"), ast.DCtor("Leaf", [ast.DVar("xs")])])]),
    ]:
        fn = result.program.defs[name]
        inferred = analyzer.inferred[name]
        assert inferred.equations == [declared]
        owners = set(fn.params) | {"$result"}
        a = analyzer.elaborate_post(fn, inferred)
        b = analyzer.elaborate_post(fn, ast.SharingDecl("equations", [declared]))
        assert entails(a, b, owners) and entails(b, a, owners)
        assert analyzer.entails_declaration(analyzer.report.functions[name].exit_rel, fn, inferred)


@pytest.mark.parametrize("name", CLEAN)
def test_each_statement_is_analyzed_once(check, corpus_source, name):
    result = check(corpus_source(name), name)
    for fn_name, record in result.sharing.functions.items():
        assert record.statements_analyzed == len(statements_of(result.program.defs[fn_name]))


def test_analysis_logs_a_summary(check, caplog):
    with caplog.at_level(logging.INFO, logger="app.services.shareanalysis"):
        check(INC)
    summaries = [r for r in caplog.records if r.getMessage().startswith("[Sharing] analyzed ")]
    assert len(summaries) == 1
    assert summaries[0].getMessage().endswith(" definitions, 0 diagnostics")
    assert not summaries[0].args
