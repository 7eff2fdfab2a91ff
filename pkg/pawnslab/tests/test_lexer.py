import pytest

from app.core.errors import PawnsSyntaxError
from app.services.lexer import tokenize


def test_longest_punctuation_wins():
    tokens = tokenize("x :: Int := y == z -> w")
    assert [t.lexeme for t in tokens if t.kind == "punct"] == ["::", ":=", "==", "->"]


def test_keywords_and_names():
    tokens = tokenize("case xs of | Nil -> y'")
    assert [(t.kind, t.lexeme) for t in tokens] == [
        ("keyword", "case"),
        ("ident", "xs"),
        ("keyword", "of"),
        ("punct", "|"),
        ("ctor", "Nil"),
        ("punct", "->"),
        ("ident", "y'"),
    ]


def test_prefix_star_is_told_apart_from_multiplication():
    deref, times = tokenize("*xp"), tokenize("a * b")
    assert deref[0].prefix is True
    assert times[1].prefix is False
    glued = tokenize("n*m")
    assert glued[1].prefix is False


def test_comments_and_spans():
    tokens = tokenize("-- header\n  foo 12 -- trailing\n", "f.pawns")
    assert [t.lexeme for t in tokens] == ["foo", "12"]
    assert tokens[0].span.line == 2
    assert tokens[0].span.column == 3
    assert tokens[1].span.column == 7
    assert tokens[1].span.length == 2
    assert tokens[0].span.file == "f.pawns"


def test_column_one_marks_a_declaration_start():
    tokens = tokenize("f x =\n    x\n")
    assert tokens[0].at_line_start
    assert not tokens[-1].at_line_start


def test_illegal_character_is_e001():
    with pytest.raises(PawnsSyntaxError) as excinfo:
        tokenize("x = 1\ny = #\n")
    diagnostic = excinfo.value.diagnostic
    assert diagnostic.code == "E001"
    assert (diagnostic.span.line, diagnostic.span.column) == (2, 5)
