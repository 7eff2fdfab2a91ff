import pytest

from app.core.errors import PawnsTypeError, ResolutionError
from app.models.dataenv import DataEnv
from app.models.types import INT, TCon, list_of, ref
from app.services.parser import parse_source
from app.services.sharedom import Component, SharingDomain
from app.services.sharing import (
    ABSTRACT,
    SharingRel,
    elaborate_signature,
    entails,
    rename_rel,
    show_point,
    violations,
)
from app.utils.prelude import attach_prelude

DECLARATIONS = """\
type Ints = List Int
data Cord = Leaf Ints | Branch Cord Cord
"""

CORD = TCon("Cord")
INTS = list_of(INT)


@pytest.fixture(scope="module")
def domain() -> SharingDomain:
    return SharingDomain(DataEnv.from_program(attach_prelude(parse_source(DECLARATIONS), [])))


def _clause(signature: str):
    program = parse_source(signature)
    return next(iter(program.signatures.values())).clause


def _shown(rel: SharingRel, keep=lambda p, q: True):
    return [f"{show_point(p)} ~ {show_point(q)}" for p, q in rel.pairs() if keep(p, q)]


def _between(a: str, b: str):
    return lambda p, q: {p[0], q[0]} == {a, b}


def test_constructor_equation(domain):
    clause = _clause(
        "list_cord :: Ints -> Cord\n"
        "    sharing list_cord xs = xc\n"
        "    pre nosharing\n"
        "    post xc = Leaf xs\n"
    )
    rels = elaborate_signature(clause, [INTS], CORD, domain)
    assert _shown(rels.pre) == []
    assert _shown(rels.post) == ["%1.Cons/1 ~ %r.Leaf/1.Cons/1", "%1.Cons/2 ~ %r.Leaf/1.Cons/2"]
    assert rels.param_names == ["xs"] and rels.result_name == "xc"


def test_missing_clause_is_maximal(domain):
    rels = elaborate_signature(None, [CORD, CORD], CORD, domain)
    assert _shown(rels.pre, _between("%1", "%2")) == [
        "%1.Branch/1 ~ %2.Branch/1",
        "%1.Branch/2 ~ %2.Branch/2",
        "%1.Leaf/1 ~ %2.Leaf/1",
        "%1.Leaf/1.Cons/1 ~ %2.Leaf/1.Cons/1",
        "%1.Leaf/1.Cons/2 ~ %2.Leaf/1.Cons/2",
    ]
    # every argument component may also be shared with abstract data
    assert len(_shown(rels.pre, lambda p, q: ABSTRACT in (p[0], q[0]))) == 10
    assert rels.mutable == (False, False)


def test_deref_term_and_mutability(domain):
    clause = _clause(
        "f :: Cord -> Ref Ints -> Ref Ints\n"
        "    sharing f !xc !np0 = np\n"
        "    pre xc = Leaf *np0\n"
        "    post np = np0\n"
    )
    rels = elaborate_signature(clause, [CORD, ref(INTS)], ref(INTS), domain)
    assert rels.mutable == (True, True)
    assert "%1.Leaf/1 ~ %2.*" in _shown(rels.pre)
    assert "%2.* ~ %r.*" in _shown(rels.post)


def test_abstract_term(domain):
    clause = _clause(
        "f :: Ints -> Cord\n"
        "    sharing f xs = t\n"
        "    pre xs = abstract\n"
        "    post t = abstract\n"
    )
    rels = elaborate_signature(clause, [INTS], CORD, domain)
    assert _shown(rels.pre) == ["%1.Cons/1 ~ abstract.Cons/1", "%1.Cons/2 ~ abstract.Cons/2"]
    assert not _shown(rels.post, _between("%1", "%r"))


def test_deref_of_non_ref_is_rejected(domain):
    clause = _clause("f :: Ints -> Ints\n    sharing f xs = ys\n    post ys = *xs\n")
    with pytest.raises(PawnsTypeError):
        elaborate_signature(clause, [INTS], INTS, domain)


def test_unknown_name_in_declaration(domain):
    clause = _clause("f :: Ints -> Ints\n    sharing f xs = ys\n    post ys = zs\n")
    with pytest.raises(ResolutionError):
        elaborate_signature(clause, [INTS], INTS, domain)


def test_pattern_arity_must_match(domain):
    clause = _clause("f :: Ints -> Ints -> Ints\n    sharing f xs = ys\n    pre nosharing\n")
    with pytest.raises(PawnsTypeError):
        elaborate_signature(clause, [INTS, INTS], INTS, domain)


def test_equations_need_a_pattern(domain):
    clause = _clause("f :: Ints -> Ints\n    post nosharing\n    pre xs = ys\n")
    with pytest.raises(ResolutionError):
        elaborate_signature(clause, [INTS], INTS, domain)


def _point(owner: str, *steps):
    return owner, Component(tuple(steps), INTS)


def test_entailment_over_selected_owners():
    computed, declared = SharingRel(), SharingRel()
    x, y, tmp = _point("x", ("Cons", 2)), _point("y", ("Cons", 2)), _point("$1", ("Cons", 2))
    computed.add(x, y)
    computed.add(x, tmp)
    assert not entails(computed, declared)
    assert violations(computed, declared, ["x", "y"]) == [(x, y)]
    declared.add(x, y)
    assert entails(computed, declared, ["x", "y"])
    assert not entails(computed, declared)


def test_add_with_copy_inherits_aliases():
    rel = SharingRel()
    a, b, c = _point("a", ("Cons", 2)), _point("b", ("Cons", 2)), _point("c", ("Cons", 2))
    rel.add(b, c)
    rel.add_with_copy(a, b)
    assert rel.aliases(a) == {b, c}


def test_rename_rel():
    rel = SharingRel()
    rel.add(_point("%1", ("Cons", 2)), _point("%r", ("Cons", 2)))
    renamed = rename_rel(rel, {"%1": "xs", "%r": "$result"})
    assert _shown(renamed, lambda p, q: True) == ["$result.Cons/2 ~ xs.Cons/2"]
