import pytest

from app.models.dataenv import DataEnv
from app.models.types import TCon, fresh_var, list_of, ref
from app.services.parser import parse_source
from app.services.sharedom import (
    Component,
    SharingDomain,
    alias_compatible,
    dump_components,
    fold_type,
)
from app.utils.prelude import attach_prelude

DECLARATIONS = """\
type Ints = List Int
data Cord = Leaf Ints | Branch Cord Cord
data BST = Empty | Node BST Int BST
data Pair a b = Pair a b
"""

INT = TCon("Int")


@pytest.fixture(scope="module")
def env() -> DataEnv:
    return DataEnv.from_program(attach_prelude(parse_source(DECLARATIONS), []))


def _shown(t, env):
    return [c.show() for c in fold_type(t, env).components()]


def test_cord_components_in_discovery_order(env):
    assert _shown(TCon("Cord"), env) == [
        "Leaf/1", "Branch/1", "Branch/2", "Leaf/1.Cons/1", "Leaf/1.Cons/2",
    ]


@pytest.mark.parametrize(
    "t, count",
    [
        (TCon("BST"), 3),
        (list_of(INT), 2),
        (ref(list_of(INT)), 3),
        (INT, 0),
        (TCon("()"), 0),
        (TCon("Bool"), 0),
    ],
)
def test_component_counts(env, t, count):
    assert len(fold_type(t, env).components()) == count


def test_polymorphic_list_has_two_components(env):
    assert _shown(list_of(fresh_var()), env) == ["Cons/1", "Cons/2"]


def test_type_variable_is_one_opaque_component(env):
    assert _shown(fresh_var(), env) == ["?"]


def test_recursion_folds_to_the_ancestor(env):
    graph = fold_type(TCon("Cord"), env)
    assert graph.node_at((("Branch", 1), ("Branch", 2))) == 0
    leaf = graph.translate(0, (("Branch", 1), ("Leaf", 1), ("Cons", 2)))
    assert leaf.show() == "Leaf/1.Cons/2"


def test_cell_types(env):
    components = {c.show(): c.cell_type for c in fold_type(ref(list_of(INT)), env).components()}
    assert components == {"*": list_of(INT), "*.Cons/1": INT, "*.Cons/2": list_of(INT)}


def test_nested_instance_gets_its_own_nodes(env):
    t = TCon("Pair", (list_of(INT), list_of(INT)))
    assert _shown(t, env) == [
        "Pair/1", "Pair/2",
        "Pair/1.Cons/1", "Pair/1.Cons/2",
        "Pair/2.Cons/1", "Pair/2.Cons/2",
    ]


def test_alias_compatibility():
    cons2 = Component((("Cons", 2),), list_of(INT))
    other_cons2 = Component((("Leaf", 1), ("Cons", 2)), list_of(INT))
    leaf1 = Component((("Leaf", 1),), list_of(INT))
    target = Component((("*", 0),), list_of(INT))
    assert alias_compatible(cons2, other_cons2)
    assert not alias_compatible(cons2, leaf1)
    assert alias_compatible(target, leaf1)
    assert not alias_compatible(target, Component((("Cons", 1),), INT))


def test_domain_memoizes_graphs(env):
    domain = SharingDomain(env)
    assert domain.graph(TCon("Cord")) is domain.graph(TCon("Cord"))
    assert domain.canon(TCon("Cord"), (("Branch", 2), ("Leaf", 1))).show() == "Leaf/1"


def test_dump_components(env):
    assert dump_components(TCon("BST"), env) == "Node/1 :: BST\nNode/2 :: Int\nNode/3 :: BST\n"