from pathlib import Path
from typing import List

from app.schemas.diagnostic import Diagnostic

CORPUS = Path(__file__).parent.parent / "corpus"


def codes(diagnostics: List[Diagnostic]) -> List[str]:
    return [d.code for d in diagnostics]


def messages(diagnostics: List[Diagnostic], code: str) -> List[str]:
    return [d.message for d in diagnostics if d.code == code]


def random_cord(interp, rng, depth: int = 4):
    """
    Build a cord through the cord functions of the corpus, with a fresh
    list for every leaf. Returns the cord and its items in order.
    """
    if depth == 0 or rng.random() < 0.3:
        items = [rng.randint(-9, 9) for _ in range(rng.randint(0, 4))]
        return interp.call("list_cord", [interp.list_value(items)]), items
    left, left_items = random_cord(interp, rng, depth - 1)
    pick = rng.randrange(3)
    if pick == 0:
        right, right_items = random_cord(interp, rng, depth - 1)
        return interp.call("cord_app", [left, right]), left_items + right_items
    items = [rng.randint(-9, 9) for _ in range(rng.randint(0, 4))]
    if pick == 1:
        return interp.call("cord_app_list", [left, interp.list_value(items)]), left_items + items
    return interp.call("cord_prep_list", [interp.list_value(items), left]), items + left_items


def list_items(value) -> List:
    """Items of a list already converted by `to_python`"""
    items = []
    while value[0] == "Cons":
        items.append(value[1])
        value = value[2]
    return items
