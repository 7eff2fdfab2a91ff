"""
Sharing domain: type folding and components.

A component is a class of memory cells of a type, named by the path of
(constructor, argument) steps leading to it. Recursive occurrences of a type
fold back to the earlier node on the same path, so each type has finitely
many components.
"""
from dataclasses import dataclass
from typing import Dict, Iterator, List, Optional, Tuple

from app.models.dataenv import DataEnv
from app.models.types import TArrow, TCon, TVar, Type, show_type

Step = Tuple[str, int]

REF_STEP: Step = ("*", 0)
# the single component of a value whose type is a type variable
OPAQUE_STEP: Step = ("?", 0)


def show_step(step: Step) -> str:
    if step == REF_STEP:
        return "*"
    if step == OPAQUE_STEP:
        return "?"
    return f"{step[0]}/{step[1]}"


@dataclass(frozen=True)
class Component:
    path: Tuple[Step, ...]
    cell_type: Type

    @property
    def terminal(self) -> Step:
        return self.path[-1]

    @property
    def is_ref_target(self) -> bool:
        return self.terminal == REF_STEP

    @property
    def is_opaque(self) -> bool:
        return self.terminal == OPAQUE_STEP

    def show(self) -> str:
        return ".".join(show_step(s) for s in self.path)

    def __str__(self) -> str:
        return self.show()


def alias_compatible(c1: Component, c2: Component) -> bool:
    """Cells may coincide only if equally typed and (a ref target or same enclosing constructor argument)"""
    if c1.cell_type != c2.cell_type:
        return False
    if c1.is_ref_target or c2.is_ref_target or c1.is_opaque or c2.is_opaque:
        return True
    return c1.terminal == c2.terminal


@dataclass
class _Node:
    type: Type
    path: Tuple[Step, ...]
    # edge that first reached this node
    incoming: Optional[Tuple[int, Step]] = None


class FoldedTypeGraph:
    """Nodes are folded type occurrences; each edge is one component"""

    def __init__(self, root: Type, env: DataEnv):
        self.root = root
        self.env = env
        self.nodes: List[_Node] = []
        self.edges: List[Dict[Step, int]] = []
        self._build()

    def _build(self) -> None:
        self.nodes.append(_Node(self.root, ()))
        self.edges.append({})
        if isinstance(self.root, TVar):
            self.edges[0][OPAQUE_STEP] = 0
            return
        self._expand(0, [0])

    def _expand(self, node: int, ancestors: List[int]) -> None:
        for step, child_type in self._children(self.nodes[node].type):
            target = next((a for a in ancestors if self.nodes[a].type == child_type), None)
            if target is None:
                target = len(self.nodes)
                self.nodes.append(_Node(child_type, self.nodes[node].path + (step,), (node, step)))
                self.edges.append({})
                self.edges[node][step] = target
                self._expand(target, ancestors + [target])
            else:
                self.edges[node][step] = target

    def _children(self, t: Type) -> Iterator[Tuple[Step, Type]]:
        if not isinstance(t, TCon):
            return
        if t.name == "Ref":
            yield REF_STEP, t.args[0]
            return
        for info in self.env.ctors_of(t.name):
            arg_types = self.env.ctor_arg_types(info.name, t)
            for i, arg in enumerate(arg_types, 1):
                yield (info.name, i), arg

    # ============ Components ============

    def component(self, node: int, step: Step) -> Component:
        target = self.edges[node][step]
        return Component(self.nodes[node].path + (step,), self.nodes[target].type)

    def components(self) -> List[Component]:
        """Canonical components in discovery order"""
        result = []
        for node in range(len(self.nodes)):
            for step in self.edges[node]:
                result.append(self.component(node, step))
        return result

    def node_at(self, path: Tuple[Step, ...]) -> Optional[int]:
        node = 0
        for step in path:
            if step not in self.edges[node]:
                return None
            node = self.edges[node][step]
        return node

    def translate(self, node: int, path: Tuple[Step, ...]) -> Optional[Component]:
        """
        Component of this graph reached by following `path` from `node`.

        `path` is a component path of the type at `node`; the opaque
        component of a type variable maps to the cell holding the value.
        """
        if path == (OPAQUE_STEP,):
            if OPAQUE_STEP in self.edges[node]:
                return self.component(node, OPAQUE_STEP)
            incoming = self.nodes[node].incoming
            return self.component(*incoming) if incoming else None
        current = node
        for step in path[:-1]:
            if step not in self.edges[current]:
                return None
            current = self.edges[current][step]
        if path[-1] not in self.edges[current]:
            return None
        return self.component(current, path[-1])


class SharingDomain:
    """Memoized folded graphs over one data environment"""

    def __init__(self, env: DataEnv):
        self.env = env
        self._graphs: Dict[Type, FoldedTypeGraph] = {}

    def graph(self, t: Type) -> FoldedTypeGraph:
        if isinstance(t, TArrow):
            t = TArrow(t.params, t.result)
        if t not in self._graphs:
            self._graphs[t] = FoldedTypeGraph(t, self.env)
        return self._graphs[t]

    def components(self, t: Type) -> List[Component]:
        if isinstance(t, TArrow):
            return []
        return self.graph(t).components()

    def canon(self, t: Type, path: Tuple[Step, ...]) -> Optional[Component]:
        """Canonical component of `t` for an arbitrary (possibly unfolded) path"""
        if not path:
            return None
        return self.graph(t).translate(0, path)


def fold_type(t: Type, env: DataEnv) -> FoldedTypeGraph:
    return FoldedTypeGraph(t, env)


def components_of(graph: FoldedTypeGraph) -> List[Component]:
    if isinstance(graph.root, TArrow):
        return []
    return graph.components()


def dump_components(t: Type, env: DataEnv) -> str:
    return "".join(f"{c.show()} :: {show_type(c.cell_type)}\n" for c in components_of(fold_type(t, env)))
