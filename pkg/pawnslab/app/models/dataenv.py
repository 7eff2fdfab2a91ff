"""
Data environment: declared algebraic types, constructors and type aliases
in semantic form.
"""
from dataclasses import dataclass, field
from typing import Callable, Dict, List, Optional, Tuple

from app.core.errors import PawnsTypeError, ResolutionError
from app.models import ast
from app.models.types import TArrow, TCon, TVar, Type, fresh_var, substitute

# arity of the types that have no data declaration
PRIMITIVE_ARITY = {"Int": 0, "()": 0, "Ref": 1}


@dataclass(frozen=True)
class CtorInfo:
    name: str
    type_name: str
    params: Tuple[TVar, ...]
    args: Tuple[Type, ...]

    @property
    def arity(self) -> int:
        return len(self.args)


@dataclass
class DataType:
    name: str
    params: Tuple[TVar, ...]
    ctors: List[str] = field(default_factory=list)


class DataEnv:
    """Lookup tables built once per program from its data and type declarations"""

    def __init__(self):
        self.types: Dict[str, DataType] = {}
        self.ctors: Dict[str, CtorInfo] = {}
        self.aliases: Dict[str, ast.TypeAlias] = {}

    @classmethod
    def from_program(cls, program: ast.Program) -> "DataEnv":
        env = cls()
        env.aliases = dict(program.type_aliases)
        for decl in program.data_decls.values():
            params = tuple(fresh_var(p) for p in decl.params)
            env.types[decl.name] = DataType(decl.name, params, [c.name for c in decl.ctors])
        for decl in program.data_decls.values():
            data = env.types[decl.name]
            scope = {v.name: v for v in data.params}
            for ctor in decl.ctors:
                args = tuple(env.to_type(a, scope) for a in ctor.args)
                env.ctors[ctor.name] = CtorInfo(ctor.name, decl.name, data.params, args)
        return env

    # ============ Queries ============

    def arity(self, name: str) -> Optional[int]:
        if name in PRIMITIVE_ARITY:
            return PRIMITIVE_ARITY[name]
        if name in self.types:
            return len(self.types[name].params)
        if name in self.aliases:
            return len(self.aliases[name].params)
        return None

    def ctors_of(self, type_name: str) -> List[CtorInfo]:
        data = self.types.get(type_name)
        if data is None:
            return []
        return [self.ctors[c] for c in data.ctors]

    def ctor_arg_types(self, ctor: str, instance: Type) -> Tuple[Type, ...]:
        """Argument types of `ctor` when it builds a value of type `instance`"""
        info = self.ctors[ctor]
        if not isinstance(instance, TCon) or instance.name != info.type_name:
            return info.args
        mapping = dict(zip(info.params, instance.args))
        return tuple(substitute(a, mapping) for a in info.args)

    def instance(self, ctor: str) -> Tuple[TCon, Tuple[Type, ...]]:
        """Fresh instance of a constructor: (result type, argument types)"""
        info = self.ctors[ctor]
        mapping = {p: fresh_var() for p in info.params}
        result = TCon(info.type_name, tuple(mapping[p] for p in info.params))
        return result, tuple(substitute(a, mapping) for a in info.args)

    # ============ Conversion ============

    def to_type(
        self,
        texpr: ast.TypeExpr,
        scope: Dict[str, TVar],
        new_var: Optional[Callable[[str], TVar]] = None,
        depth: int = 0,
    ) -> Type:
        """
        Convert a syntactic type to a semantic one, expanding aliases.

        Type variables are looked up in `scope`; unknown ones are created
        with `new_var` (and added to the scope) or rejected.
        """
        if depth > 64:
            raise PawnsTypeError("type alias expansion does not terminate", texpr.span)
        if isinstance(texpr, ast.TyVar):
            if texpr.name not in scope:
                if new_var is None:
                    raise ResolutionError(f"unknown type variable {texpr.name}", texpr.span)
                scope[texpr.name] = new_var(texpr.name)
            return scope[texpr.name]
        if isinstance(texpr, ast.TyArrow):
            params = tuple(self.to_type(p, scope, new_var, depth) for p in texpr.params)
            result = self.to_type(texpr.result, scope, new_var, depth)
            return TArrow(params, result, texpr.clause)

        expected = self.arity(texpr.name)
        if expected is None:
            raise ResolutionError(f"unknown type {texpr.name}", texpr.span)
        if expected != len(texpr.args):
            raise PawnsTypeError(
                f"type {texpr.name} expects {expected} argument(s), given {len(texpr.args)}",
                texpr.span,
            )
        args = tuple(self.to_type(a, scope, new_var, depth) for a in texpr.args)
        alias = self.aliases.get(texpr.name)
        if alias is not None:
            alias_scope = {p: fresh_var(p) for p in alias.params}
            body = self.to_type(alias.body, dict(alias_scope), None, depth + 1)
            return substitute(body, {alias_scope[p]: a for p, a in zip(alias.params, args)})
        return TCon(texpr.name, args)
