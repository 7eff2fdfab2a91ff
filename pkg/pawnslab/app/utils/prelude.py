"""
Built-in declarations shared by every program
"""
from functools import lru_cache
from typing import List

from app.core.errors import PawnsTypeError
from app.models import ast
from app.schemas.diagnostic import Diagnostic

PRELUDE_FILE = "<prelude>"

PRELUDE_SOURCE = """\
data Bool = False | True
data List t = Nil | Cons t (List t)
!io :: Ref ()
print_int :: Int -> ()
    implicit rw io
"""

# functions with a signature but no Pawns definition
PRIMITIVES = frozenset({"print_int"})

BUILTIN_TYPES = frozenset({"Int", "()", "Ref"})

ARITH_OPS = ("+", "-", "*", "div", "mod")
COMPARE_OPS = ("<=", "<", "==", ">=", ">")


@lru_cache()
def prelude_program() -> ast.Program:
    from app.services.parser import parse_source

    return parse_source(PRELUDE_SOURCE, PRELUDE_FILE)


def attach_prelude(program: ast.Program, errors: List[Diagnostic]) -> ast.Program:
    """
    Return a copy of `program` with the built-in declarations added.

    A user redeclaration of a built-in data type is accepted only when it
    matches the built-in one exactly.
    """
    prelude = prelude_program()
    merged = ast.Program(
        data_decls=dict(prelude.data_decls),
        type_aliases=dict(program.type_aliases),
        signatures=dict(prelude.signatures),
        state_vars=dict(prelude.state_vars),
        renamings=list(program.renamings),
        defs=dict(program.defs),
        renamed_from=dict(program.renamed_from),
        file=program.file,
    )
    for name, decl in program.data_decls.items():
        builtin = prelude.data_decls.get(name)
        if builtin is not None and builtin != decl:
            errors.append(PawnsTypeError(
                f"data {name} must match the built-in declaration", decl.span
            ).diagnostic)
            continue
        merged.data_decls[name] = decl
    for name, sig in program.signatures.items():
        if name in prelude.signatures:
            errors.append(PawnsTypeError(f"{name} is a built-in function", sig.span).diagnostic)
            continue
        merged.signatures[name] = sig
    for name, decl in program.state_vars.items():
        if name in prelude.state_vars:
            errors.append(PawnsTypeError(f"{name} is a built-in state variable", decl.span).diagnostic)
            continue
        merged.state_vars[name] = decl
    return merged
