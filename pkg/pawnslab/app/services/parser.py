"""
Pawns Parser
Recursive-descent parser from tokens to a located Program.
A top-level declaration starts at a token in column 1 and runs up to the
next such token; a syntax error abandons only the declaration it occurs in.
"""
import logging
from typing import Callable, List, Optional, Tuple

from app.core.errors import PawnsError, PawnsSyntaxError, ResolutionError
from app.models import ast
from app.schemas.diagnostic import Diagnostic, Span
from app.services.lexer import Token, tokenize

logger = logging.getLogger(__name__)


CMP_OPS = ("<=", "<", "==", ">=", ">")
MUL_WORDS = ("div", "mod")
CLAUSE_KEYWORDS = ("sharing", "pre", "post", "implicit")
MODES = ("ro", "wo", "rw")


class _DeclParser:
    """Parser over the tokens of a single top-level declaration"""

    def __init__(self, tokens: List[Token]):
        self.tokens = tokens
        self.pos = 0

    # ============ Token helpers ============

    def peek(self, offset: int = 0) -> Optional[Token]:
        index = self.pos + offset
        return self.tokens[index] if index < len(self.tokens) else None

    def at_end(self) -> bool:
        return self.pos >= len(self.tokens)

    def next(self) -> Token:
        tok = self.peek()
        if tok is None:
            self.fail("unexpected end of declaration")
        self.pos += 1
        return tok

    def fail(self, message: str, tok: Optional[Token] = None):
        tok = tok or self.peek() or self.tokens[-1]
        raise PawnsSyntaxError(message, tok.span)

    def found(self) -> str:
        tok = self.peek()
        return "end of declaration" if tok is None else repr(tok.lexeme)

    def check_punct(self, lexeme: str, offset: int = 0) -> bool:
        tok = self.peek(offset)
        return tok is not None and tok.is_punct(lexeme)

    def check_keyword(self, lexeme: str) -> bool:
        tok = self.peek()
        return tok is not None and tok.is_keyword(lexeme)

    def check_kind(self, kind: str, offset: int = 0) -> bool:
        tok = self.peek(offset)
        return tok is not None and tok.kind == kind

    def expect_punct(self, lexeme: str) -> Token:
        if not self.check_punct(lexeme):
            self.fail(f"expected {lexeme!r} but found {self.found()}")
        return self.next()

    def expect_keyword(self, lexeme: str) -> Token:
        if not self.check_keyword(lexeme):
            self.fail(f"expected keyword {lexeme!r} but found {self.found()}")
        return self.next()

    def expect_kind(self, kind: str, what: str) -> Token:
        if not self.check_kind(kind):
            self.fail(f"expected {what} but found {self.found()}")
        return self.next()

    def expect_end(self) -> None:
        if not self.at_end():
            self.fail(f"unexpected token {self.found()}")

    def span_from(self, start: Token) -> Span:
        last = self.tokens[self.pos - 1] if self.pos > 0 else start
        return start.span.to(last.span)

    # ============ Declarations ============

    def declaration(self):
        first = self.peek()
        if first.is_keyword("data"):
            return self.data_decl()
        if first.is_keyword("type"):
            return self.type_alias()
        if first.is_keyword("renaming"):
            return self.renaming()
        if first.is_punct("!"):
            return self.state_var_decl()
        if first.kind == "ident" and self.check_punct("::", 1):
            return self.signature()
        if first.kind == "ident":
            return self.function_def()
        self.fail(f"expected a declaration but found {self.found()}")

    def data_decl(self) -> ast.DataDecl:
        start = self.expect_keyword("data")
        name = self.expect_kind("ctor", "a type name").lexeme
        params = []
        while self.check_kind("ident"):
            params.append(self.next().lexeme)
        self.expect_punct("=")
        ctors = [self.ctor_decl()]
        while self.check_punct("|"):
            self.next()
            ctors.append(self.ctor_decl())
        self.expect_end()
        return ast.DataDecl(name, params, ctors, span=self.span_from(start))

    def ctor_decl(self) -> ast.CtorDecl:
        tok = self.expect_kind("ctor", "a data constructor")
        args = []
        while self.starts_type_atom():
            args.append(self.type_atom())
        return ast.CtorDecl(tok.lexeme, args, span=self.span_from(tok))

    def type_alias(self) -> ast.TypeAlias:
        start = self.expect_keyword("type")
        name = self.expect_kind("ctor", "a type name").lexeme
        params = []
        while self.check_kind("ident"):
            params.append(self.next().lexeme)
        self.expect_punct("=")
        body = self.type_expr()
        self.expect_end()
        return ast.TypeAlias(name, params, body, span=self.span_from(start))

    def renaming(self) -> ast.RenamingDecl:
        start = self.expect_keyword("renaming")
        bindings = self.renaming_bindings()
        with_bindings: List[Tuple[str, str]] = []
        if self.check_keyword("with"):
            self.next()
            with_bindings = self.renaming_bindings()
        self.expect_end()
        if not bindings:
            self.fail("renaming needs at least one binding", start)
        return ast.RenamingDecl(bindings, with_bindings, span=start.span)

    def renaming_bindings(self) -> List[Tuple[str, str]]:
        bindings = []
        while self.check_kind("ident"):
            new = self.next().lexeme
            self.expect_punct("=")
            old = self.expect_kind("ident", "a function name").lexeme
            bindings.append((new, old))
        return bindings

    def state_var_decl(self) -> ast.StateVarDecl:
        start = self.expect_punct("!")
        name = self.expect_kind("ident", "a state variable name").lexeme
        self.expect_punct("::")
        type_ = self.type_expr()
        self.expect_end()
        return ast.StateVarDecl(name, type_, span=self.span_from(start))

    def signature(self) -> ast.Signature:
        start = self.next()
        self.expect_punct("::")
        type_ = self.type_expr(allow_clause=True)
        self.expect_end()
        if isinstance(type_, ast.TyArrow) and type_.clause and type_.clause.has_pattern:
            if type_.clause.fn_name != start.lexeme:
                self.fail(
                    f"sharing pattern names {type_.clause.fn_name!r}, expected {start.lexeme!r}",
                    start,
                )
        return ast.Signature(start.lexeme, type_, span=start.span)

    def function_def(self) -> ast.FunctionDef:
        start = self.next()
        params = []
        while self.check_kind("ident"):
            params.append(self.next().lexeme)
        self.expect_punct("=")
        body = self.seq(lambda: self.at_end())
        self.expect_end()
        return ast.FunctionDef(start.lexeme, params, body, span=start.span)

    # ============ Types ============

    def starts_type_atom(self) -> bool:
        tok = self.peek()
        return tok is not None and (tok.kind in ("ident", "ctor") or tok.is_punct("("))

    def type_expr(self, allow_clause: bool = False) -> ast.TypeExpr:
        start = self.peek()
        parts = [self.type_app()]
        while self.check_punct("->"):
            self.next()
            parts.append(self.type_app())
        if len(parts) == 1:
            if allow_clause and self.starts_clause():
                self.fail("sharing clauses need a function type")
            return parts[0]
        arrow = ast.TyArrow(parts[:-1], parts[-1], span=self.span_from(start))
        if allow_clause and self.starts_clause():
            arrow.clause = self.clause()
        return arrow

    def type_app(self) -> ast.TypeExpr:
        if self.check_kind("ctor"):
            tok = self.next()
            args = []
            while self.starts_type_atom():
                args.append(self.type_atom())
            return ast.TyCon(tok.lexeme, args, span=self.span_from(tok))
        return self.type_atom()

    def type_atom(self) -> ast.TypeExpr:
        tok = self.peek()
        if tok is None:
            self.fail("expected a type but found end of declaration")
        if tok.kind == "ident":
            self.next()
            return ast.TyVar(tok.lexeme, span=tok.span)
        if tok.kind == "ctor":
            self.next()
            return ast.TyCon(tok.lexeme, [], span=tok.span)
        if tok.is_punct("("):
            self.next()
            if self.check_punct(")"):
                self.next()
                return ast.TyCon("()", [], span=self.span_from(tok))
            inner = self.type_expr(allow_clause=True)
            self.expect_punct(")")
            return inner
        self.fail(f"expected a type but found {self.found()}")

    # ============ Sharing clauses ============

    def starts_clause(self) -> bool:
        tok = self.peek()
        return tok is not None and tok.kind == "keyword" and tok.lexeme in CLAUSE_KEYWORDS

    def clause(self) -> ast.SharingClause:
        start = self.peek()
        clause = ast.SharingClause()
        while self.starts_clause():
            tok = self.next()
            if tok.lexeme == "sharing":
                clause.fn_name = self.expect_kind("ident", "a function name").lexeme
                while self.check_kind("ident") or self.check_punct("!"):
                    mutable = False
                    if self.check_punct("!"):
                        self.next()
                        mutable = True
                    name_tok = self.expect_kind("ident", "a parameter name")
                    clause.params.append(ast.PatParam(name_tok.lexeme, mutable, span=name_tok.span))
                self.expect_punct("=")
                clause.result_name = self.expect_kind("ident", "a result name").lexeme
            elif tok.lexeme == "pre":
                clause.pre = self.sharing_decl(tok, allow_inferred=False)
            elif tok.lexeme == "post":
                clause.post = self.sharing_decl(tok, allow_inferred=True)
            else:
                clause.implicits.append(self.implicit())
                while self.check_punct(","):
                    self.next()
                    clause.implicits.append(self.implicit())
        clause.span = self.span_from(start)
        return clause

    def implicit(self) -> ast.Implicit:
        tok = self.peek()
        if tok is None or tok.kind != "keyword" or tok.lexeme not in MODES:
            self.fail(f"expected ro, wo or rw but found {self.found()}")
        self.next()
        var = self.expect_kind("ident", "a state variable name")
        return ast.Implicit(tok.lexeme, var.lexeme, span=tok.span.to(var.span))

    def sharing_decl(self, start: Token, allow_inferred: bool) -> ast.SharingDecl:
        if self.check_keyword("nosharing"):
            self.next()
            return ast.SharingDecl("nosharing", span=self.span_from(start))
        if self.check_keyword("inferred"):
            if not allow_inferred:
                self.fail("'inferred' is only allowed in a postcondition")
            self.next()
            return ast.SharingDecl("inferred", span=self.span_from(start))
        if (
            allow_inferred
            and self.check_kind("ident")
            and self.check_punct("=", 1)
            and self.peek(2) is not None
            and self.peek(2).is_keyword("inferred")
        ):
            # `post r = inferred`
            self.pos += 3
            return ast.SharingDecl("inferred", span=self.span_from(start))
        equations = [self.equation()]
        while self.check_punct(";"):
            self.next()
            equations.append(self.equation())
        return ast.SharingDecl("equations", equations, span=self.span_from(start))

    def equation(self) -> List[ast.DeclTerm]:
        terms = [self.decl_term()]
        if not self.check_punct("="):
            self.fail(f"expected '=' in sharing equation but found {self.found()}")
        while self.check_punct("="):
            self.next()
            if self.check_keyword("inferred"):
                self.fail("'inferred' must be the whole postcondition")
            terms.append(self.decl_term())
        return terms

    def decl_term(self) -> ast.DeclTerm:
        if self.check_kind("ctor"):
            tok = self.next()
            args = []
            while self.starts_decl_atom():
                args.append(self.decl_atom())
            return ast.DCtor(tok.lexeme, args, span=self.span_from(tok))
        return self.decl_atom()

    def starts_decl_atom(self) -> bool:
        tok = self.peek()
        if tok is None:
            return False
        return (
            tok.kind in ("ident", "ctor")
            or tok.is_keyword("abstract")
            or tok.is_punct("(")
            or (tok.is_punct("*") and self.check_kind("ident", 1))
        )

    def decl_atom(self) -> ast.DeclTerm:
        tok = self.next()
        if tok.kind == "ident":
            return ast.DVar(tok.lexeme, span=tok.span)
        if tok.kind == "ctor":
            return ast.DCtor(tok.lexeme, [], span=tok.span)
        if tok.is_keyword("abstract"):
            return ast.DAbstract(span=tok.span)
        if tok.is_punct("*"):
            name = self.expect_kind("ident", "a variable after '*'")
            return ast.DDeref(name.lexeme, span=tok.span.to(name.span))
        if tok.is_punct("("):
            term = self.decl_term()
            self.expect_punct(")")
            return term
        self.fail(f"unexpected {tok.lexeme!r} in sharing declaration", tok)

    # ============ Statements ============

    def seq(self, at_close: Callable[[], bool]) -> ast.Expr:
        start = self.peek()
        if start is None:
            self.fail("expected an expression but found end of declaration")
        stmts = [self.stmt()]
        while self.check_punct(";"):
            self.next()
            stmts.append(self.stmt())
        if not at_close():
            self.fail(f"expected ';' or end of block but found {self.found()}")
        if len(stmts) == 1 and isinstance(stmts[0], ast.ExprStmt):
            return stmts[0].expr
        return ast.Seq(stmts, span=self.span_from(start))

    def stmt(self) -> ast.Stmt:
        tok = self.peek()
        if tok is not None and tok.is_punct("*") and tok.prefix:
            if self.check_punct("!", 1) and self.check_kind("ident", 2) and self.check_punct(":=", 3):
                return self.update(marked=True)
            if self.check_kind("ident", 1) and self.check_punct(":=", 2):
                return self.update(marked=False)
            if self.check_kind("ident", 1) and self.check_punct("=", 2):
                self.next()
                name = self.next()
                self.next()
                expr = self.expr()
                return ast.RefBind(name.lexeme, expr, span=self.span_from(tok))
        if tok is not None and tok.kind == "ident" and self.check_punct("=", 1):
            self.next()
            self.next()
            expr = self.expr()
            return ast.Let(tok.lexeme, expr, span=self.span_from(tok))
        expr = self.expr()
        return ast.ExprStmt(expr, span=self.span_from(tok))

    def update(self, marked: bool) -> ast.Update:
        start = self.next()
        if marked:
            self.next()
        name = self.next()
        self.expect_punct(":=")
        expr = self.expr(allow_marks=False)
        annotations = self.annotations()
        return ast.Update(name.lexeme, marked, expr, annotations, span=self.span_from(start))

    def annotations(self) -> List[str]:
        names = []
        while self.check_punct("!") and self.check_kind("ident", 1):
            self.next()
            names.append(self.next().lexeme)
        return names

    # ============ Expressions ============

    def expr(self, allow_marks: bool = True) -> ast.Expr:
        tok = self.peek()
        if tok is not None and tok.is_keyword("case"):
            return self.case_expr()
        if tok is not None and tok.is_keyword("if"):
            self.next()
            cond = self.expr()
            self.expect_keyword("then")
            then = self.expr(allow_marks)
            self.expect_keyword("else")
            orelse = self.expr(allow_marks)
            return ast.If(cond, then, orelse, span=self.span_from(tok))
        inner = self.comparison(allow_marks)
        if self.check_punct("::"):
            self.next()
            type_ = self.type_expr()
            return ast.Cast(inner, type_, span=self.span_from(tok))
        return inner

    def case_expr(self) -> ast.Case:
        start = self.expect_keyword("case")
        scrutinee = self.expr()
        self.expect_keyword("of")
        arms = []
        if not self.check_punct("|"):
            self.fail(f"expected '|' to start a case arm but found {self.found()}")
        while self.check_punct("|"):
            bar = self.next()
            pattern = self.pattern()
            self.expect_punct("->")
            body = self.expr()
            arms.append(ast.Arm(pattern, body, span=self.span_from(bar)))
        return ast.Case(scrutinee, arms, span=self.span_from(start))

    def pattern(self) -> ast.Pattern:
        start = self.peek()
        if self.check_punct("("):
            self.next()
            pattern = self.pattern()
            self.expect_punct(")")
            return pattern
        if self.check_kind("ident") and self.peek().lexeme == "_":
            self.next()
            return ast.Pattern(None, [], span=start.span)
        ctor = self.expect_kind("ctor", "a constructor pattern")
        binders: List[ast.Binder] = []
        seen = set()
        while self.check_kind("ident") or self.check_punct("*"):
            tok = self.next()
            deref = tok.is_punct("*")
            name_tok = self.expect_kind("ident", "a binder after '*'") if deref else tok
            name = None if name_tok.lexeme == "_" else name_tok.lexeme
            if name is not None:
                if name in seen:
                    self.fail(f"binder {name!r} appears twice in one pattern", name_tok)
                seen.add(name)
            binders.append(ast.Binder(name, deref, span=tok.span.to(name_tok.span)))
        return ast.Pattern(ctor.lexeme, binders, span=self.span_from(start))

    def comparison(self, allow_marks: bool) -> ast.Expr:
        start = self.peek()
        left = self.additive(allow_marks)
        tok = self.peek()
        if tok is not None and tok.kind == "punct" and tok.lexeme in CMP_OPS:
            self.next()
            right = self.additive(allow_marks)
            return ast.BinOp(tok.lexeme, left, right, span=self.span_from(start))
        return left

    def additive(self, allow_marks: bool) -> ast.Expr:
        start = self.peek()
        left = self.multiplicative(allow_marks)
        while self.check_punct("+") or self.check_punct("-"):
            op = self.next().lexeme
            right = self.multiplicative(allow_marks)
            left = ast.BinOp(op, left, right, span=self.span_from(start))
        return left

    def multiplicative(self, allow_marks: bool) -> ast.Expr:
        start = self.peek()
        left = self.application(allow_marks)
        while True:
            tok = self.peek()
            if tok is None:
                return left
            if tok.is_punct("*") and not tok.prefix:
                op = "*"
            elif tok.kind == "ident" and tok.lexeme in MUL_WORDS:
                op = tok.lexeme
            else:
                return left
            self.next()
            right = self.application(allow_marks)
            left = ast.BinOp(op, left, right, span=self.span_from(start))

    def starts_atom(self) -> bool:
        tok = self.peek()
        if tok is None:
            return False
        if tok.kind == "ident":
            return tok.lexeme not in MUL_WORDS and tok.lexeme != "_"
        if tok.kind in ("ctor", "int"):
            return True
        if tok.is_punct("*"):
            return tok.prefix
        return tok.is_punct("(") or tok.is_punct("{")

    def application(self, allow_marks: bool) -> ast.Expr:
        start = self.peek()
        if start is not None and start.is_punct("!") and self.check_kind("ident", 1):
            self.next()
            name = self.next()
            head: ast.Expr = ast.Var(name.lexeme, span=name.span)
            args = self.arguments(allow_marks)
            return ast.App(head, args, [], True, span=self.span_from(start))

        if start is not None and start.kind == "ctor":
            self.next()
            args = []
            while self.starts_atom():
                args.append(self.atom())
            return ast.Ctor(start.lexeme, args, span=self.span_from(start))

        head = self.atom()
        if isinstance(head, ast.App) and start.is_punct("(") and allow_marks:
            annotations = self.annotations()
            if annotations:
                head.annotations.extend(annotations)
                head.span = self.span_from(start)
                return head
        if not isinstance(head, (ast.Var, ast.App)):
            return head
        args = self.arguments(allow_marks)
        if not args:
            return head
        return ast.App(head, args, span=self.span_from(start))

    def arguments(self, allow_marks: bool) -> List[ast.Arg]:
        args = []
        while True:
            if allow_marks and self.check_punct("!") and self.check_kind("ident", 1):
                bang = self.next()
                name = self.next()
                var = ast.Var(name.lexeme, span=name.span)
                args.append(ast.Arg(var, True, span=bang.span.to(name.span)))
            elif self.starts_atom():
                tok = self.peek()
                args.append(ast.Arg(self.atom(), False, span=self.span_from(tok)))
            else:
                return args

    def atom(self) -> ast.Expr:
        tok = self.next()
        if tok.kind == "ident":
            return ast.Var(tok.lexeme, span=tok.span)
        if tok.kind == "ctor":
            return ast.Ctor(tok.lexeme, [], span=tok.span)
        if tok.kind == "int":
            return ast.IntLit(int(tok.lexeme), span=tok.span)
        if tok.is_punct("*"):
            name = self.expect_kind("ident", "a variable after '*'")
            return ast.Deref(name.lexeme, span=tok.span.to(name.span))
        if tok.is_punct("("):
            if self.check_punct(")"):
                self.next()
                return ast.UnitLit(span=self.span_from(tok))
            inner = self.seq(lambda: self.check_punct(")"))
            self.expect_punct(")")
            return inner
        if tok.is_punct("{"):
            inner = self.seq(lambda: self.check_punct("}"))
            self.expect_punct("}")
            return inner
        self.fail(f"expected an expression but found {tok.lexeme!r}", tok)


# ============ Program assembly ============

def split_declarations(tokens: List[Token]) -> List[List[Token]]:
    """Group tokens into top-level declarations (a new one starts in column 1)"""
    groups: List[List[Token]] = []
    for tok in tokens:
        if tok.at_line_start or not groups:
            groups.append([])
        groups[-1].append(tok)
    return groups


def parse_program(
    tokens: List[Token],
    file: str = "<input>",
    errors: Optional[List[Diagnostic]] = None,
) -> ast.Program:
    """
    Parse a token sequence into a Program.

    Without an `errors` list the first problem is raised; with one, each
    faulty declaration contributes one diagnostic and parsing continues.
    """
    program = ast.Program(file=file)
    for group in split_declarations(tokens):
        try:
            decl = _DeclParser(group).declaration()
            _add_declaration(program, decl)
        except PawnsError as e:
            if errors is None:
                raise
            errors.append(e.diagnostic)
    logger.debug(f"[Parser] {file}: {len(program.defs)} definitions, {len(program.signatures)} signatures")
    return program


def parse_source(source: str, file: str = "<input>", errors: Optional[List[Diagnostic]] = None) -> ast.Program:
    """Tokenize then parse; a tokenizer error is raised or collected like a parse error"""
    try:
        tokens = tokenize(source, file)
    except PawnsSyntaxError as e:
        if errors is None:
            raise
        errors.append(e.diagnostic)
        return ast.Program(file=file)
    return parse_program(tokens, file, errors)


def _add_declaration(program: ast.Program, decl) -> None:
    if isinstance(decl, ast.DataDecl):
        if decl.name in program.data_decls or decl.name in program.type_aliases:
            raise ResolutionError(f"type {decl.name} is declared twice", decl.span)
        known = {c.name for d in program.data_decls.values() for c in d.ctors}
        for ctor in decl.ctors:
            if ctor.name in known:
                raise ResolutionError(f"data constructor {ctor.name} is declared twice", ctor.span)
            known.add(ctor.name)
        program.data_decls[decl.name] = decl
    elif isinstance(decl, ast.TypeAlias):
        if decl.name in program.data_decls or decl.name in program.type_aliases:
            raise ResolutionError(f"type {decl.name} is declared twice", decl.span)
        program.type_aliases[decl.name] = decl
    elif isinstance(decl, ast.Signature):
        if decl.name in program.signatures:
            raise ResolutionError(f"{decl.name} has more than one type signature", decl.span)
        if decl.name in program.state_vars:
            raise ResolutionError(f"{decl.name} is already a state variable", decl.span)
        program.signatures[decl.name] = decl
    elif isinstance(decl, ast.StateVarDecl):
        if decl.name in program.state_vars:
            raise ResolutionError(f"state variable {decl.name} is declared twice", decl.span)
        if decl.name in program.defs or decl.name in program.signatures:
            raise ResolutionError(f"state variable {decl.name} clashes with a function", decl.span)
        program.state_vars[decl.name] = decl
    elif isinstance(decl, ast.RenamingDecl):
        program.renamings.append(decl)
    elif isinstance(decl, ast.FunctionDef):
        if decl.name in program.defs:
            raise ResolutionError(f"{decl.name} is defined twice", decl.span)
        if decl.name in program.state_vars:
            raise ResolutionError(f"{decl.name} is already a state variable", decl.span)
        program.defs[decl.name] = decl


def parse_type(text: str, file: str = "<input>") -> ast.TypeExpr:
    """Parse a standalone type expression such as `List (Ref Int)`"""
    tokens = tokenize(text, file)
    if not tokens:
        raise PawnsSyntaxError("expected a type", Span(file=file))
    parser = _DeclParser(tokens)
    texpr = parser.type_expr()
    parser.expect_end()
    return texpr
