"""
Pawns Tokenizer
Splits Pawns source into located tokens. `--` comments and whitespace are
skipped; every other character belongs to exactly one token or raises E001.
"""
import logging
import re
from dataclasses import dataclass
from typing import List

from app.core.errors import PawnsSyntaxError
from app.schemas.diagnostic import Span

logger = logging.getLogger(__name__)


KEYWORDS = frozenset({
    "data", "type", "case", "of", "if", "then", "else", "sharing", "pre",
    "post", "nosharing", "implicit", "ro", "wo", "rw", "renaming", "with",
    "abstract", "inferred",
})

# longest first so `::` wins over `:` and `:=` over `=`
PUNCTUATION = (
    "::", ":=", "->", "<=", ">=", "==",
    "=", "<", ">", "+", "-", "*", "!", ";", "|", "(", ")", "{", "}", ",",
)

_IDENT = re.compile(r"[a-z_][A-Za-z0-9_']*")
_CTOR = re.compile(r"[A-Z][A-Za-z0-9_']*")
_INT = re.compile(r"[0-9]+")


@dataclass(frozen=True)
class Token:
    kind: str  # "ident" | "ctor" | "int" | "keyword" | "punct"
    lexeme: str
    span: Span
    # `*` written as a prefix (dereference / ref binder) rather than multiplication
    prefix: bool = False

    @property
    def at_line_start(self) -> bool:
        return self.span.column == 1

    def is_punct(self, lexeme: str) -> bool:
        return self.kind == "punct" and self.lexeme == lexeme

    def is_keyword(self, lexeme: str) -> bool:
        return self.kind == "keyword" and self.lexeme == lexeme

    def __str__(self) -> str:
        return self.lexeme


def tokenize(source: str, file: str = "<input>") -> List[Token]:
    """Tokenize Pawns source; raises PawnsSyntaxError (E001) on an illegal character"""
    tokens: List[Token] = []
    pos = 0
    line = 1
    line_start = 0
    length = len(source)

    while pos < length:
        ch = source[pos]

        if ch == "\n":
            pos += 1
            line += 1
            line_start = pos
            continue
        if ch in " \t\r":
            pos += 1
            continue
        if source.startswith("--", pos):
            end = source.find("\n", pos)
            pos = length if end < 0 else end
            continue

        column = pos - line_start + 1
        kind = None
        lexeme = ""
        for pattern, pattern_kind in ((_IDENT, "ident"), (_CTOR, "ctor"), (_INT, "int")):
            match = pattern.match(source, pos)
            if match:
                lexeme = match.group(0)
                kind = pattern_kind
                break

        if kind == "ident" and lexeme in KEYWORDS:
            kind = "keyword"

        if kind is None:
            for punct in PUNCTUATION:
                if source.startswith(punct, pos):
                    kind, lexeme = "punct", punct
                    break

        if kind is None:
            span = Span(file=file, line=line, column=column, length=1)
            raise PawnsSyntaxError(f"illegal character {ch!r}", span)

        span = Span(file=file, line=line, column=column, length=len(lexeme))
        prefix = False
        if lexeme == "*":
            prefix = _is_prefix_star(source, pos)
        tokens.append(Token(kind, lexeme, span, prefix))
        pos += len(lexeme)

    logger.debug(f"[Lexer] {file}: {len(tokens)} tokens")
    return tokens


def _is_prefix_star(source: str, pos: int) -> bool:
    """`*` glued to a following name/`!`/`(` and not glued to a preceding operand"""
    following = source[pos + 1] if pos + 1 < len(source) else ""
    if not (following.isalpha() or following in "_!("):
        return False
    preceding = source[pos - 1] if pos > 0 else " "
    return not (preceding.isalnum() or preceding in "_')}")
