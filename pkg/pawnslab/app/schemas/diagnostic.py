"""
Diagnostic Schemas
"""
from pydantic import BaseModel, ConfigDict, Field
from typing import List, Literal, Optional, Tuple


Severity = Literal["error", "warning"]

# Stable codes; explanations are shown by `render_diagnostic`
DIAGNOSTIC_CODES = {
    "E001": "syntax error",
    "E101": "type error",
    "E102": "bad cast",
    "E103": "unresolved name",
    "E201": "missing ! annotation",
    "E202": "precondition violation",
    "E203": "postcondition violation",
    "E204": "update of abstract-shared value",
    "E301": "state variable misuse",
    "E302": "missing ! on call with implicit state",
    "W101": "type instantiated by update",
    "R001": "runtime error",
}


class Span(BaseModel):
    """Source location: 1-based line and column, length in characters"""
    model_config = ConfigDict(frozen=True)

    file: str = "<input>"
    line: int = 1
    column: int = 1
    length: int = 1

    def sort_key(self) -> Tuple[str, int, int]:
        return (self.file, self.line, self.column)

    def to(self, other: "Span") -> "Span":
        """Span from the start of self to the end of other (same line only)"""
        if other.line != self.line:
            return self
        end = other.column + other.length
        return self.model_copy(update={"length": max(end - self.column, 1)})


class Diagnostic(BaseModel):
    code: str
    severity: Severity
    span: Span
    message: str
    related_spans: List[Span] = Field(default_factory=list, alias="relatedSpans")

    model_config = ConfigDict(populate_by_name=True)

    @classmethod
    def error(cls, code: str, span: Optional[Span], message: str) -> "Diagnostic":
        return cls(code=code, severity="error", span=span or Span(), message=message)

    @classmethod
    def warning(cls, code: str, span: Span, message: str) -> "Diagnostic":
        return cls(code=code, severity="warning", span=span, message=message)

    @property
    def is_error(self) -> bool:
        return self.severity == "error"

    def sort_key(self) -> Tuple[str, int, int, str, str]:
        return self.span.sort_key() + (self.code, self.message)


def sort_diagnostics(diagnostics: List[Diagnostic]) -> List[Diagnostic]:
    """Sort by span, then code and message; drop exact duplicates"""
    seen = set()
    result: List[Diagnostic] = []
    for d in sorted(diagnostics, key=lambda d: d.sort_key()):
        key = d.sort_key()
        if key in seen:
            continue
        seen.add(key)
        result.append(d)
    return result
