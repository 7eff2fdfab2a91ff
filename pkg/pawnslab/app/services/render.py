"""
Diagnostic rendering
"""
from typing import Iterable, List

from app.schemas.diagnostic import Diagnostic


def render_diagnostic(d: Diagnostic, source: str) -> str:
    """
    Format a diagnostic as text:

        file:line:col: error E201: message
          <source line>
          ^^^^

    The excerpt is omitted when the span lies outside `source`.
    """
    span = d.span
    lines = [f"{span.file}:{span.line}:{span.column}: {d.severity} {d.code}: {d.message}"]
    lines.extend(_excerpt(source, span.line, span.column, span.length))
    for related in d.related_spans:
        lines.append(f"  note: see {related.file}:{related.line}:{related.column}")
    return "\n".join(lines) + "\n"


def render_all(diagnostics: Iterable[Diagnostic], source: str) -> str:
    return "".join(render_diagnostic(d, source) for d in diagnostics)


def _excerpt(source: str, line: int, column: int, length: int) -> List[str]:
    source_lines = source.splitlines()
    if not 1 <= line <= len(source_lines):
        return []
    text = source_lines[line - 1].replace("\t", " ").rstrip()
    width = max(1, min(length, len(text) - column + 1))
    return ["  " + text, "  " + " " * (column - 1) + "^" * width]
