"""
Check and run pipeline shared by the driver and the tests.

parse -> expand renamings -> attach prelude -> type check -> state
variables -> sharing analysis -> (run, only without errors)
"""
import io
import logging
from dataclasses import dataclass, field
from pathlib import Path
from typing import List, Optional, TextIO

from app.core.config import Settings, get_settings
from app.core.errors import PawnsRuntimeError, UsageError
from app.models import ast
from app.models.dataenv import DataEnv
from app.models.types import fresh_var
from app.schemas.diagnostic import Diagnostic, Span, sort_diagnostics
from app.services.interpreter import Interpreter, Value
from app.services.oracle import AliasOracle
from app.services.parser import parse_source, parse_type
from app.services.renaming import expand_renamings
from app.services.shareanalysis import SharingReport, analyze_sharing
from app.services.sharedom import dump_components
from app.services.statevars import check_state_vars
from app.services.typecheck import TypeCheckResult, check_types
from app.utils.prelude import attach_prelude

logger = logging.getLogger(__name__)


@dataclass
class CheckResult:
    source: str
    # renaming-expanded program as written (no prelude)
    expanded: ast.Program
    program: ast.Program
    types: Optional[TypeCheckResult] = None
    sharing: Optional[SharingReport] = None
    diagnostics: List[Diagnostic] = field(default_factory=list)

    @property
    def has_errors(self) -> bool:
        return any(d.is_error for d in self.diagnostics)


@dataclass
class RunResult:
    value: Optional[Value] = None
    stdout: str = ""
    diagnostics: List[Diagnostic] = field(default_factory=list)
    oracle: Optional[AliasOracle] = None
    interpreter: Optional[Interpreter] = None

    @property
    def ok(self) -> bool:
        if any(d.is_error for d in self.diagnostics):
            return False
        return self.oracle is None or not self.oracle.violations


def load_source(path: str, settings: Optional[Settings] = None) -> str:
    settings = settings or get_settings()
    file = Path(path)
    if file.suffix != settings.source_extension:
        logger.warning(f"[Driver] {path} does not have the {settings.source_extension} extension")
    try:
        return file.read_text(encoding="utf-8")
    except (OSError, UnicodeDecodeError) as e:
        raise UsageError(f"cannot read {path}: {e}")


def finish_diagnostics(diagnostics: List[Diagnostic], settings: Settings) -> List[Diagnostic]:
    """Promote warnings when asked, then sort and deduplicate"""
    if settings.deny_warnings:
        diagnostics = [
            d.model_copy(update={"severity": "error"}) if d.code == "W101" else d
            for d in diagnostics
        ]
    return sort_diagnostics(diagnostics)


def check_source(
    source: str,
    file: str = "<input>",
    settings: Optional[Settings] = None,
    stop_after: str = "sharing",
) -> CheckResult:
    """
    Run the static stages over one source text.

    `stop_after` is one of "parse", "types" or "sharing".
    """
    settings = settings or get_settings()
    diagnostics: List[Diagnostic] = []
    parsed = parse_source(source, file, diagnostics)
    expanded = expand_renamings(parsed, diagnostics)
    program = attach_prelude(expanded, diagnostics)
    result = CheckResult(source=source, expanded=expanded, program=program)

    if stop_after != "parse":
        result.types = check_types(program)
        diagnostics.extend(result.types.diagnostics)
        if stop_after == "sharing":
            diagnostics.extend(check_state_vars(program, result.types))
            result.sharing = analyze_sharing(program, result.types)
            diagnostics.extend(result.sharing.diagnostics)

    result.diagnostics = finish_diagnostics(diagnostics, settings)
    logger.info(f"[Driver] {file}: {len(result.diagnostics)} diagnostics")
    return result


def run_checked(result: CheckResult, settings: Optional[Settings] = None, out: Optional[TextIO] = None) -> RunResult:
    """Run `main` of a program that checked without errors"""
    settings = settings or get_settings()
    buffer = out if out is not None else io.StringIO()
    oracle = AliasOracle(result.sharing) if settings.oracle and result.sharing is not None else None
    interpreter = Interpreter(result.program, settings, buffer, oracle)
    run = RunResult(oracle=oracle, interpreter=interpreter)
    try:
        run.value = interpreter.run_main()
    except PawnsRuntimeError as e:
        span = e.span or Span(file=result.program.file)
        run.diagnostics.append(Diagnostic.error("R001", span, str(e)))
    if out is None:
        run.stdout = buffer.getvalue()
    return run


def components_report(result: CheckResult, type_text: str) -> str:
    """Components of a type written in the program's vocabulary"""
    texpr = parse_type(type_text, "<type>")
    env = DataEnv.from_program(result.program)
    t = env.to_type(texpr, {}, new_var=fresh_var)
    return dump_components(t, env)


def sharing_report(result: CheckResult, fn_name: str) -> str:
    fn = result.program.defs.get(fn_name)
    if fn is None:
        raise UsageError(f"no definition of {fn_name}")
    record = result.sharing.functions.get(fn_name) if result.sharing else None
    if record is None:
        return ""
    return record.dump(fn)
