"""
pawnslab command line driver

    python main.py check FILE [--deny-warnings] [--max-errors N]
    python main.py run FILE [--oracle]
    python main.py dump-ast FILE
    python main.py dump-types FILE
    python main.py dump-sharing FILE FUNCTION
    python main.py dump-components FILE TYPE

Exit codes: 0 success, 1 diagnostics with errors (or a runtime error or
oracle violation), 2 usage or input failure.
"""
import argparse
import sys
from pathlib import Path
from typing import List, Optional, TextIO

# Add this directory to path for `app` imports
sys.path.insert(0, str(Path(__file__).parent))

from dotenv import load_dotenv

load_dotenv(Path(__file__).parent.parent / ".env")

from pydantic import ValidationError

from app.core.config import Settings, get_settings
from app.core.errors import PawnsError, UsageError
from app.core.logger import configure_logging
from app.schemas.diagnostic import Diagnostic
from app.schemas.invocation import Invocation
from app.services.pipeline import (
    check_source,
    components_report,
    load_source,
    run_checked,
    sharing_report,
)
from app.services.render import render_all
from app.utils.pretty import pretty_program

EXIT_OK = 0
EXIT_ERRORS = 1
EXIT_USAGE = 2


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="pawnslab", description="Pawns checker and interpreter")
    commands = parser.add_subparsers(dest="command", required=True)

    def command(name: str, help_text: str) -> argparse.ArgumentParser:
        sub = commands.add_parser(name, help=help_text)
        sub.add_argument("input_path", metavar="FILE")
        sub.add_argument("--deny-warnings", action="store_true", help="Treat W101 as an error")
        sub.add_argument("--max-errors", type=int, default=None, help="Print at most N diagnostics")
        return sub

    command("check", "Type, sharing and state variable checks")
    run = command("run", "Check, then run main")
    run.add_argument("--oracle", action="store_true", help="Validate sharing at run time")
    command("dump-ast", "Print the renaming-expanded program")
    command("dump-types", "Print the inferred types of all definitions")
    command("dump-sharing", "Print the sharing at each statement of a function").add_argument(
        "target", metavar="FUNCTION"
    )
    command("dump-components", "Print the components of a type").add_argument("target", metavar="TYPE")
    return parser


def parse_invocation(argv: Optional[List[str]]) -> Invocation:
    args = build_parser().parse_args(argv)
    values = {
        "command": args.command,
        "input_path": args.input_path,
        "target": getattr(args, "target", None),
        "oracle": getattr(args, "oracle", False),
        "deny_warnings": args.deny_warnings,
    }
    if args.max_errors is not None:
        values["max_errors"] = args.max_errors
    try:
        return Invocation(**values)
    except ValidationError as e:
        raise UsageError(f"invalid arguments: {e.errors()[0]['msg']}")


def settings_for(invocation: Invocation) -> Settings:
    """Cached settings with this invocation's flags applied"""
    settings = get_settings()
    update = {}
    if invocation.deny_warnings:
        update["deny_warnings"] = True
    if invocation.oracle:
        update["oracle"] = True
    if "max_errors" in invocation.model_fields_set:
        update["max_errors"] = invocation.max_errors
    return settings.model_copy(update=update)


def report(diagnostics: List[Diagnostic], source: str, settings: Settings, err: TextIO) -> None:
    err.write(render_all(diagnostics[:settings.max_errors], source))


def execute(invocation: Invocation, settings: Settings, out: TextIO, err: TextIO) -> int:
    source = load_source(invocation.input_path, settings)
    file = invocation.input_path
    stop_after = {
        "dump-ast": "parse", "dump-components": "parse", "dump-types": "types",
    }.get(invocation.command, "sharing")
    result = check_source(source, file, settings, stop_after=stop_after)
    failed = result.has_errors

    if invocation.command == "dump-ast":
        out.write(pretty_program(result.expanded))
    elif invocation.command == "dump-types":
        out.write(result.types.dump_types(result.expanded.defs))
    elif invocation.command == "dump-sharing":
        out.write(sharing_report(result, invocation.target))
    elif invocation.command == "dump-components":
        try:
            out.write(components_report(result, invocation.target))
        except PawnsError as e:
            if e.diagnostic is None:
                raise
            result.diagnostics.append(e.diagnostic)
            failed = True

    report(result.diagnostics, source, settings, err)
    if invocation.command != "run" or failed:
        return EXIT_ERRORS if failed else EXIT_OK

    run = run_checked(result, settings, out)
    report(run.diagnostics, source, settings, err)
    if run.oracle is not None:
        for violation in run.oracle.violations[:settings.max_errors]:
            err.write(violation.describe() + "\n")
        err.write(f"oracle: {len(run.oracle.violations)} violations\n")
    return EXIT_OK if run.ok else EXIT_ERRORS


def main(argv: Optional[List[str]] = None, out: TextIO = sys.stdout, err: TextIO = sys.stderr) -> int:
    """Entry point for command line execution"""
    try:
        invocation = parse_invocation(argv)
    except SystemExit as e:
        return EXIT_OK if e.code == 0 else EXIT_USAGE
    except UsageError as e:
        err.write(f"pawnslab: {e}\n")
        return EXIT_USAGE

    settings = settings_for(invocation)
    configure_logging(settings)
    try:
        return execute(invocation, settings, out, err)
    except UsageError as e:
        err.write(f"pawnslab: {e}\n")
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
