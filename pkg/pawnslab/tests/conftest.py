"""
Shared fixtures: settings isolated from the environment, and helpers that
run the pipeline over inline sources or corpus programs.
"""
from typing import Callable

import pytest

from app.core.config import Settings
from app.services.pipeline import CheckResult, RunResult, check_source, run_checked
from tests.helpers import CORPUS


@pytest.fixture
def settings() -> Settings:
    return Settings(_env_file=None)


@pytest.fixture
def check(settings) -> Callable[..., CheckResult]:
    def _check(source: str, file: str = "test.pawns", stop_after: str = "sharing", **overrides) -> CheckResult:
        return check_source(source, file, settings.model_copy(update=overrides), stop_after)
    return _check


@pytest.fixture
def run(settings) -> Callable[..., RunResult]:
    """Check then run; fails the test if the program does not check"""
    def _run(source: str, file: str = "test.pawns", **overrides) -> RunResult:
        current = settings.model_copy(update=overrides)
        result = check_source(source, file, current)
        assert not result.has_errors, [d.message for d in result.diagnostics]
        return run_checked(result, current)
    return _run


@pytest.fixture
def corpus_source() -> Callable[[str], str]:
    def _read(name: str) -> str:
        return (CORPUS / name).read_text(encoding="utf-8")
    return _read
