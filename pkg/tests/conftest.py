"""Shared fixtures; acceptance results are echoed in the terminal summary."""

import pytest
from hypothesis import settings

settings.register_profile("default", deadline=None, max_examples=60)
settings.load_profile("default")

_ACCEPTANCE_LINES = []


@pytest.fixture
def record():
    """Print and keep one pass/fail line for an acceptance criterion."""

    def _record(number: int, name: str, ok: bool, detail: str):
        line = f"{'PASS' if ok else 'FAIL'} criterion {number:2d} {name}: {detail}"
        print(line)
        _ACCEPTANCE_LINES.append(line)
        return ok

    return _record


def pytest_terminal_summary(terminalreporter):
    if _ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(_ACCEPTANCE_LINES, key=lambda s: int(s.split()[2])):
            terminalreporter.write_line(line)
