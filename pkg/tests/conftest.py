"""Collects the acceptance verdicts and prints one line per criterion."""

import pytest

ACCEPTANCE = {}


@pytest.fixture
def verdict(request):
    """Call ``verdict(number, ok, detail)`` once per criterion."""

    def record(number, ok, detail):
        ACCEPTANCE[number] = (bool(ok), detail)

    return record


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(ACCEPTANCE):
        ok, detail = ACCEPTANCE[number]
        terminalreporter.write_line(f"criterion {number:>2}: {'PASS' if ok else 'FAIL'}  {detail}")
