import numpy as np
import pytest

from qsqlab.oracle import SOUNDNESS

ACCEPTANCE_LINES = []


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture
def accept():
    """Record one pass/fail line for an acceptance criterion and return the flag."""

    def record(label, passed, detail):
        line = f"{'PASS' if passed else 'FAIL'}  {label}: {detail}"
        print(line)
        ACCEPTANCE_LINES.append(line)
        return passed

    return record


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
    terminalreporter.write_line(
        f"oracle soundness: {SOUNDNESS['checked']} responses checked, {SOUNDNESS['violations']} violations"
    )


def pytest_sessionfinish(session, exitstatus):
    if SOUNDNESS["violations"]:
        session.exitstatus = 1
