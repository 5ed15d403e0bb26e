import time

import numpy as np
import pytest
from hypothesis import settings

settings.register_profile("default", max_examples=120, deadline=None)
settings.load_profile("default")

SUITE_BUDGET = 60.0
_criteria: dict[int, tuple[bool, str]] = {}
_session_start = [0.0]


def pytest_sessionstart(session):
    _session_start[0] = time.perf_counter()


@pytest.fixture
def rng():
    return np.random.default_rng(20240601)


@pytest.fixture
def criterion():
    """Record one acceptance line; the summary prints them all together."""

    def record(number: int, passed: bool, detail: str) -> None:
        _criteria[number] = (passed, detail)
        print(f"criterion {number}: {'PASS' if passed else 'FAIL'} {detail}")

    return record


def pytest_sessionfinish(session, exitstatus):
    elapsed = time.perf_counter() - _session_start[0]
    if 10 in _criteria:
        ok, detail = _criteria[10]
        within = elapsed < SUITE_BUDGET
        _criteria[10] = (ok and within, f"{detail}; session {elapsed:.1f} s (budget {SUITE_BUDGET:.0f} s)")
        if not within:
            session.exitstatus = 1


def pytest_terminal_summary(terminalreporter):
    if not _criteria:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(_criteria):
        ok, detail = _criteria[number]
        terminalreporter.write_line(f"criterion {number:2d}: {'PASS' if ok else 'FAIL'}  {detail}")
