import numpy as np
import pytest

ACCEPTANCE = {}


@pytest.fixture
def record_criterion():
    """Store ``(criterion, passed, detail)`` for the terminal summary."""
    def _record(number, title, passed, detail=""):
        ACCEPTANCE[number] = (title, bool(passed), detail)
    return _record


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(ACCEPTANCE):
        title, ok, detail = ACCEPTANCE[number]
        status = "PASS" if ok else "FAIL"
        terminalreporter.write_line(f"{status} criterion {number}: {title}  {detail}")


@pytest.fixture
def rng():
    return np.random.default_rng(12345)

