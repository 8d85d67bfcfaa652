from __future__ import annotations

import numpy as np
import pytest

from groupforge import fixture

# criterion id -> (passed, detail); filled by test_acceptance.py
ACCEPTANCE: dict[str, tuple[bool, str]] = {}


def record(criterion: str, passed: bool, detail: str = "") -> None:
    ACCEPTANCE[criterion] = (bool(passed), detail)
    print(f"{criterion}: {'PASS' if passed else 'FAIL'}{' - ' + detail if detail else ''}")


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for criterion in sorted(ACCEPTANCE):
        passed, detail = ACCEPTANCE[criterion]
        line = f"{criterion}: {'PASS' if passed else 'FAIL'}"
        terminalreporter.write_line(line + (f" ({detail})" if detail else ""))


@pytest.fixture
def ex1():
    return fixture("ex1")


@pytest.fixture
def ex2():
    return fixture("ex2")


@pytest.fixture
def ex5():
    return fixture("ex5")


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
