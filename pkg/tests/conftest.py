import math

import pytest

from rabi_estimation import BlochAngles, QubitState, from_bloch

ACCEPTANCE_RESULTS: list[tuple[str, bool, str]] = []

PAPER_DP = 0.04
PAPER_TAU = math.pi / 50
PAPER_GAMMA = 0.08 / math.pi


def yz_state(theta: float) -> QubitState:
    """Polar angle ``theta`` on the phi = 3 pi/2 half of the y-z great circle."""
    return from_bloch(BlochAngles(theta, 1.5 * math.pi))


@pytest.fixture
def plus_state() -> QubitState:
    return QubitState.normalized(1.0, 1.0)


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for name, ok, detail in ACCEPTANCE_RESULTS:
        terminalreporter.write_line(f"[{'PASS' if ok else 'FAIL'}] {name}: {detail}")
