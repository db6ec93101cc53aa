import numpy as np
import pytest

from tadpole.core import TadpoleGeometry

# lines collected by the acceptance suite, echoed in the terminal summary
ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


def geometry(L=1.0, R=30.0, h=0.01):
    return TadpoleGeometry.uniform(L, R, h)
