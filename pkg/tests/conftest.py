import math
import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

from tunneltime.dispersion import Kind, ScatterRegion
from tunneltime.experiments import figure1_scenario, symmetric_barrier_scenario

ACCEPTANCE_LINES = []

FIG1_OMEGA0 = 0.01
FIG1_KPRIME0 = math.sqrt(2.02)
FIG1_A = 3.4 / FIG1_KPRIME0


@pytest.fixture(scope="session")
def fig1():
    return figure1_scenario()


@pytest.fixture(scope="session")
def fig1_region():
    return ScatterRegion(Kind.WELL, 1.0, FIG1_A)


@pytest.fixture(scope="session")
def barrier_sym():
    return symmetric_barrier_scenario()


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
