import sys

import numpy as np
import pytest

from dissipator import ControlPair, outer_solve
from dissipator.bench import example1, example1b

# reference feedback for the 5x5 example, rounded to five significant digits
K_REF = np.array([[0.3690, -0.12149, 0.34503, 0.1119, 0.35065],
                      [1.0340, 0.66501, -0.01895, 1.3640, -1.2432]])


@pytest.fixture(scope="session")
def ex1():
    return example1()


@pytest.fixture(scope="session")
def ex1b():
    return example1b()


@pytest.fixture(scope="session")
def toy():
    """A = diag(1, -1), B = e1: minimal weak feedback is K = [1, 0]."""
    return ControlPair(np.diag([1.0, -1.0]), np.array([[1.0], [0.0]]))


@pytest.fixture(scope="session")
def gl2_ex1(ex1):
    return outer_solve(ex1, m=2)


@pytest.fixture(scope="session")
def gl2_ex1b(ex1b):
    return outer_solve(ex1b, m=2)


@pytest.fixture(scope="session")
def gl3_ex1b(ex1b):
    return outer_solve(ex1b, m=3)


def pytest_terminal_summary(terminalreporter):
    mod = sys.modules.get("test_acceptance")
    if mod is None or not mod.RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for line in mod.summary_lines():
        terminalreporter.write_line(line)
    for line in mod.LOG:
        terminalreporter.write_line("log: " + line)
