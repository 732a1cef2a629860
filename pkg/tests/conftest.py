import numpy as np
import pytest

from byzcode.info_core import JointPmf

ACCEPTANCE_LINES: list[str] = []


def random_pmf(rng: np.random.Generator, sizes, alpha: float = 1.0, floor: float = 0.0) -> JointPmf:
    """Dirichlet draw over the joint alphabet, optionally with every cell >= floor before renormalizing."""
    w = rng.dirichlet(np.full(int(np.prod(sizes)), alpha)) + floor
    return JointPmf.from_array(w.reshape(sizes), normalize=True)


def markov_chain3(flip: float = 0.2) -> JointPmf:
    """Binary X1 -> X2 -> X3, each link flipping with probability ``flip``."""
    a = np.zeros((2, 2, 2))
    for x1, x2, x3 in np.ndindex(2, 2, 2):
        a[x1, x2, x3] = 0.5 * (1 - flip if x2 == x1 else flip) * (1 - flip if x3 == x2 else flip)
    return JointPmf.from_array(a)


@pytest.fixture
def pair():
    return JointPmf.from_array(np.array([[0.4, 0.1], [0.1, 0.4]]))


@pytest.fixture
def chain3():
    return markov_chain3()


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
