import numpy as np
import pytest

from removal.chain import ProductSpace, complete_graph_chain
from removal.kneser import cube_space


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture(scope="session")
def k3():
    return complete_graph_chain(3)


def k3_space(n):
    return ProductSpace(complete_graph_chain(3), n)


SMALL_SPACES = [
    ("K3^1", lambda: k3_space(1)),
    ("K3^2", lambda: k3_space(2)),
    ("K3^3", lambda: k3_space(3)),
    ("cube^4", lambda: cube_space(4, 0.25)),
]


def pytest_terminal_summary(terminalreporter):
    try:
        from test_acceptance import RESULTS
    except ImportError:
        return
    if not RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(RESULTS):
        terminalreporter.write_line(RESULTS[number])
