import numpy as np
import pytest

from combpricing.core import PricingInstance
from combpricing.problems import GraphData, KnapsackData, SetCoverData

ACCEPTANCE_LINES = []  # filled by the acceptance suite


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)


def make_knap4():
    """Four unit-value items, item 4 toll-free, weights (1,1,1,2), capacity 3."""
    return PricingInstance("kpp", [1, 1, 1, 1], (0, 1, 2), KnapsackData((1, 1, 1, 2), 3))


def make_pentagon():
    """5-cycle 1-2-3-4-5 plus chord 2-4 (0-based ids)."""
    g = GraphData(5, [(0, 1), (1, 2), (2, 3), (3, 4), (4, 0), (1, 3)])
    return PricingInstance("maxsspp", [4, 3, 2, 2, 3], (0, 1), g)


def make_cover5():
    """Sets {a,b},{a,c},{a,d},{b,c,d},{c} over elements a..d."""
    sc = SetCoverData(4, [(0, 1), (0, 2), (0, 3), (1, 2, 3), (2,)])
    return PricingInstance("minscpp", [1, 2, 2, 3, 1], (0, 4), sc)


@pytest.fixture
def knap4():
    return make_knap4()


@pytest.fixture
def pentagon():
    return make_pentagon()


@pytest.fixture
def cover5():
    return make_cover5()


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
