import random
from itertools import combinations

import pytest

from graph_core import Graph


def pytest_addoption(parser):
    parser.addoption("--runslow", action="store_true", default=False, help="run slow tests")


def pytest_collection_modifyitems(config, items):
    if config.getoption("--runslow"):
        return
    skip_slow = pytest.mark.skip(reason="needs --runslow")
    for item in items:
        if "slow" in item.keywords:
            item.add_marker(skip_slow)


def random_near_complete(n: int, missing: int, rng: random.Random) -> Graph:
    pairs = list(combinations(range(n), 2))
    removed = set(rng.sample(pairs, missing))
    return Graph.from_edges(n, [e for e in pairs if e not in removed])


@pytest.fixture
def rng():
    return random.Random(20240607)
