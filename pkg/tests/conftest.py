import numpy as np
import pytest

from ampsim import StateVector


def pytest_addoption(parser):
    parser.addoption("--runslow", action="store_true", default=False,
                     help="run tests marked slow (large dense cross-checks)")


def pytest_configure(config):
    config.addinivalue_line("markers", "slow: expensive checks, off by default")


def pytest_collection_modifyitems(config, items):
    if config.getoption("--runslow"):
        return
    skip = pytest.mark.skip(reason="needs --runslow")
    for item in items:
        if "slow" in item.keywords:
            item.add_marker(skip)


def random_state(n: int, seed: int) -> StateVector:
    rng = np.random.default_rng(seed)
    v = rng.normal(size=2 ** (n + 1)) + 1j * rng.normal(size=2 ** (n + 1))
    return StateVector(n, v / np.linalg.norm(v))


@pytest.fixture
def rng():
    return np.random.default_rng(20260809)
