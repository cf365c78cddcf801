import numpy as np
import pytest
from loguru import logger

from density_ratio_test.components.histogram import make_context
from density_ratio_test.components.partition import BinTable


def pytest_addoption(parser):
    parser.addoption('--runslow', action='store_true', default=False, help='Run slow Monte Carlo tests.')


def pytest_configure(config):
    config.addinivalue_line('markers', 'slow: long Monte Carlo check, needs --runslow to run')


def pytest_collection_modifyitems(config, items):
    if config.getoption('--runslow'):
        return
    skip_slow = pytest.mark.skip(reason='needs --runslow to run')
    for item in items:
        if 'slow' in item.keywords:
            item.add_marker(skip_slow)


@pytest.fixture(autouse=True)
def reset_logger():
    yield
    logger.remove()


@pytest.fixture
def two_bin_context():
    return make_context(alpha=0.05, K=2, n=500, n0=1000, n1=100)


@pytest.fixture
def two_bin_table():
    return BinTable(n0=np.array([990, 10]), n1=np.array([5, 95]))


@pytest.fixture
def two_bin_test_counts():
    return np.array([400, 100])
