import numpy as np
import pytest

from sis_pmcmc.model import AgentPopulation, ParameterSet
from sis_pmcmc.network import fully_connected


def pytest_addoption(parser):
    parser.addoption("--runslow", action="store_true", default=False, help="run slow replication tests")


def pytest_collection_modifyitems(config, items):
    if config.getoption("--runslow"):
        return
    skip_slow = pytest.mark.skip(reason="needs --runslow")
    for item in items:
        if "slow" in item.keywords:
            item.add_marker(skip_slow)


@pytest.fixture
def toy_population():
    """N=3 agents with z = (1, z2)."""
    z = np.column_stack([np.ones(3), [-0.7, 0.1, 1.2]])
    return AgentPopulation(z)


@pytest.fixture
def toy_network():
    return fully_connected(3)


@pytest.fixture
def toy_theta():
    return ParameterSet(
        beta_alpha=(-0.5, 0.3),
        beta_lambda=(0.2, 0.8),
        beta_gamma=(-1.0, 0.5),
        rho=0.7,
    )


@pytest.fixture
def toy_observations():
    return np.array([1, 1, 2, 1, 0])


@pytest.fixture
def fixed_gamma_theta():
    return ParameterSet(
        beta_alpha=(-2.9444389791664403, 0.0),
        beta_lambda=(-1.0, 2.0),
        rho=0.8,
        gamma_fixed=0.1,
    )
