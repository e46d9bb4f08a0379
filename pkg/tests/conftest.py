import numpy as np
import pytest

from aerialmec.deployment import wkd_deploy
from aerialmec.offload_search import FitnessContext
from aerialmec.scenario import generate_scenario


@pytest.fixture(scope="session")
def table1_scenario():
    """Reference 30-user, 6-UAV instance with default parameters."""
    return generate_scenario(30, 6, 42)


@pytest.fixture(scope="session")
def table1_deployment(table1_scenario):
    return wkd_deploy(table1_scenario)


@pytest.fixture(scope="session")
def table1_context(table1_scenario, table1_deployment):
    return FitnessContext(table1_scenario, table1_deployment)


@pytest.fixture(scope="session")
def small_scenario():
    """8 users, 2 UAVs: small enough for exhaustive search."""
    return generate_scenario(8, 2, 5)


@pytest.fixture(scope="session")
def small_deployment(small_scenario):
    return wkd_deploy(small_scenario)


@pytest.fixture(scope="session")
def small_context(small_scenario, small_deployment):
    return FitnessContext(small_scenario, small_deployment)
