import pytest

from briberace.cli import fixture_path
from briberace.model import load_pool_distribution, make_scenario


@pytest.fixture(scope="session")
def table2_set():
    return load_pool_distribution(fixture_path("table2").read_text())


@pytest.fixture(scope="session")
def whale20_set():
    return load_pool_distribution(fixture_path("whale20").read_text())


@pytest.fixture(scope="session")
def table2_scenario(table2_set):
    return make_scenario(table2_set, "P2", 6, 1, 6.25)


@pytest.fixture(scope="session")
def whale20_scenario(whale20_set):
    return make_scenario(whale20_set, "M", 6, 1, 6.25)
