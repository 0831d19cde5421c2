import pytest

from edcompander.compander import gaussian_source, uniform_source
from edcompander.simulator import designs_for


@pytest.fixture(scope="session")
def gaussian():
    return gaussian_source()


@pytest.fixture(scope="session")
def uniform():
    return uniform_source()


@pytest.fixture(scope="session")
def gauss_designs(gaussian):
    """(optimized, naive) for the Gaussian source."""
    return designs_for(gaussian)


@pytest.fixture(scope="session")
def unif_designs(uniform):
    return designs_for(uniform)


ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
