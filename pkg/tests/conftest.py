import pytest

from plaplog.constants import well_constants
from plaplog.domain import Params, make_grid
from plaplog.nehari import estimate_d


@pytest.fixture(scope="session")
def base_params():
    return Params(2.0, 3.0, 3, 1.0, 1.0)


@pytest.fixture(scope="session")
def base_grid(base_params):
    return make_grid(base_params, 100)


@pytest.fixture(scope="session")
def base_constants(base_params, base_grid):
    return well_constants(base_params, base_grid, alpha_samples=32, family_size=16)


@pytest.fixture(scope="session")
def base_d(base_params, base_grid):
    return estimate_d(base_grid, base_params, 16)


def pytest_terminal_summary(terminalreporter):
    try:
        from test_acceptance import RESULTS
    except ImportError:
        return
    if RESULTS:
        terminalreporter.section("acceptance criteria")
        for n in sorted(RESULTS):
            terminalreporter.write_line(RESULTS[n])
