import numpy as np
import pytest

from greenalloc.domain import Dimensions
from greenalloc.instance import GeneratorConfig, generate_instance
from greenalloc.milp import ToleranceConfig

SMALL_DIMS = Dimensions(n_products=2, n_suppliers=2, n_periods=2,
                        n_truck_types=3, n_scenarios=3, n_market_offers=3)


def small_config(seed: int = 3, **kwargs) -> GeneratorConfig:
    return GeneratorConfig(seed=seed, dims=SMALL_DIMS, **kwargs)


@pytest.fixture(scope="session")
def small_instance():
    return generate_instance(small_config())


@pytest.fixture(scope="session")
def fast_tol():
    return ToleranceConfig(rel_gap=1e-4, node_limit=20000)


def assert_allclose(a, b, rtol=1e-9, atol=1e-9):
    np.testing.assert_allclose(a, b, rtol=rtol, atol=atol)


#: one line per acceptance criterion, echoed after the run so the verdicts
#: are visible even when pytest captures stdout
ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
