"""Pytest configuration."""

import os
from pathlib import Path

import pytest

from dcac_pipeline.grid import NetworkCase, load_case, parse_matpower_case

DATA_DIR = Path(__file__).parent / "data"

TWO_BUS = """
function mpc = two_bus
mpc.baseMVA = 100;
mpc.bus = [
    1 3 0  0  0 0 1 1 0 100 1 1.1 0.9;
    2 1 50 20 0 0 1 1 0 100 1 1.1 0.9;
];
mpc.gen = [
    1 50 0 999 -999 1.0 100 1 200 0;
];
mpc.branch = [
    1 2 0.01 0.1 0 0 0 0 0 0 1 -360 360;
];
mpc.gencost = [
    2 0 0 3 0 10 0;
];
"""


def pytest_configure(config):
    config.addinivalue_line(
        "markers", "integration: runs the reference MATPOWER cases from DCAC_CASE_DIR"
    )


@pytest.fixture(autouse=True)
def reset_globals():
    """Reset the config and metrics singletons between tests."""
    from dcac_pipeline import config as config_module
    from dcac_pipeline import metrics as metrics_module

    config_module._pipeline_config = None
    metrics_module._metrics_client = None
    yield
    config_module._pipeline_config = None
    metrics_module._metrics_client = None


@pytest.fixture
def case9() -> NetworkCase:
    """MATPOWER 9-bus case."""
    return load_case(DATA_DIR / "case9.m")


@pytest.fixture
def two_bus() -> NetworkCase:
    """One generator feeding 0.5 + j0.2 p.u. over z = 0.01 + j0.1."""
    return parse_matpower_case(TWO_BUS)


@pytest.fixture
def case_dir() -> Path:
    """Directory with case30.m, case39.m and case118.m for integration tests."""
    value = os.environ.get("DCAC_CASE_DIR")
    if not value:
        pytest.skip("DCAC_CASE_DIR not set")
    return Path(value)


def with_generator(case: NetworkCase, index: int, **update) -> NetworkCase:
    """Copy of a case with fields of one generator replaced."""
    generators = list(case.generators)
    generators[index] = generators[index].model_copy(update=update)
    return NetworkCase(
        name=case.name,
        base_mva=case.base_mva,
        buses=case.buses,
        branches=case.branches,
        generators=tuple(generators),
    )
