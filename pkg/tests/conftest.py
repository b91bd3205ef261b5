import numpy as np
import pytest

from gearkdv import DampingProfile, Grid, ModelParams, WeightConfig
from gearkdv.config import parse_config


@pytest.fixture
def params():
    return ModelParams()


@pytest.fixture
def profile():
    return DampingProfile()


@pytest.fixture
def weight():
    return WeightConfig()


@pytest.fixture
def small_grid():
    return Grid(L=15.0, N=300)


@pytest.fixture(scope="session")
def default_cfg():
    return parse_config("")


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


ACCEPTANCE = []


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for k, ok, detail in sorted(ACCEPTANCE):
        terminalreporter.write_line(f"criterion {k:2d}: {'PASS' if ok else 'FAIL'}  {detail}")
