import sys

import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from jacobi_linstat.ensemble import make_test_function

settings.register_profile(
    "default", deadline=None, max_examples=25,
    suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("default")


@pytest.fixture(scope="session")
def gauss():
    return make_test_function("gauss", width=1.0)


@pytest.fixture(scope="session")
def bump_edge():
    return make_test_function("bump", radius=1.0, center=1.5)


@pytest.fixture(scope="session")
def rng():
    return np.random.default_rng(12345)


def pytest_terminal_summary(terminalreporter):
    module = sys.modules.get("test_acceptance")
    lines = getattr(module, "REPORT", None)
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in lines:
            terminalreporter.write_line(line)
