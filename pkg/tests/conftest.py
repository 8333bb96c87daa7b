import os

import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from nashkernel import DensityModel, assemble_divergence_form, build_grid, eigendecompose

settings.register_profile("default", max_examples=40, deadline=None,
                          suppress_health_check=[HealthCheck.too_slow])
settings.register_profile("ci", max_examples=200, deadline=None,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile(os.environ.get("HYPOTHESIS_PROFILE", "default"))


@pytest.fixture(scope="session")
def cauchy2():
    return DensityModel("cauchy", beta=2.0)


@pytest.fixture(scope="session")
def small(cauchy2):
    """Cauchy(beta=2) on [-10, 10] with 200 nodes, Neumann."""
    grid = build_grid(10.0, 200)
    op = assemble_divergence_form(cauchy2, grid)
    return grid, op, eigendecompose(op)


@pytest.fixture(scope="session")
def default_cauchy(cauchy2):
    """Default truncation: L = 40, n = 2001."""
    grid = build_grid(40.0, 2001)
    op = assemble_divergence_form(cauchy2, grid)
    return grid, op, eigendecompose(op)


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


def mu_norm(f, w):
    return float(np.sqrt(np.dot(f * f, w)))


# acceptance lines are collected here and echoed after the run
ACCEPTANCE_LINES = pytest.StashKey[list]()


def pytest_configure(config):
    config.stash[ACCEPTANCE_LINES] = []


@pytest.fixture
def acceptance_log(request):
    return request.config.stash[ACCEPTANCE_LINES]


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    lines = config.stash.get(ACCEPTANCE_LINES, [])
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in sorted(lines, key=lambda s: int(s.split()[1].rstrip(":"))):
            terminalreporter.write_line(line)
