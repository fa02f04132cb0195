"""Shared fixtures: small simulated instances reused across test modules."""
import numpy as np
import pytest

from dagvi import ParamMatrix, generate_ground_truth, simulate


@pytest.fixture(scope="session")
def small_truth():
    """A fixed (nu, [A]) ground truth with d1=10, tau=1."""
    nu, mats = generate_ground_truth(10, seed=0)
    return nu, mats


@pytest.fixture(scope="session")
def small_panel(small_truth):
    nu, mats = small_truth
    params = ParamMatrix.from_parts(nu, mats)
    return simulate(params, "exponential", 500, seed=1)


@pytest.fixture(scope="session")
def small_linear_panel(small_truth):
    nu, mats = small_truth
    params = ParamMatrix.from_parts(nu, mats)
    return simulate(params, "linear", 500, seed=1)


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


def pytest_terminal_summary(terminalreporter):
    """Echo one verdict line per acceptance criterion after the test run."""
    try:
        from test_acceptance import ACCEPTANCE_LINES
    except ImportError:
        return
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
