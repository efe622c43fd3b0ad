import math

import numpy as np
import pytest

from tomobell.model import NopaParams, lambda_from_mean_photon

ACCEPTANCE_LINES = []


@pytest.fixture
def rng():
    return np.random.default_rng(20261016)


@pytest.fixture
def reference_params():
    """N = 0.5 per mode at phi = pi: maximal violation."""
    return NopaParams(lambda_from_mean_photon(0.5), math.pi)


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
