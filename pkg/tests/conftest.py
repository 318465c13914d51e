import numpy as np
import pytest

from aircomp.core import SystemInstance

S2_POWER_GAINS = np.array([0.1, 0.3, 0.5, 0.7, 0.9, 1.1, 1.3, 1.5, 1.7, 1.9])


@pytest.fixture
def unit10():
    return SystemInstance.from_gains(np.ones(10), 1.0)


@pytest.fixture
def s2():
    return SystemInstance.from_gains(np.sqrt(S2_POWER_GAINS), 1.0)


def random_instance(rng, k_max=8, h_range=(0.1, 2.0), nv_range=(0.1, 4.0)):
    K = int(rng.integers(1, k_max + 1))
    return SystemInstance.from_gains(rng.uniform(*h_range, K), rng.uniform(*nv_range))


ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
