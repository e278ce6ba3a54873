import sys

import numpy as np
import pytest

from swapnet import qmath


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


@pytest.fixture
def qubit_diag():
    return qmath.DensityOperator(np.diag([0.75, 0.25]))


def random_pair(d, seed):
    return qmath.random_density(d, d, seed=2 * seed), qmath.random_density(d, max(1, d // 2), seed=2 * seed + 1)


def pytest_terminal_summary(terminalreporter):
    module = sys.modules.get("test_acceptance")
    if module is None or not module.REPORT:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(module.REPORT):
        terminalreporter.write_line(module.REPORT[n])
