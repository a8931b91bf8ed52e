import math

import numpy as np
import pytest

from modebell.protocol import ReferenceSpec, SystemPrep

ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)


@pytest.fixture
def symmetric():
    return SystemPrep(1 / math.sqrt(2), 1 / math.sqrt(2))


@pytest.fixture
def balanced():
    return ReferenceSpec()


@pytest.fixture
def rng():
    return np.random.default_rng(20240607)
