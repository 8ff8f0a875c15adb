import warnings

import numpy as np
import pytest
from hypothesis import settings

from ipmlab.fields import Grid2D

settings.register_profile("lab", deadline=None, max_examples=25)
settings.load_profile("lab")


@pytest.fixture(scope="session")
def g32():
    return Grid2D(4.0, 32)


@pytest.fixture(scope="session")
def g64():
    return Grid2D(4.0, 64)


@pytest.fixture(scope="session")
def g128():
    return Grid2D(4.0, 128)


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


@pytest.fixture
def quiet():
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        yield


ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES):
            terminalreporter.write_line(line)
