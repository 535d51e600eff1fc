import numpy as np
import pytest

from fpcavity import REFERENCE_DESIGN
from fpcavity.dynamics import fit_transfer_function

ACCEPTANCE_LINES: list[str] = []


@pytest.fixture(scope="session")
def design():
    return REFERENCE_DESIGN


@pytest.fixture(scope="session")
def reference_fit(design):
    return fit_transfer_function(design)


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
