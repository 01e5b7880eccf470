import numpy as np
import pytest

from mvcarve.geometry import CameraModel

# summary lines recorded by the acceptance tests, printed at session end
ACCEPTANCE_LINES: dict[int, str] = {}


@pytest.fixture
def cam():
    return CameraModel()


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_LINES:
        return
    terminalreporter.section("acceptance criteria")
    for k in sorted(ACCEPTANCE_LINES):
        terminalreporter.write_line(ACCEPTANCE_LINES[k])
