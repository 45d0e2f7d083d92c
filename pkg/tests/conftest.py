import numpy as np
import pytest

from crcen import accel
from crcen.data import Dataset
from crcen.linalg import RngStream

ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture(params=["jit", "numpy"])
def backend(request):
    if request.param == "jit":
        accel.enable_jit()
    else:
        accel.disable_jit()
    yield request.param
    accel.reset_jit()


@pytest.fixture
def small_imbalanced():
    """Two overlapping Gaussian clouds, 40 minority vs 200 majority samples."""
    r = RngStream(7)
    X = np.vstack([r.normal(0.0, 1.0, (40, 2)), r.normal(1.5, 1.0, (200, 2))])
    y = np.r_[np.ones(40, dtype=np.int64), np.zeros(200, dtype=np.int64)]
    return Dataset(X, y)
