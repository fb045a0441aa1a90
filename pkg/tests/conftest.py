import numpy as np
import pytest

from cgllab import kernels
from cgllab.spectral_core import Domain

INTERVAL = Domain.interval(np.pi, 64)
RECT = Domain.rectangle(np.pi, 2.0, 24, 16)


@pytest.fixture(params=kernels.available_backends())
def backend(request):
    """Run a test once per available kernel backend."""
    previous = kernels.BACKEND
    kernels.use_backend(request.param)
    yield request.param
    kernels.use_backend(previous)


@pytest.fixture(params=[INTERVAL, RECT], ids=["interval", "rectangle"])
def domain(request):
    return request.param


ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
