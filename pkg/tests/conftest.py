import numpy as np
import pytest

from jmreeb.models import get_system

BUNDLED = ["oscillator", "hyperbolic", "rigid-body", "heavy-top", "pendula"]

# acceptance lines collected by tests/test_acceptance.py
ACCEPTANCE_LINES = []


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


@pytest.fixture(params=BUNDLED)
def bundle(request):
    return get_system(request.param)


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
