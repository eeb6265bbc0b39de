import numpy as np
import pytest

from branchtail import _jit

# filled by test_acceptance.record(); echoed after the run
ACCEPTANCE = []


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for line in sorted(ACCEPTANCE, key=lambda s: int(s.split()[1].rstrip(":"))):
        terminalreporter.write_line(line)


def backends():
    return ["numba", "numpy"] if _jit.HAVE_NUMBA else ["numpy"]


@pytest.fixture(params=backends())
def backend(request):
    return request.param


@pytest.fixture
def rng_np():
    return np.random.default_rng(12345)
