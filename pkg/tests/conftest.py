import os
from datetime import timedelta

import numpy as np
import pytest
from hypothesis import settings

settings.register_profile("default", deadline=timedelta(seconds=5))
settings.register_profile("ci", deadline=None)
settings.load_profile(os.getenv("HYPOTHESIS_PROFILE", "default"))

# acceptance criteria append "[PASS]/[FAIL] criterion N ..." lines here;
# they are printed after the pytest summary so they survive output capture
ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


def random_hermitian(rng, n, batch=None):
    shape = (batch, n, n) if batch else (n, n)
    x = rng.normal(size=shape) + 1j * rng.normal(size=shape)
    return (x + np.conj(np.swapaxes(x, -1, -2))) / 2


def bell_phi_plus():
    psi = np.zeros(4, dtype=np.complex128)
    psi[0] = psi[3] = 1 / np.sqrt(2)
    return np.outer(psi, psi.conj())
