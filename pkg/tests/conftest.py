import numpy as np
import pytest

from crnoma.model import SystemConfig

ACCEPTANCE_LINES = []


@pytest.fixture
def fig2_cfg():
    return SystemConfig(K=1, M=5, omega0=1.0, omegaM=1.0, r0_th=0.2, rs_th=1.0, snr_db=20.0)


@pytest.fixture
def rng():
    return np.random.default_rng(20240607)


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
