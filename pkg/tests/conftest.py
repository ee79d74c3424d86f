import numpy as np
import pytest
from hypothesis import settings

from qmrom.problems import WaveSpec, advection_training_set, helix_snapshots, wave_snapshots

settings.register_profile("default", deadline=None, max_examples=50)
settings.load_profile("default")

# (criterion, passed, detail) rows printed after the run
ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_LINES:
        return
    terminalreporter.section("acceptance criteria")
    for name, ok, detail in ACCEPTANCE_LINES:
        terminalreporter.write_line(f"{'PASS' if ok else 'FAIL'}  {name}: {detail}")


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture(scope="session")
def helix():
    return helix_snapshots(100)


@pytest.fixture(scope="session")
def advection_train():
    return advection_training_set()


@pytest.fixture(scope="session")
def wave_case():
    spec = WaveSpec()
    return spec, wave_snapshots(spec)
