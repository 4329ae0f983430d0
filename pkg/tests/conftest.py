import numpy as np
import pytest

from idsor.core import PointCloud
from idsor.filters import ScanContext
from idsor.synth import make_scene

ACCEPTANCE_SEED = 0
_acceptance_lines = []


def random_cloud(rng, n, spread=10.0, max_intensity=255.0):
    xyz = rng.uniform(-spread, spread, size=(n, 3))
    return PointCloud(xyz, rng.uniform(0.0, max_intensity, size=n))


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture(scope="session")
def scene():
    cloud, labels = make_scene(ACCEPTANCE_SEED)
    return ScanContext(cloud), labels


@pytest.fixture(scope="session")
def acceptance_log():
    return _acceptance_lines


def pytest_terminal_summary(terminalreporter):
    if _acceptance_lines:
        terminalreporter.section("acceptance criteria")
        for line in _acceptance_lines:
            terminalreporter.write_line(line)
