import numpy as np
import pytest

from dynrep.network import from_snapshots
from dynrep.spline import make_basis


def random_network(rng, M, n, density=0.4, mask_frac=0.0):
    snaps = (rng.random((n, M, M)) < density).astype(np.uint8)
    for i in range(n):
        np.fill_diagonal(snaps[i], 0)
    mask = rng.random((n, M, M)) >= mask_frac
    return from_snapshots(snaps, np.linspace(0.0, 1.0, n), mask=mask, rescale=False)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture
def small_net(rng):
    return random_network(rng, 6, 5)


@pytest.fixture
def cubic6():
    return make_basis(1.0, 6, 3)


def pytest_terminal_summary(terminalreporter):
    try:
        from test_acceptance import RESULTS
    except ImportError:
        return
    if RESULTS:
        terminalreporter.section("acceptance criteria")
        for line in RESULTS:
            terminalreporter.write_line(line)
