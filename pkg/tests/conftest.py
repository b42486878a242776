import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from rbmlearn.model import IsingModel, Rbm
from rbmlearn.sampler import make_rng

settings.register_profile("default", deadline=None, suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("default")


@pytest.fixture
def rng():
    return make_rng(12345)


def random_rbm_params(rng, n, m, scale=1.0, density=0.7, fields=True):
    """Unconstrained-sign RBM with sparse Gaussian weights."""
    W = rng.normal(0.0, scale, size=(n, m)) * (rng.random((n, m)) < density)
    h1 = rng.normal(0.0, 0.5, n) if fields else np.zeros(n)
    h2 = rng.normal(0.0, 0.5, m) if fields else np.zeros(m)
    return Rbm(W, h1, h2)


def single_unit_rbm(n=2, weight=1.0, support=(0, 1)):
    W = np.zeros((n, 1))
    W[list(support), 0] = weight
    return Rbm(W)


def chain(weights, fields=None):
    n = len(weights) + 1
    inter = {(i, i + 1): float(w) for i, w in enumerate(weights)}
    return IsingModel(n, inter, np.zeros(n) if fields is None else np.asarray(fields, float))


ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
