import numpy as np
import pytest

from probproto.classifier import Model, Weights
from probproto.core import Codebook, Dataset, Instance
from probproto.data import SyntheticConfig, generate_figure1_toy


def make_problem(rng, N, M, D, K, C, lam=0.0, beta=None, hard_labels=False):
    instances = []
    for i in range(N):
        X = rng.normal(size=(int(rng.integers(1, M + 1)), D))
        if hard_labels:
            label = np.eye(C)[rng.integers(C)]
        else:
            label = rng.dirichlet(np.ones(C))
        instances.append(Instance(X, label, f"n{i}"))
    beta = float(rng.uniform(0.2, 2.0)) if beta is None else beta
    model = Model(Codebook(rng.normal(size=(K, D)), beta), Weights(rng.normal(size=(C, K)), lam))
    return Dataset(instances, D=D, C=C), model


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture(scope="session")
def toy():
    return generate_figure1_toy(SyntheticConfig(seed=0))


def pytest_configure(config):
    config._acceptance_lines = []


@pytest.fixture
def acceptance_log(request):
    return request.config._acceptance_lines


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    lines = getattr(config, "_acceptance_lines", [])
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in lines:
            terminalreporter.write_line(line)
