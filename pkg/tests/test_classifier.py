import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from probproto.classifier import (
    Model,
    Weights,
    class_posterior,
    dataset_objective,
    instance_loglik,
    regularizer,
)
from probproto.core import Codebook, Dataset, DimensionError, Instance, encode_dataset

from conftest import make_problem

SIGMA = (math.e / (math.e + 1), 1 / (math.e + 1))


def entropy(p):
    p = np.asarray(p)
    nz = p[p > 0]
    return float(-np.sum(nz * np.log(nz)))


def test_posterior_examples():
    w0 = Weights(np.zeros((3, 2)))
    np.testing.assert_allclose(class_posterior([0.3, 0.7], w0), np.full(3, 1 / 3), rtol=0, atol=1e-16)
    w = Weights(np.array([[1.0, 1.0], [0.0, 0.0]]))
    p = class_posterior([0.5, 0.5], w)
    np.testing.assert_allclose(p, SIGMA, rtol=1e-15)
    np.testing.assert_allclose(p, [0.731059, 0.268941], atol=5e-7)
    shifted = Weights(w.theta + np.array([3.0, -7.0]))
    np.testing.assert_allclose(class_posterior([0.5, 0.5], shifted), p, rtol=0, atol=1e-12)
    with pytest.raises(DimensionError):
        class_posterior([1.0, 0.0, 0.0], w)


def test_instance_loglik_examples():
    w0 = Weights(np.zeros((4, 3)))
    assert instance_loglik([0.2, 0.3, 0.5], [0.1, 0.2, 0.3, 0.4], w0) == pytest.approx(-math.log(4), abs=1e-15)
    w = Weights(np.array([[1.0, 1.0], [0.0, 0.0]]))
    ll = instance_loglik([0.5, 0.5], [1.0, 0.0], w)
    assert ll == pytest.approx(math.log(SIGMA[0]), abs=1e-15)
    assert ll == pytest.approx(-0.313262, abs=5e-7)
    # Gibbs equality: label equal to the posterior
    assert instance_loglik([0.5, 0.5], list(SIGMA), w) == pytest.approx(-entropy(SIGMA), abs=1e-15)


def test_loglik_floor_keeps_objective_finite():
    w = Weights(np.array([[2000.0], [0.0]]))
    ll = instance_loglik([1.0], [0.0, 1.0], w)
    assert ll == -700.0


def _dataset(rng, N, C=3):
    return Dataset([Instance(rng.normal(size=(3, 2)), rng.dirichlet(np.ones(C))) for _ in range(N)])


def test_dataset_objective_examples(rng):
    data = _dataset(rng, 6)
    cb = Codebook(rng.normal(size=(4, 2)), 1.0)
    m0 = Model(cb, Weights(np.zeros((3, 4)), 5.0))
    assert dataset_objective(data, m0) == pytest.approx(-6 * math.log(3), abs=1e-12)

    theta = rng.normal(size=(3, 4))
    m = Model(cb, Weights(theta, 0.3))
    one = data.subset([2])
    z = encode_dataset(one, cb)[0]
    expected = instance_loglik(z, one[0].label, m.weights) - 0.3 * np.sum(theta**2)
    assert dataset_objective(one, m) == pytest.approx(expected, abs=1e-14)

    m2 = Model(cb, Weights(theta, 0.6))
    diff = dataset_objective(data, m) - dataset_objective(data, m2)
    assert diff == pytest.approx(0.3 * np.sum(theta**2), rel=1e-12)
    assert diff > 0


def test_model_shape_checks(rng):
    cb = Codebook(rng.normal(size=(4, 2)), 1.0)
    with pytest.raises(DimensionError):
        Model(cb, Weights(np.zeros((3, 5))))
    with pytest.raises(ValueError):
        Weights(np.zeros((2, 2)), -1.0)
    data = _dataset(rng, 2, C=2)
    with pytest.raises(DimensionError, match="dimension mismatch"):
        dataset_objective(data, Model(cb, Weights(np.zeros((3, 4)))))


@settings(max_examples=50, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_upper_bound_and_shift_invariance(seed):
    rng = np.random.default_rng(seed)
    data, m = make_problem(rng, 4, 3, 2, 3, 3, lam=0.0)
    bound = -sum(entropy(inst.label) for inst in data)
    f = dataset_objective(data, m)
    assert f <= bound + 1e-12
    c = rng.normal(size=3)
    shifted = m.replace(theta=m.weights.theta + c)
    assert abs(dataset_objective(data, shifted) - f) <= 1e-10


@settings(max_examples=50, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_concave_in_theta(seed):
    rng = np.random.default_rng(seed)
    data, m = make_problem(rng, 5, 4, 2, 3, 3, lam=0.0)
    t1 = 3 * rng.normal(size=m.weights.theta.shape)
    t2 = 3 * rng.normal(size=m.weights.theta.shape)
    f = lambda t: dataset_objective(data, m.replace(theta=t))
    assert f((t1 + t2) / 2) >= (f(t1) + f(t2)) / 2 - 1e-10


def test_regularizer_is_frobenius(rng):
    theta = rng.normal(size=(3, 4))
    assert regularizer(Weights(theta, 0.25)) == pytest.approx(0.25 * np.trace(theta.T @ theta))
