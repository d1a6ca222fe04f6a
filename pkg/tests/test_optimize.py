import itertools
import warnings

import numpy as np
import pytest

from probproto.baselines import train_standard_prototype
from probproto.classifier import Model, Weights, dataset_objective
from probproto.core import Codebook, Dataset, Instance
from probproto.data import SyntheticConfig, generate_figure1_toy
from probproto.optimize import (
    OptimizerConfig,
    TrainConfig,
    coordinate_ascent_train,
    default_beta,
    initial_model,
    kmeans_init,
    lloyd,
    optimize_codebook_block,
    optimize_theta_block,
    quasi_newton_maximize,
)


def best_partition_1d(points, K):
    """Exhaustive search over all labelings for the minimum-WCSS centers."""
    pts = np.asarray(points, dtype=float)
    best = None
    for labels in itertools.product(range(K), repeat=len(pts)):
        labels = np.array(labels)
        if len(set(labels)) < K:
            continue
        centers = np.array([pts[labels == k].mean() for k in range(K)])
        wcss = float(np.sum((pts - centers[labels]) ** 2))
        if best is None or wcss < best[0]:
            best = (wcss, sorted(centers))
    return best


def test_kmeans_matches_exhaustive_partition():
    pts = [0.0, 1.0, 9.0, 10.0]
    wcss, centers = best_partition_1d(pts, 2)
    res = kmeans_init(np.array(pts)[:, None], 2, seed=0)
    np.testing.assert_allclose(sorted(res.centers[:, 0]), centers)
    np.testing.assert_allclose(sorted(res.centers[:, 0]), [0.5, 9.5])
    assert res.inertia == pytest.approx(wcss)


@pytest.mark.parametrize("seed", range(5))
def test_kmeans_random_1d_against_enumeration(seed):
    pts = np.random.default_rng(seed).normal(size=7) * 3
    wcss, _ = best_partition_1d(pts, 3)
    res = kmeans_init(pts[:, None], 3, seed=seed, restarts=10)
    assert res.inertia == pytest.approx(wcss, rel=1e-12)


def test_kmeans_degenerate_cases():
    X = np.array([[0.0, 1.0], [2.0, 2.0], [5.0, -1.0]])
    res = kmeans_init(X, 3)
    assert sorted(map(tuple, res.centers)) == sorted(map(tuple, X))
    assert res.inertia == 0.0 and not res.degenerate

    res = kmeans_init(X, 1)
    np.testing.assert_allclose(res.centers[0], X.mean(axis=0))

    dup = np.array([[1.0], [1.0], [2.0], [2.0]])
    with pytest.warns(UserWarning):
        res = kmeans_init(dup, 3)
    assert res.degenerate
    assert set(res.centers[:, 0]) == {1.0, 2.0}
    with pytest.raises(ValueError):
        kmeans_init(X, 4)


def test_kmeans_is_deterministic(toy):
    a = kmeans_init(toy, 3, seed=7)
    b = kmeans_init(toy, 3, seed=7)
    assert np.array_equal(a.centers, b.centers)


def test_lloyd_reseeds_empty_cluster():
    X = np.array([[0.0], [0.1], [5.0], [5.2]])
    centers, _ = lloyd(X, np.array([[0.0], [100.0]]))
    d = np.abs(X - centers.T)
    assert np.all(np.bincount(np.argmin(d, axis=1), minlength=2) > 0)


def test_qn_quadratic():
    res = quasi_newton_maximize(lambda x: (-(x[0] - 3) ** 2, np.array([-2 * (x[0] - 3)])), np.zeros(1))
    assert res.converged
    assert abs(res.x[0] - 3) < 1e-8


def neg_rosenbrock(x):
    a, b = x
    f = (1 - a) ** 2 + 100 * (b - a * a) ** 2
    g = np.array([-2 * (1 - a) - 400 * a * (b - a * a), 200 * (b - a * a)])
    return -f, -g


def test_qn_rosenbrock():
    res = quasi_newton_maximize(neg_rosenbrock, np.array([-1.2, 1.0]), OptimizerConfig(max_iterations=200))
    assert res.converged and res.iterations <= 200
    np.testing.assert_allclose(res.x, [1.0, 1.0], atol=1e-5)
    assert np.max(np.abs(neg_rosenbrock(res.x)[1])) <= 1e-6


def test_qn_never_worse_than_start():
    res = quasi_newton_maximize(neg_rosenbrock, np.array([0.3, -0.4]), OptimizerConfig(max_iterations=3))
    assert res.fun >= neg_rosenbrock(np.array([0.3, -0.4]))[0]
    assert not res.converged and res.message == "iteration limit"
    res = quasi_newton_maximize(neg_rosenbrock, np.array([0.3, -0.4]), OptimizerConfig(max_iterations=0))
    assert res.iterations == 0 and np.array_equal(res.x, [0.3, -0.4])


def test_optimizer_config_validation():
    with pytest.raises(ValueError):
        OptimizerConfig(wolfe_c1=0.9, wolfe_c2=0.1)
    with pytest.raises(ValueError):
        OptimizerConfig(history_size=0)
    with pytest.raises(ValueError):
        TrainConfig(beta_init=0.0)


def _toy_model(toy, lam, K=3, seed=0):
    return initial_model(toy, TrainConfig(K=K, lam=lam, seed=seed))


def test_theta_block_restarts_agree(toy):
    m = _toy_model(toy, 0.1)
    rng = np.random.default_rng(0)
    values = []
    for _ in range(3):
        start = m.replace(theta=2 * rng.normal(size=m.weights.theta.shape))
        values.append(dataset_objective(toy, optimize_theta_block(toy, start)))
    assert max(values) - min(values) < 1e-6


def test_theta_block_uniform_labels_gives_zero():
    rng = np.random.default_rng(1)
    data = Dataset([Instance(rng.normal(size=(3, 2)), np.full(3, 1 / 3)) for _ in range(6)])
    m = Model(Codebook(rng.normal(size=(4, 2)), 1.0), Weights(rng.normal(size=(3, 4)), 0.5))
    out = optimize_theta_block(data, m)
    np.testing.assert_allclose(out.weights.theta, 0.0, atol=1e-6)


def test_theta_block_single_instance_grid():
    data = Dataset([Instance(np.array([[0.2], [1.9], [0.4]]), [0.8, 0.2])])
    m = Model(Codebook(np.array([[0.0], [2.0]]), 0.7), Weights(np.zeros((2, 2)), 0.1))
    opt = optimize_theta_block(data, m)
    f_opt = dataset_objective(data, opt)
    grid = np.linspace(-3, 3, 13)
    f_grid = max(
        dataset_objective(data, m.replace(theta=np.array(t).reshape(2, 2)))
        for t in itertools.product(grid, repeat=4)
    )
    assert f_opt >= f_grid - 1e-12
    # fine local grid around the optimizer's answer never beats it
    local = np.linspace(-0.05, 0.05, 5)
    for t in itertools.product(local, repeat=4):
        theta = opt.weights.theta + np.array(t).reshape(2, 2)
        assert dataset_objective(data, m.replace(theta=theta)) <= f_opt + 1e-12


def test_codebook_block_stationary_at_zero_theta(toy):
    m = _toy_model(toy, 0.01)
    out = optimize_codebook_block(toy, m)
    assert np.array_equal(out.codebook.centers, m.codebook.centers)
    assert out.codebook.beta == m.codebook.beta


def test_codebook_block_improves_toy(toy):
    m = optimize_theta_block(toy, _toy_model(toy, 0.01, K=2))
    before = dataset_objective(toy, m)
    out = optimize_codebook_block(toy, m)
    assert dataset_objective(toy, out) > before
    assert out.codebook.beta > 0


def test_codebook_block_single_prototype_flat(toy):
    m = _toy_model(toy, 0.01, K=1)
    m = m.replace(theta=np.array([[0.5], [-0.2]]))
    out = optimize_codebook_block(toy, m)
    np.testing.assert_allclose(out.codebook.centers, m.codebook.centers, atol=1e-12)
    assert dataset_objective(toy, out) == pytest.approx(dataset_objective(toy, m), abs=1e-12)


def test_default_beta():
    data = Dataset([Instance(np.array([[0.0], [2.0]]), [1.0, 0.0])])
    assert default_beta(data, np.array([[1.0]])) == pytest.approx(0.5)


def test_coordinate_ascent_reduces_to_soft_baseline(toy):
    tc = TrainConfig(K=2, rounds=1, seed=3)
    m, report = coordinate_ascent_train(toy, tc, codebook_oc=OptimizerConfig(max_iterations=0))
    base = train_standard_prototype(toy, tc, encoding="soft")
    assert np.array_equal(m.codebook.centers, base.codebook.centers)
    assert m.codebook.beta == base.codebook.beta
    assert np.array_equal(m.weights.theta, base.weights.theta)
    assert report.rounds == 1


def test_coordinate_ascent_trace_and_determinism(toy):
    tc = TrainConfig(K=2, seed=1)
    m1, r1 = coordinate_ascent_train(toy, tc)
    m2, r2 = coordinate_ascent_train(toy, tc)
    assert r1.objective_trace == r2.objective_trace
    assert np.array_equal(m1.codebook.centers, m2.codebook.centers)
    trace = np.array(r1.objective_trace)
    assert np.all(np.diff(trace) >= -1e-9)
    assert trace[0] == pytest.approx(-len(toy) * np.log(2))
    assert trace[-1] == pytest.approx(dataset_objective(toy, m1), abs=1e-12)
    assert r1.blocks[:3] == ["init", "theta", "codebook"]


@pytest.mark.parametrize("seed", range(3))
def test_training_objective_dominates_baseline(seed):
    data = generate_figure1_toy(SyntheticConfig(seed=seed))
    tc = TrainConfig(K=2, seed=seed)
    m, _ = coordinate_ascent_train(data, tc)
    base = train_standard_prototype(data, tc)
    assert dataset_objective(data, m) >= dataset_objective(data, base)
    km = kmeans_init(data, 2, seed, tc.kmeans_restarts).centers
    assert np.all(np.linalg.norm(m.codebook.centers - km, axis=1) > 0.1)
