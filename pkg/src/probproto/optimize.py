"""k-means initialisation, L-BFGS maximisation and the coordinate-ascent trainer."""

from __future__ import annotations

import logging
import warnings
from collections import deque
from dataclasses import dataclass, field
from typing import Callable

import numpy as np
from scipy.optimize import line_search
from scipy.optimize._linesearch import LineSearchWarning

from .classifier import Model, Weights, _loglik_terms
from .core import Codebook, Dataset, encode_dataset, softmax_rows, squared_distances
from .gradients import objective_and_gradient

logger = logging.getLogger(__name__)

EARLY_STOP = 1e-7


@dataclass(frozen=True)
class OptimizerConfig:
    max_iterations: int = 500
    gradient_tolerance: float = 1e-6
    history_size: int = 10
    wolfe_c1: float = 1e-4
    wolfe_c2: float = 0.9

    def __post_init__(self):
        if self.max_iterations < 0:
            raise ValueError("max_iterations must be >= 0")
        if not self.gradient_tolerance > 0:
            raise ValueError("gradient_tolerance must be positive")
        if self.history_size < 1:
            raise ValueError("history_size must be >= 1")
        if not 0 < self.wolfe_c1 < self.wolfe_c2 < 1:
            raise ValueError("need 0 < wolfe_c1 < wolfe_c2 < 1")


@dataclass(frozen=True)
class TrainConfig:
    K: int = 2
    lam: float = 0.01
    rounds: int = 20
    seed: int = 0
    beta_init: float | None = None  # None: 1 / (2 * mean squared distance to k-means centers)
    kmeans_restarts: int = 5
    beta_reg: float = 0.0

    def __post_init__(self):
        if self.K < 1:
            raise ValueError("K must be >= 1")
        if self.rounds < 1:
            raise ValueError("rounds must be >= 1")
        if self.beta_init is not None and not self.beta_init > 0:
            raise ValueError("beta_init must be positive")
        if self.lam < 0:
            raise ValueError("lambda must be nonnegative")
        if self.kmeans_restarts < 1:
            raise ValueError("kmeans_restarts must be >= 1")


@dataclass
class TrainReport:
    objective_trace: list[float] = field(default_factory=list)
    blocks: list[str] = field(default_factory=list)
    rounds: int = 0
    converged: bool = False

    def as_dict(self) -> dict:
        return {
            "objective_trace": list(self.objective_trace),
            "blocks": list(self.blocks),
            "rounds": self.rounds,
            "converged": self.converged,
        }


@dataclass(frozen=True)
class OptimizeResult:
    x: np.ndarray
    fun: float
    iterations: int
    converged: bool
    message: str = ""


@dataclass(frozen=True)
class KMeansResult:
    centers: np.ndarray
    inertia: float
    degenerate: bool = False  # fewer distinct points than K; centers padded by duplication


# --------------------------------------------------------------------------- k-means


def _farthest_point_seeds(X: np.ndarray, K: int, start: int) -> np.ndarray:
    idx = [start]
    dmin = np.sum((X - X[start]) ** 2, axis=1)
    for _ in range(1, K):
        nxt = int(np.argmax(dmin))
        idx.append(nxt)
        dmin = np.minimum(dmin, np.sum((X - X[nxt]) ** 2, axis=1))
    return X[idx].copy()


def lloyd(X: np.ndarray, centers: np.ndarray, max_iter: int = 300) -> tuple[np.ndarray, float]:
    """Lloyd iterations from the given centers. Empty clusters are reseeded at the
    point farthest from its assigned center."""
    centers = centers.copy()
    K = centers.shape[0]
    labels = None
    for _ in range(max_iter):
        d = squared_distances(X, centers)
        new_labels = np.argmin(d, axis=1)
        counts = np.bincount(new_labels, minlength=K)
        for k in np.flatnonzero(counts == 0):
            own = d[np.arange(X.shape[0]), new_labels]
            far = int(np.argmax(own))
            new_labels[far] = k
            d[far] = 0.0  # do not pick the same point twice
            counts = np.bincount(new_labels, minlength=K)
        if labels is not None and np.array_equal(new_labels, labels):
            break
        labels = new_labels
        for k in range(K):
            centers[k] = X[labels == k].mean(axis=0)
    d = squared_distances(X, centers)
    inertia = float(d[np.arange(X.shape[0]), labels].sum())
    return centers, inertia


def kmeans_init(data: Dataset | np.ndarray, K: int, seed: int = 0, restarts: int = 5) -> KMeansResult:
    """Cluster the pooled feature vectors of every instance into ``K`` centers.

    Each restart seeds by greedy farthest-point selection from a random start
    point; the restart with the lowest within-cluster sum of squares wins.
    """
    X = data.packed()[0] if isinstance(data, Dataset) else np.asarray(data, dtype=float)
    if X.ndim == 1:
        X = X[:, None]
    if X.shape[0] < K:
        raise ValueError(f"need at least K={K} feature vectors, got {X.shape[0]}")
    distinct = np.unique(X, axis=0)
    if distinct.shape[0] <= K:
        if distinct.shape[0] < K:
            warnings.warn(f"only {distinct.shape[0]} distinct points for K={K}; padding by duplication")
        reps = np.resize(np.arange(distinct.shape[0]), K)
        return KMeansResult(distinct[reps].copy(), 0.0, degenerate=distinct.shape[0] < K)

    rng = np.random.default_rng(seed)
    best: tuple[np.ndarray, float] | None = None
    for _ in range(restarts):
        start = int(rng.integers(X.shape[0]))
        centers, inertia = lloyd(X, _farthest_point_seeds(X, K, start))
        if best is None or inertia < best[1]:
            best = (centers, inertia)
    return KMeansResult(best[0], best[1])


def default_beta(data: Dataset, centers: np.ndarray) -> float:
    """``1 / (2 * mean squared distance of each vector to its nearest center)``."""
    X = data.packed()[0]
    msd = float(squared_distances(X, centers).min(axis=1).mean())
    return 1.0 / (2.0 * msd) if msd > 0 else 1.0


# --------------------------------------------------------------------------- L-BFGS


def quasi_newton_maximize(
    fun: Callable[[np.ndarray], tuple[float, np.ndarray]],
    x0: np.ndarray,
    cfg: OptimizerConfig = OptimizerConfig(),
) -> OptimizeResult:
    """Maximise ``fun`` (returning value and gradient) by L-BFGS with a strong-Wolfe line search.

    Stops when the gradient sup-norm drops to ``cfg.gradient_tolerance`` or
    after ``cfg.max_iterations``. A failed line search returns the best point
    so far with ``converged=False``.
    """
    cache: dict[bytes, tuple[float, np.ndarray]] = {}

    def neg(x):
        key = x.tobytes()
        if key not in cache:
            if len(cache) > 64:
                cache.clear()
            v, g = fun(x)
            cache[key] = (-float(v), -np.asarray(g, dtype=float))
        return cache[key]

    x = np.array(x0, dtype=float)
    f, g = neg(x)
    if not np.isfinite(f):
        raise ValueError("objective is not finite at the starting point")
    S: deque = deque(maxlen=cfg.history_size)
    Y: deque = deque(maxlen=cfg.history_size)
    it = 0
    while True:
        if np.max(np.abs(g), initial=0.0) <= cfg.gradient_tolerance:
            return OptimizeResult(x, -f, it, True, "gradient tolerance reached")
        if it >= cfg.max_iterations:
            return OptimizeResult(x, -f, it, False, "iteration limit")

        d = _two_loop(g, S, Y)
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", LineSearchWarning)
            ls = line_search(
                lambda z: neg(z)[0], lambda z: neg(z)[1], x, d, g, f,
                c1=cfg.wolfe_c1, c2=cfg.wolfe_c2, maxiter=50,
            )
        alpha = ls[0]
        if alpha is None and S:
            # stale curvature pairs; retry along steepest descent
            S.clear()
            Y.clear()
            d = _two_loop(g, S, Y)
            with warnings.catch_warnings():
                warnings.simplefilter("ignore", LineSearchWarning)
                ls = line_search(
                    lambda z: neg(z)[0], lambda z: neg(z)[1], x, d, g, f,
                    c1=cfg.wolfe_c1, c2=cfg.wolfe_c2, maxiter=50,
                )
            alpha = ls[0]
        if alpha is None:
            return OptimizeResult(x, -f, it, False, "line search failed")

        x_new = x + alpha * d
        f_new, g_new = neg(x_new)
        if not f_new <= f:
            return OptimizeResult(x, -f, it, False, "no decrease")
        s = x_new - x
        y = g_new - g
        if s @ y > 1e-12 * np.sqrt((s @ s) * (y @ y)):
            S.append(s)
            Y.append(y)
        x, f, g = x_new, f_new, g_new
        it += 1


def _two_loop(g: np.ndarray, S, Y) -> np.ndarray:
    if not S:
        return -g / max(1.0, float(np.linalg.norm(g)))
    q = g.copy()
    alphas = []
    for s, y in zip(reversed(S), reversed(Y)):
        rho = 1.0 / (y @ s)
        a = rho * (s @ q)
        alphas.append((a, rho, s, y))
        q -= a * y
    s, y = S[-1], Y[-1]
    q *= (s @ y) / (y @ y)
    for a, rho, s, y in reversed(alphas):
        b = rho * (y @ q)
        q += (a - b) * s
    return -q


# --------------------------------------------------------------------------- blocks


def theta_objective(Z: np.ndarray, P: np.ndarray, lam: float, C: int, K: int):
    """Objective in the classifier weights for fixed encodings ``Z``."""
    def fun(flat):
        theta = flat.reshape(C, K)
        scores = Z @ theta.T
        value = 0.0
        for t in _loglik_terms(Z, P, theta):
            value += float(t)
        value -= lam * float(np.sum(theta * theta))
        grad = (P - softmax_rows(scores)).T @ Z - 2.0 * lam * theta
        return value, grad.ravel()

    return fun


def optimize_theta_block(data: Dataset, m: Model, cfg: OptimizerConfig = OptimizerConfig()) -> Model:
    """Maximise over the classifier weights with the codebook (and hence encodings) fixed."""
    Z = encode_dataset(data, m.codebook, m.encoding)
    fun = theta_objective(Z, data.labels, m.weights.lam, m.C, m.K)
    res = quasi_newton_maximize(fun, m.weights.theta.ravel(), cfg)
    if not res.converged:
        logger.debug("theta block: %s after %d iterations", res.message, res.iterations)
    return m.replace(theta=res.x.reshape(m.C, m.K))


def optimize_codebook_block(
    data: Dataset, m: Model, cfg: OptimizerConfig = OptimizerConfig(), beta_reg: float = 0.0
) -> Model:
    """Maximise jointly over all centers and ``log beta`` with the weights fixed."""
    if m.encoding != "soft":
        raise ValueError("codebook learning requires soft encoding")
    K, D = m.K, m.D

    def unpack(p):
        return p[:-1].reshape(K, D), float(np.exp(p[-1]))

    def fun(p):
        centers, beta = unpack(p)
        if not np.isfinite(beta) or beta <= 0:
            return -np.inf, np.zeros_like(p)
        value, b = objective_and_gradient(data, m.replace(centers=centers, beta=beta), beta_reg)
        return value, np.concatenate([b.d_centers.ravel(), [b.d_log_beta]])

    p0 = np.concatenate([m.codebook.centers.ravel(), [np.log(m.codebook.beta)]])
    res = quasi_newton_maximize(fun, p0, cfg)
    if not res.converged:
        logger.debug("codebook block: %s after %d iterations", res.message, res.iterations)
    if np.array_equal(res.x, p0):
        return m  # exp(log(beta)) need not round-trip
    centers, beta = unpack(res.x)
    return m.replace(centers=centers, beta=beta)


def initial_model(data: Dataset, tc: TrainConfig, encoding: str = "soft") -> Model:
    km = kmeans_init(data, tc.K, tc.seed, tc.kmeans_restarts)
    beta = tc.beta_init if tc.beta_init is not None else default_beta(data, km.centers)
    theta = np.zeros((data.C, tc.K))
    return Model(Codebook(km.centers, beta), Weights(theta, tc.lam), encoding)


def coordinate_ascent_train(
    data: Dataset,
    tc: TrainConfig = TrainConfig(),
    oc: OptimizerConfig = OptimizerConfig(),
    codebook_oc: OptimizerConfig | None = None,
) -> tuple[Model, TrainReport]:
    """Alternate the weight block and the codebook block until a round stops improving.

    ``codebook_oc`` overrides the optimizer settings of the codebook block.
    """
    codebook_oc = oc if codebook_oc is None else codebook_oc
    m = initial_model(data, tc)
    report = TrainReport()
    current = objective_and_gradient(data, m, tc.beta_reg)[0]
    report.objective_trace.append(current)
    report.blocks.append("init")
    for r in range(tc.rounds):
        start = current
        for name, step in (
            ("theta", lambda mm: optimize_theta_block(data, mm, oc)),
            ("codebook", lambda mm: optimize_codebook_block(data, mm, codebook_oc, tc.beta_reg)),
        ):
            candidate = step(m)
            value = objective_and_gradient(data, candidate, tc.beta_reg)[0]
            if value >= current:
                m, current = candidate, value
            report.objective_trace.append(current)
            report.blocks.append(name)
        report.rounds = r + 1
        if current - start < EARLY_STOP * max(1.0, abs(start)):
            report.converged = True
            break
    return m, report


def theta_restart(m: Model, rng: np.random.Generator, scale: float = 1.0) -> Model:
    """Copy of ``m`` with randomly drawn classifier weights."""
    return m.replace(theta=scale * rng.standard_normal(m.weights.theta.shape))


__all__ = [
    "OptimizerConfig",
    "TrainConfig",
    "TrainReport",
    "OptimizeResult",
    "KMeansResult",
    "kmeans_init",
    "lloyd",
    "default_beta",
    "quasi_newton_maximize",
    "optimize_theta_block",
    "optimize_codebook_block",
    "coordinate_ascent_train",
    "initial_model",
    "theta_objective",
    "theta_restart",
]
