"""Analytic derivatives of the regularized log-likelihood and a finite-difference checker.

The centre and beta derivatives follow the chain rule through the encoding:
``dL/dmu_l = sum_n (dz^n/dmu_l)^T g^n`` where ``g^n = dL^n/dz^n``. The
pooling weight ``1/M_n`` is carried through every derivative so that they
match the encoding actually used.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .classifier import (
    Model,
    Weights,
    _loglik_terms,
    beta_penalty,
    check_model_data,
    class_posterior,
    dataset_objective,
    regularizer,
)
from .core import Codebook, Dataset, DimensionError, soft_assign, softmax_rows, squared_distances


@dataclass(frozen=True)
class GradientBundle:
    d_centers: np.ndarray  # (K, D)
    d_beta: float
    d_theta: np.ndarray  # (C, K)
    beta: float = 1.0

    @property
    def d_log_beta(self) -> float:
        return self.beta * self.d_beta


@dataclass(frozen=True)
class FiniteDiffReport:
    centers: float
    beta: float
    theta: float
    step: float

    @property
    def max_error(self) -> float:
        return max(self.centers, self.beta, self.theta)

    def failing_blocks(self, tol: float) -> list[str]:
        return [name for name in ("centers", "beta", "theta") if getattr(self, name) > tol]

    def as_dict(self) -> dict:
        return {"centers": self.centers, "beta": self.beta, "theta": self.theta, "step": self.step}


def grad_wrt_encoding(z, label, w: Weights) -> np.ndarray:
    """``g = sum_j (P_j - sigma_j(z)) theta_j``."""
    z = np.asarray(z, dtype=float)
    label = np.asarray(label, dtype=float)
    if label.shape[-1] != w.C:
        raise DimensionError(f"dimension mismatch: label has C={label.shape[-1]}, weights C={w.C}")
    residual = label - class_posterior(z, w)
    return residual @ w.theta


def encoding_jacobian(s, cb: Codebook) -> tuple[np.ndarray, np.ndarray]:
    """Derivatives of a soft encoding with respect to the centers and beta.

    Returns ``(J, dz_dbeta)`` with ``J[k, l, d] = dz_k / dmu_l[d]`` of shape
    ``(K, K, D)`` and ``dz_dbeta`` of shape ``(K,)``.
    """
    X = np.asarray(s, dtype=float)
    if X.ndim != 2 or X.shape[0] == 0:
        raise ValueError("empty feature set")
    if X.shape[1] != cb.D:
        raise DimensionError(f"dimension mismatch: vector has D={X.shape[1]}, codebook D={cb.D}")
    M = X.shape[0]
    K = cb.K
    f = soft_assign(X, cb)  # (M, K)
    sq = squared_distances(X, cb.centers)  # (M, K)
    J = np.zeros((K, K, cb.D))
    for l in range(K):
        diff = X - cb.centers[l]  # x - mu_l, (M, D)
        for k in range(K):
            if k == l:
                coef = f[:, k] * (1.0 - f[:, k])
                J[k, l] = 2.0 * cb.beta * (coef[:, None] * diff).sum(axis=0) / M
            else:
                coef = f[:, k] * f[:, l]
                J[k, l] = 2.0 * cb.beta * (coef[:, None] * -diff).sum(axis=0) / M
    expected_sq = np.sum(sq * f, axis=1, keepdims=True)
    dz_dbeta = np.sum(f * (expected_sq - sq), axis=0) / M
    return J, dz_dbeta


def _objective_parts(data: Dataset, m: Model, beta_reg: float, need_codebook: bool = True):
    check_model_data(data, m)
    X, starts, sizes = data.packed()
    cb = m.codebook
    theta = m.weights.theta
    sq = squared_distances(X, cb.centers)
    if m.encoding == "soft":
        F = softmax_rows(-cb.beta * sq)
    else:
        F = np.zeros_like(sq)
        F[np.arange(sq.shape[0]), np.argmin(sq, axis=1)] = 1.0
    Z = np.add.reduceat(F, starts, axis=0) / sizes[:, None]
    P = data.labels
    terms = _loglik_terms(Z, P, theta)
    value = 0.0
    for t in terms:
        value += float(t)
    value -= regularizer(m.weights) + beta_penalty(cb.beta, beta_reg)

    residual = P - softmax_rows(Z @ theta.T)  # (N, C)
    d_theta = residual.T @ Z - 2.0 * m.weights.lam * theta

    d_centers = np.zeros_like(cb.centers)
    d_beta = 0.0
    if need_codebook and m.encoding == "soft":
        g = residual @ theta  # (N, K)
        G = np.repeat(g, sizes, axis=0)  # (T, K)
        wt = np.repeat(1.0 / sizes, sizes)
        centred = G - np.sum(G * F, axis=1, keepdims=True)
        A = (2.0 * cb.beta * wt)[:, None] * F * centred  # (T, K)
        d_centers = A.T @ X - A.sum(axis=0)[:, None] * cb.centers
        expected_sq = np.sum(F * sq, axis=1, keepdims=True)
        d_beta = float(np.sum(wt[:, None] * G * F * (expected_sq - sq)))
        if beta_reg:
            d_beta -= 2.0 * beta_reg * np.log(cb.beta) / cb.beta
    return value, GradientBundle(d_centers, d_beta, d_theta, cb.beta)


def objective_and_gradient(data: Dataset, m: Model, beta_reg: float = 0.0) -> tuple[float, GradientBundle]:
    """Objective value together with the full gradient bundle."""
    return _objective_parts(data, m, beta_reg)


def grad_codebook(data: Dataset, m: Model, beta_reg: float = 0.0) -> tuple[np.ndarray, float, float]:
    """Returns ``(dL/dcenters, dL/dbeta, dL/dlog_beta)``."""
    _, b = _objective_parts(data, m, beta_reg)
    return b.d_centers, b.d_beta, b.d_log_beta


def grad_theta(data: Dataset, m: Model) -> np.ndarray:
    _, b = _objective_parts(data, m, 0.0, need_codebook=False)
    return b.d_theta


def grad_codebook_by_jacobian(data: Dataset, m: Model) -> tuple[np.ndarray, float]:
    """Slow per-instance assembly ``sum_n J_n^T g_n``; used to cross-check :func:`grad_codebook`."""
    d_centers = np.zeros_like(m.codebook.centers)
    d_beta = 0.0
    for inst in data:
        J, dzb = encoding_jacobian(inst.features, m.codebook)
        z = soft_assign(inst.features, m.codebook).mean(axis=0)
        g = grad_wrt_encoding(z, inst.label, m.weights)
        d_centers += np.einsum("k,kld->ld", g, J)
        d_beta += float(g @ dzb)
    return d_centers, d_beta


def _rel(a, b) -> np.ndarray:
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    return np.abs(a - b) / np.maximum(1.0, np.maximum(np.abs(a), np.abs(b)))


def numerical_gradient(data: Dataset, m: Model, step: float = 1e-5, beta_reg: float = 0.0) -> GradientBundle:
    """Central differences of :func:`dataset_objective` over every parameter."""
    def f(model):
        return dataset_objective(data, model, beta_reg)

    centers = m.codebook.centers
    d_centers = np.zeros_like(centers)
    for idx in np.ndindex(centers.shape):
        up = centers.copy()
        dn = centers.copy()
        up[idx] += step
        dn[idx] -= step
        d_centers[idx] = (f(m.replace(centers=up)) - f(m.replace(centers=dn))) / (2 * step)

    beta = m.codebook.beta
    hb = min(step, beta / 2)
    d_beta = (f(m.replace(beta=beta + hb)) - f(m.replace(beta=beta - hb))) / (2 * hb)

    theta = m.weights.theta
    d_theta = np.zeros_like(theta)
    for idx in np.ndindex(theta.shape):
        up = theta.copy()
        dn = theta.copy()
        up[idx] += step
        dn[idx] -= step
        d_theta[idx] = (f(m.replace(theta=up)) - f(m.replace(theta=dn))) / (2 * step)
    return GradientBundle(d_centers, d_beta, d_theta, beta)


def finite_diff_check(
    data: Dataset,
    m: Model,
    step: float = 1e-5,
    analytic: GradientBundle | None = None,
    beta_reg: float = 0.0,
) -> FiniteDiffReport:
    """Compare analytic gradients against central differences, block by block.

    Errors use ``|a - b| / max(1, |a|, |b|)``. Pass ``analytic`` to check a
    bundle other than the one computed here.
    """
    if not step > 0:
        raise ValueError("step must be positive")
    if analytic is None:
        _, analytic = objective_and_gradient(data, m, beta_reg)
    fd = numerical_gradient(data, m, step, beta_reg)

    def worst(a, b):
        r = _rel(a, b)
        return float(r.max()) if r.size else 0.0

    return FiniteDiffReport(
        centers=worst(analytic.d_centers, fd.d_centers),
        beta=worst(analytic.d_beta, fd.d_beta),
        theta=worst(analytic.d_theta, fd.d_theta),
        step=step,
    )
