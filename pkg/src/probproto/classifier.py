"""Softmax classifier over prototype encodings and the regularized log-likelihood."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .core import Codebook, Dataset, DimensionError, encode_dataset, softmax_rows

LOG_FLOOR = -700.0


@dataclass(frozen=True)
class Weights:
    """Classifier weights, one row ``theta[i]`` of length ``K`` per class."""

    theta: np.ndarray
    lam: float = 0.0

    def __post_init__(self):
        theta = np.asarray(self.theta, dtype=float)
        if theta.ndim != 2:
            raise DimensionError(f"theta must be (C, K), got shape {theta.shape}")
        if not np.all(np.isfinite(theta)):
            raise ValueError("theta has non-finite entries")
        lam = float(self.lam)
        if not lam >= 0:
            raise ValueError(f"lambda must be nonnegative, got {self.lam!r}")
        object.__setattr__(self, "theta", theta)
        object.__setattr__(self, "lam", lam)

    @property
    def C(self) -> int:
        return self.theta.shape[0]

    @property
    def K(self) -> int:
        return self.theta.shape[1]


@dataclass(frozen=True)
class Model:
    codebook: Codebook
    weights: Weights
    encoding: str = "soft"

    def __post_init__(self):
        if self.weights.K != self.codebook.K:
            raise DimensionError(
                f"dimension mismatch: theta has K={self.weights.K}, codebook K={self.codebook.K}"
            )
        if self.encoding not in ("soft", "hard"):
            raise ValueError(f"unknown encoding mode {self.encoding!r}")

    @property
    def K(self) -> int:
        return self.codebook.K

    @property
    def D(self) -> int:
        return self.codebook.D

    @property
    def C(self) -> int:
        return self.weights.C

    def replace(self, *, centers=None, beta=None, theta=None) -> "Model":
        cb = self.codebook
        if centers is not None or beta is not None:
            cb = Codebook(cb.centers if centers is None else centers, cb.beta if beta is None else beta)
        w = self.weights if theta is None else Weights(theta, self.weights.lam)
        return Model(cb, w, self.encoding)


def log_softmax_rows(scores: np.ndarray) -> np.ndarray:
    m = scores.max(axis=-1, keepdims=True)
    return scores - m - np.log(np.exp(scores - m).sum(axis=-1, keepdims=True))


def _check_conformable(z: np.ndarray, w: Weights) -> None:
    if z.shape[-1] != w.K:
        raise DimensionError(f"dimension mismatch: encoding has K={z.shape[-1]}, weights K={w.K}")


def class_posterior(z, w: Weights) -> np.ndarray:
    """Softmax posterior ``sigma_i = exp(theta_i . z) / sum_j exp(theta_j . z)``.

    ``z`` may be a single encoding or an ``(N, K)`` batch.
    """
    z = np.asarray(z, dtype=float)
    _check_conformable(z, w)
    return softmax_rows(z @ w.theta.T)


def _loglik_terms(Z: np.ndarray, P: np.ndarray, theta: np.ndarray) -> np.ndarray:
    logp = np.maximum(log_softmax_rows(Z @ theta.T), LOG_FLOOR)
    return np.sum(P * logp, axis=-1)


def instance_loglik(z, label, w: Weights) -> float:
    """Soft-label log-likelihood ``sum_j P_j log sigma_j(z)`` of one instance."""
    z = np.asarray(z, dtype=float)
    label = np.asarray(label, dtype=float)
    _check_conformable(z, w)
    if label.shape[-1] != w.C:
        raise DimensionError(f"dimension mismatch: label has C={label.shape[-1]}, weights C={w.C}")
    return float(_loglik_terms(z[None, :], label[None, :], w.theta)[0])


def regularizer(w: Weights) -> float:
    return w.lam * float(np.sum(w.theta * w.theta))


def beta_penalty(beta: float, beta_reg: float) -> float:
    """Gaussian penalty on ``log beta`` (zero-mean), disabled when ``beta_reg == 0``."""
    return beta_reg * float(np.log(beta)) ** 2 if beta_reg else 0.0


def check_model_data(data: Dataset, m: Model) -> None:
    if data.D != m.D or data.C != m.C:
        raise DimensionError(
            f"dimension mismatch: data (D={data.D}, C={data.C}) vs model (D={m.D}, C={m.C})"
        )


def dataset_loglik_terms(data: Dataset, m: Model) -> np.ndarray:
    """Per-instance log-likelihoods, in instance order."""
    check_model_data(data, m)
    Z = encode_dataset(data, m.codebook, m.encoding)
    return _loglik_terms(Z, data.labels, m.weights.theta)


def dataset_objective(data: Dataset, m: Model, beta_reg: float = 0.0) -> float:
    """Regularized log-likelihood ``sum_n L_n - lambda tr(Theta^T Theta)``."""
    total = 0.0
    for term in dataset_loglik_terms(data, m):
        total += float(term)
    return total - regularizer(m.weights) - beta_penalty(m.codebook.beta, beta_reg)
