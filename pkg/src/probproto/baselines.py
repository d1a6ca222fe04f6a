"""Standard prototype baseline and LVQ-style prototype updates."""

from __future__ import annotations

import numpy as np

from .classifier import Model, class_posterior
from .core import Dataset, Instance, encode_instance, soft_assign
from .gradients import objective_and_gradient
from .optimize import OptimizerConfig, TrainConfig, initial_model, optimize_theta_block


def train_standard_prototype(
    data: Dataset,
    tc: TrainConfig = TrainConfig(),
    oc: OptimizerConfig = OptimizerConfig(),
    encoding: str = "hard",
) -> Model:
    """k-means centers (frozen), winner-takes-all encodings, softmax weights fit on top.

    ``encoding="soft"`` keeps the frozen centers but encodes with the soft
    assignment at the initial ``beta`` instead.
    """
    m = initial_model(data, tc, encoding)
    return optimize_theta_block(data, m, oc)


def _hard_class(label) -> int:
    label = np.asarray(label, dtype=float)
    y = int(np.argmax(label))
    if label[y] != 1.0 or np.count_nonzero(label) != 1:
        raise ValueError("LVQ updates need a hard (one-hot) label")
    return y


def _residuals(m: Model, features: np.ndarray, y: int) -> np.ndarray:
    """``theta^y_k - sum_j theta^j_k sigma^j(z)`` for every prototype ``k``."""
    z = encode_instance(features, m.codebook, m.encoding)
    sigma = class_posterior(z, m.weights)
    return m.weights.theta[y] - sigma @ m.weights.theta


def lvq_update(m: Model, s, label, ell: int, eta: float) -> np.ndarray:
    """Winner-only prototype update, returning the new center ``ell``.

    ``mu_l + eta * sum_x (theta^y_l - sum_j theta^j_l sigma^j) (mu_l - x)``.
    The sign is kept as written: a positive residual moves the center away
    from the feature vectors.
    """
    if eta < 0:
        raise ValueError("eta must be nonnegative")
    X = np.asarray(s.features if isinstance(s, Instance) else s, dtype=float)
    y = _hard_class(label)
    r = _residuals(m, X, y)[ell]
    mu = m.codebook.centers[ell]
    return mu + eta * r * np.sum(mu - X, axis=0)


def relaxed_lvq_gradient_step(m: Model, inst: Instance, eta: float, form: str = "relaxed") -> np.ndarray:
    """One per-instance ascent step on every center; returns the new ``(K, D)`` centers.

    ``form="relaxed"`` evaluates the expanded update

        mu_l += eta * sum_x [ sum_{k != l} r_k f_k f_l (mu_l - x) + r_l f_l (mu_l - x) ]

    with ``r_k = theta^y_k - sum_j theta^j_k sigma^j`` and the constant
    ``2 beta / M`` folded into ``eta``. In the winner-takes-all limit it
    reduces to :func:`lvq_update` on the winning center and leaves the others
    in place.

    ``form="exact"`` steps along the true gradient of the instance
    log-likelihood. That gradient is proportional to ``f_l (1 - f_l)`` and
    ``f_k f_l`` and therefore vanishes in the same limit.
    """
    X = inst.features
    y = _hard_class(inst.label)
    centers = m.codebook.centers
    if form == "exact":
        soft = Model(m.codebook, m.weights, "soft")
        _, b = objective_and_gradient(Dataset([inst], D=m.D, C=m.C), soft)
        return centers + eta * b.d_centers
    if form != "relaxed":
        raise ValueError(f"unknown form {form!r}")
    r = _residuals(m, X, y)  # (K,)
    f = soft_assign(X, m.codebook)  # (M, K)
    rf = f * r  # r_k f_k(x)
    cross = rf.sum(axis=1, keepdims=True) - rf  # sum over k != l
    coef = f * (cross + r)  # (M, K), multiplies (mu_l - x)
    diff = centers[None, :, :] - X[:, None, :]  # (M, K, D)
    return centers + eta * np.einsum("mk,mkd->kd", coef, diff)
