from __future__ import annotations

from dataclasses import asdict, dataclass

import numpy as np

from .classifier import LOG_FLOOR, Model, _loglik_terms, check_model_data, class_posterior
from .core import Dataset, encode_dataset


@dataclass(frozen=True)
class MetricsReport:
    accuracy: float
    mean_test_loglik: float
    mean_kl_bits: float
    n: int

    def as_dict(self) -> dict:
        return asdict(self)


def predict_posteriors(data: Dataset, m: Model) -> np.ndarray:
    check_model_data(data, m)
    return class_posterior(encode_dataset(data, m.codebook, m.encoding), m.weights)


def kl_bits(p: np.ndarray, q: np.ndarray) -> np.ndarray:
    """Row-wise ``KL(p || q)`` in bits; terms with ``p_j = 0`` contribute nothing."""
    p = np.atleast_2d(p)
    q = np.atleast_2d(q)
    logq = np.maximum(np.log2(np.maximum(q, 0.0), where=q > 0, out=np.full(q.shape, -np.inf)),
                      LOG_FLOOR / np.log(2))
    logp = np.log2(p, where=p > 0, out=np.zeros(p.shape))
    return np.where(p > 0, p * (logp - logq), 0.0).sum(axis=1)


def evaluate(data: Dataset, m: Model) -> MetricsReport:
    """Accuracy of the argmax prediction against the argmax label, mean
    log-likelihood, and mean KL divergence from label to prediction in bits."""
    check_model_data(data, m)
    Z = encode_dataset(data, m.codebook, m.encoding)
    P = data.labels
    sigma = class_posterior(Z, m.weights)
    accuracy = float(np.mean(np.argmax(sigma, axis=1) == np.argmax(P, axis=1)))
    loglik = float(np.mean(_loglik_terms(Z, P, m.weights.theta)))
    kl = float(np.mean(kl_bits(P, sigma)))
    return MetricsReport(accuracy, loglik, max(kl, 0.0), len(data))
