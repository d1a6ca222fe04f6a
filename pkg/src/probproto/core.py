"""Domain types and prototype encoders.

Feature sets are stored as ``(M, D)`` float arrays, labels as length-``C``
probability vectors. A :class:`Codebook` holds the ``K`` prototype centers
and the rate parameter ``beta``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

SIMPLEX_TOL = 1e-9


class DimensionError(ValueError):
    """Raised when array shapes do not conform."""


def _as_float_array(a, ndim: int, name: str) -> np.ndarray:
    arr = np.asarray(a, dtype=float)
    if arr.ndim != ndim:
        raise DimensionError(f"{name}: expected {ndim}-d array, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise ValueError(f"{name}: non-finite values")
    return arr


@dataclass(frozen=True)
class Codebook:
    centers: np.ndarray
    beta: float

    def __post_init__(self):
        centers = _as_float_array(self.centers, 2, "centers")
        if centers.shape[0] < 1 or centers.shape[1] < 1:
            raise DimensionError("codebook needs K >= 1 centers of dimension D >= 1")
        beta = float(self.beta)
        if not (np.isfinite(beta) and beta > 0):
            raise ValueError(f"beta must be positive and finite, got {self.beta!r}")
        object.__setattr__(self, "centers", centers)
        object.__setattr__(self, "beta", beta)

    @property
    def K(self) -> int:
        return self.centers.shape[0]

    @property
    def D(self) -> int:
        return self.centers.shape[1]


@dataclass(frozen=True)
class Instance:
    """One datapoint: a set of feature vectors and a soft label."""

    features: np.ndarray
    label: np.ndarray
    id: str = ""

    def __post_init__(self):
        feats = _as_float_array(self.features, 2, "features")
        if feats.shape[0] < 1:
            raise ValueError("empty feature set")
        if feats.shape[1] < 1:
            raise DimensionError("feature dimension must be >= 1")
        label = _as_float_array(self.label, 1, "label")
        check_distribution(label)
        object.__setattr__(self, "features", feats)
        object.__setattr__(self, "label", label)
        object.__setattr__(self, "id", str(self.id))

    @property
    def M(self) -> int:
        return self.features.shape[0]


def check_distribution(p: np.ndarray, tol: float = SIMPLEX_TOL) -> None:
    if p.shape[0] < 2:
        raise DimensionError("a label needs at least 2 classes")
    if np.any(p < 0) or np.any(p > 1) or abs(p.sum() - 1.0) > tol:
        raise ValueError("label not a distribution")


@dataclass
class Dataset:
    """``N`` instances sharing feature dimension ``D`` and class count ``C``."""

    instances: list[Instance]
    D: int = 0
    C: int = 0
    _packed: tuple | None = field(default=None, init=False, repr=False, compare=False)

    def __post_init__(self):
        self.instances = list(self.instances)
        if not self.instances:
            raise ValueError("dataset must contain at least one instance")
        first = self.instances[0]
        self.D = int(self.D) or first.features.shape[1]
        self.C = int(self.C) or first.label.shape[0]
        for i, inst in enumerate(self.instances):
            if inst.features.shape[1] != self.D:
                raise DimensionError(
                    f"instance {i}: dimension mismatch (D={inst.features.shape[1]}, expected {self.D})"
                )
            if inst.label.shape[0] != self.C:
                raise DimensionError(
                    f"instance {i}: dimension mismatch (C={inst.label.shape[0]}, expected {self.C})"
                )

    def __len__(self) -> int:
        return len(self.instances)

    def __iter__(self):
        return iter(self.instances)

    def __getitem__(self, i):
        return self.instances[i]

    @property
    def N(self) -> int:
        return len(self.instances)

    @property
    def labels(self) -> np.ndarray:
        return np.stack([inst.label for inst in self.instances])

    def packed(self) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        """All feature vectors stacked, with per-instance offsets and sizes.

        Returns ``(X, starts, sizes)`` where ``X`` is ``(T, D)``.
        """
        if self._packed is None:
            sizes = np.array([inst.M for inst in self.instances], dtype=np.intp)
            starts = np.concatenate(([0], np.cumsum(sizes)[:-1])).astype(np.intp)
            X = np.concatenate([inst.features for inst in self.instances], axis=0)
            self._packed = (X, starts, sizes)
        return self._packed

    def subset(self, indices: Sequence[int]) -> "Dataset":
        return Dataset([self.instances[i] for i in indices], D=self.D, C=self.C)

    def concat(self, other: "Dataset") -> "Dataset":
        return Dataset(self.instances + other.instances, D=self.D, C=self.C)


def squared_distances(X: np.ndarray, centers: np.ndarray) -> np.ndarray:
    """Pairwise squared Euclidean distances, shape ``(M, K)``."""
    diff = X[:, None, :] - centers[None, :, :]
    return np.einsum("mkd,mkd->mk", diff, diff)


def softmax_rows(scores: np.ndarray) -> np.ndarray:
    shifted = scores - scores.max(axis=-1, keepdims=True)
    e = np.exp(shifted)
    return e / e.sum(axis=-1, keepdims=True)


def _check_vectors(x, cb: Codebook) -> tuple[np.ndarray, bool]:
    arr = np.asarray(x, dtype=float)
    single = arr.ndim == 1
    arr = np.atleast_2d(arr)
    if arr.ndim != 2 or arr.shape[1] != cb.D:
        raise DimensionError(f"dimension mismatch: vector has D={arr.shape[-1]}, codebook D={cb.D}")
    if not np.all(np.isfinite(arr)):
        raise ValueError("non-finite feature values")
    return arr, single


def soft_assign(x, cb: Codebook) -> np.ndarray:
    """Probability of each prototype given a feature vector.

    ``f_k(x) = exp(-beta ||mu_k - x||^2) / sum_j exp(-beta ||mu_j - x||^2)``,
    evaluated with a max shift so that large ``beta`` cannot overflow.
    Accepts a single ``(D,)`` vector or an ``(M, D)`` batch.
    """
    X, single = _check_vectors(x, cb)
    f = softmax_rows(-cb.beta * squared_distances(X, cb.centers))
    return f[0] if single else f


def hard_assign(x, cb: Codebook) -> np.ndarray:
    """One-hot indicator of the nearest center (lowest index on ties)."""
    X, single = _check_vectors(x, cb)
    d = squared_distances(X, cb.centers)
    out = np.zeros_like(d)
    # argmin returns the first minimum, which is the tie rule we want
    out[np.arange(d.shape[0]), np.argmin(d, axis=1)] = 1.0
    return out[0] if single else out


def encode_instance(s, cb: Codebook, mode: str = "soft") -> np.ndarray:
    """Mean-pooled assignment vector ``z`` of a feature set (lies on the simplex)."""
    feats = np.asarray(s.features if isinstance(s, Instance) else s, dtype=float)
    if feats.ndim != 2 or feats.shape[0] == 0:
        raise ValueError("empty feature set")
    return assign(feats, cb, mode).mean(axis=0)


def assign(X: np.ndarray, cb: Codebook, mode: str) -> np.ndarray:
    if mode == "soft":
        return soft_assign(X, cb)
    if mode == "hard":
        return hard_assign(X, cb)
    raise ValueError(f"unknown encoding mode {mode!r}")


def encode_dataset(data: Dataset, cb: Codebook, mode: str = "soft") -> np.ndarray:
    """Encodings of every instance, shape ``(N, K)``."""
    X, starts, sizes = data.packed()
    if X.shape[1] != cb.D:
        raise DimensionError(f"dimension mismatch: data D={X.shape[1]}, codebook D={cb.D}")
    F = assign(X, cb, mode)
    return np.add.reduceat(F, starts, axis=0) / sizes[:, None]
