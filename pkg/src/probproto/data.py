"""Dataset and model files, synthetic generators, record grouping and splitting.

Dataset files are line-delimited JSON. The first line is a header
``{"D": <int>, "C": <int>}``; every other line is one instance::

    {"id": "n0", "features": [[x11, ..., x1D], ...], "label": [p1, ..., pC]}

Model files hold a single JSON object with keys ``K, D, C, centers, beta,
theta, lambda`` (plus an optional ``encoding`` of ``"soft"`` or ``"hard"``).
Floats are written with ``repr`` precision so a save/load round trip is exact.
"""

from __future__ import annotations

import json
import warnings
from dataclasses import dataclass, field
from fractions import Fraction
from pathlib import Path
from typing import Hashable, Sequence

import numpy as np

from .classifier import Model, Weights
from .core import Codebook, Dataset, DimensionError, Instance, SIMPLEX_TOL


class DataError(ValueError):
    """Malformed dataset or model file."""


# --------------------------------------------------------------------------- datasets


def _dumps(obj) -> str:
    return json.dumps(obj, separators=(",", ":"), allow_nan=False)


def dataset_to_lines(data: Dataset) -> list[str]:
    lines = [_dumps({"D": data.D, "C": data.C})]
    for i, inst in enumerate(data):
        lines.append(_dumps({
            "id": inst.id or f"n{i}",
            "features": inst.features.tolist(),
            "label": inst.label.tolist(),
        }))
    return lines


def save_dataset(data: Dataset, path) -> None:
    Path(path).write_text("\n".join(dataset_to_lines(data)) + "\n")


def _fail(lineno: int, msg: str):
    raise DataError(f"line {lineno}: {msg}")


def parse_dataset(lines: Sequence[str]) -> Dataset:
    records = [(i + 1, ln) for i, ln in enumerate(lines) if ln.strip()]
    if not records:
        raise DataError("line 1: missing header")
    lineno, head = records[0]
    try:
        header = json.loads(head)
        D, C = int(header["D"]), int(header["C"])
    except (ValueError, KeyError, TypeError):
        _fail(lineno, 'header must be {"D": <int>, "C": <int>}')
    if D < 1 or C < 2:
        _fail(lineno, "header needs D >= 1 and C >= 2")

    instances = []
    for lineno, ln in records[1:]:
        try:
            rec = json.loads(ln)
        except ValueError as exc:
            _fail(lineno, f"invalid JSON ({exc})")
        if not isinstance(rec, dict) or "features" not in rec or "label" not in rec:
            _fail(lineno, "record needs 'features' and 'label'")
        try:
            feats = np.asarray(rec["features"], dtype=float)
            label = np.asarray(rec["label"], dtype=float)
        except (ValueError, TypeError):
            _fail(lineno, "features/label must be numeric arrays")
        if feats.ndim != 2 or feats.shape[0] < 1:
            _fail(lineno, "features must be a nonempty list of vectors")
        if feats.shape[1] != D:
            _fail(lineno, f"dimension mismatch: feature row of length {feats.shape[1]}, expected D={D}")
        if label.ndim != 1 or label.shape[0] != C:
            _fail(lineno, f"dimension mismatch: label of length {label.size}, expected C={C}")
        if not (np.all(np.isfinite(feats)) and np.all(np.isfinite(label))):
            _fail(lineno, "non-finite value")
        if np.any(label < 0) or np.any(label > 1) or abs(label.sum() - 1.0) > SIMPLEX_TOL:
            _fail(lineno, "label not a distribution")
        instances.append(Instance(feats, label, str(rec.get("id", f"n{len(instances)}"))))
    if not instances:
        raise DataError(f"line {records[0][0]}: dataset has no instances")
    return Dataset(instances, D=D, C=C)


def load_dataset(path) -> Dataset:
    return parse_dataset(Path(path).read_text().splitlines())


# --------------------------------------------------------------------------- models


MODEL_KEYS = ("K", "D", "C", "centers", "beta", "theta", "lambda")


def model_to_dict(m: Model) -> dict:
    return {
        "K": m.K,
        "D": m.D,
        "C": m.C,
        "centers": m.codebook.centers.tolist(),
        "beta": m.codebook.beta,
        "theta": m.weights.theta.tolist(),
        "lambda": m.weights.lam,
        "encoding": m.encoding,
    }


def model_from_dict(obj: dict) -> Model:
    missing = [k for k in MODEL_KEYS if k not in obj]
    if missing:
        raise DataError(f"model file missing keys: {', '.join(missing)}")
    K, D, C = int(obj["K"]), int(obj["D"]), int(obj["C"])
    centers = np.asarray(obj["centers"], dtype=float)
    theta = np.asarray(obj["theta"], dtype=float)
    if centers.shape != (K, D):
        raise DataError(f"shape mismatch: centers {centers.shape}, expected {(K, D)}")
    if theta.shape != (C, K):
        raise DataError(f"shape mismatch: theta {theta.shape}, expected {(C, K)}")
    try:
        return Model(
            Codebook(centers, float(obj["beta"])),
            Weights(theta, float(obj["lambda"])),
            obj.get("encoding", "soft"),
        )
    except ValueError as exc:
        raise DataError(str(exc)) from exc


def dumps_model(m: Model) -> str:
    return json.dumps(model_to_dict(m), indent=1, allow_nan=False) + "\n"


def save_model(m: Model, path) -> None:
    Path(path).write_text(dumps_model(m))


def load_model(path) -> Model:
    try:
        obj = json.loads(Path(path).read_text())
    except ValueError as exc:
        raise DataError(f"model file is not valid JSON ({exc})") from exc
    if not isinstance(obj, dict):
        raise DataError("model file must hold a single object")
    return model_from_dict(obj)


# --------------------------------------------------------------------------- generators


@dataclass(frozen=True)
class SyntheticConfig:
    """Gaussian classes; each instance draws ``M`` vectors from its class.

    Defaults reproduce the two-class toy problem: an isotropic class at (0, 0)
    and a class at (2, 2) whose coordinates are correlated at 0.95.
    """

    n_per_class: int = 10
    m_range: tuple[int, int] = (1, 20)
    means: tuple = ((0.0, 0.0), (2.0, 2.0))
    covariances: tuple = (((1.0, 0.0), (0.0, 1.0)), ((1.0, 0.95), (0.95, 1.0)))
    seed: int = 0

    def __post_init__(self):
        lo, hi = self.m_range
        if not 1 <= lo <= hi:
            raise ValueError(f"invalid M range {self.m_range}")
        if len(self.means) != len(self.covariances) or len(self.means) < 2:
            raise ValueError("need one covariance per class mean and at least 2 classes")
        D = len(self.means[0])
        for mu, cov in zip(self.means, self.covariances):
            cov = np.asarray(cov, dtype=float)
            if len(mu) != D or cov.shape != (D, D):
                raise ValueError("class means/covariances have inconsistent dimensions")
            if not np.allclose(cov, cov.T):
                raise ValueError("covariance must be symmetric")
            try:
                np.linalg.cholesky(cov)
            except np.linalg.LinAlgError:
                raise ValueError("covariance must be positive definite") from None


def _sample_gaussian_sets(cfg: SyntheticConfig, rng: np.random.Generator):
    C = len(cfg.means)
    chol = [np.linalg.cholesky(np.asarray(c, dtype=float)) for c in cfg.covariances]
    classes = rng.permutation(np.repeat(np.arange(C), cfg.n_per_class))
    lo, hi = cfg.m_range
    out = []
    for c in classes:
        M = int(rng.integers(lo, hi + 1))
        noise = rng.standard_normal((M, len(cfg.means[c])))
        out.append((int(c), np.asarray(cfg.means[c]) + noise @ chol[c].T))
    return out


def generate_figure1_toy(cfg: SyntheticConfig = SyntheticConfig()) -> Dataset:
    """Sets of 2-D points from two overlapping Gaussians, with hard labels."""
    rng = np.random.default_rng(cfg.seed)
    C = len(cfg.means)
    instances = []
    for i, (c, X) in enumerate(_sample_gaussian_sets(cfg, rng)):
        label = np.zeros(C)
        label[c] = 1.0
        instances.append(Instance(X, label, f"n{i}"))
    return Dataset(instances)


def benchmark_config(n_per_class: int = 100, seed: int = 0, C: int = 4, radius: float = 1.5,
                     m_range: tuple[int, int] = (2, 8)) -> SyntheticConfig:
    """``C`` unit-variance Gaussian classes with means evenly spaced on a circle."""
    angles = 2 * np.pi * np.arange(C) / C
    means = tuple((radius * np.cos(a), radius * np.sin(a)) for a in angles)
    eye = ((1.0, 0.0), (0.0, 1.0))
    return SyntheticConfig(n_per_class, m_range, means, (eye,) * C, seed)


def generate_soft_label_benchmark(cfg: SyntheticConfig, smoothing: float = 0.2) -> Dataset:
    """Like :func:`generate_figure1_toy` but with labels ``(1 - s) * onehot + s / C``."""
    if not 0 <= smoothing < 1:
        raise ValueError("smoothing must lie in [0, 1)")
    rng = np.random.default_rng(cfg.seed)
    C = len(cfg.means)
    instances = []
    for i, (c, X) in enumerate(_sample_gaussian_sets(cfg, rng)):
        label = np.full(C, smoothing / C)
        label[c] += 1.0 - smoothing
        instances.append(Instance(X, label, f"n{i}"))
    return Dataset(instances)


# --------------------------------------------------------------------------- record grouping


@dataclass
class RecordTable:
    """Rows of ``(attributes, class_value)`` with class values in ``1..C``.

    A row may also be ``(attributes, features, class_value)``, in which case
    ``features`` is used as that row's feature vector instead of the encoded
    attributes.
    """

    rows: list[tuple]
    n_classes: int
    arities: list[int] | None = None
    codes: list[dict] = field(default_factory=list, init=False, repr=False)

    def __post_init__(self):
        if self.n_classes < 2:
            raise ValueError("need at least 2 classes")
        for r, row in enumerate(self.rows):
            cls = row[-1]
            if not (isinstance(cls, (int, np.integer)) and 1 <= cls <= self.n_classes):
                raise ValueError(f"row {r}: class value {cls!r} not in 1..{self.n_classes}")
            if self.arities is not None and len(row[0]) != len(self.arities):
                raise ValueError(f"row {r}: expected {len(self.arities)} attributes")


def _attribute_codes(rows: list[tuple]) -> list[dict[Hashable, int]]:
    """Integer code per attribute value: integers map to themselves, anything
    else gets codes in order of first appearance."""
    n_attr = len(rows[0][0])
    codes = []
    for a in range(n_attr):
        values = [row[0][a] for row in rows]
        if all(isinstance(v, (int, np.integer)) and not isinstance(v, bool) for v in values):
            codes.append({v: int(v) for v in values})
        else:
            table: dict = {}
            for v in values:
                table.setdefault(v, len(table))
            codes.append(table)
    return codes


def group_records(t: RecordTable) -> list[tuple[tuple, list[int], list[Fraction]]]:
    """Groups in order of first appearance as ``(key, row indices, exact label)``."""
    if not t.rows:
        raise ValueError("empty record table")
    groups: dict[tuple, list[int]] = {}
    for r, row in enumerate(t.rows):
        groups.setdefault(tuple(row[0]), []).append(r)
    out = []
    for key, idx in groups.items():
        counts = [0] * t.n_classes
        for r in idx:
            counts[t.rows[r][-1] - 1] += 1
        out.append((key, idx, [Fraction(c, len(idx)) for c in counts]))
    return out


def group_records_to_soft_labels(t: RecordTable) -> Dataset:
    """One instance per distinct attribute tuple; its label is the class
    frequency within the group and its feature set has one vector per row."""
    groups = group_records(t)
    codes = _attribute_codes(t.rows)
    instances = []
    for key, idx, label in groups:
        feats = []
        for r in idx:
            row = t.rows[r]
            if len(row) == 3:
                feats.append(np.asarray(row[1], dtype=float))
            else:
                feats.append(np.array([codes[a][v] for a, v in enumerate(row[0])], dtype=float))
        instances.append(Instance(np.stack(feats), np.array([float(p) for p in label]),
                                  "|".join(map(str, key))))
    return Dataset(instances, C=t.n_classes)


# --------------------------------------------------------------------------- splitting


def _largest_remainder(quotas: np.ndarray, total: int) -> np.ndarray:
    base = np.floor(quotas).astype(int)
    rem = quotas - base
    short = total - base.sum()
    # stable sort on -remainder: ties go to the lower stratum index
    for i in np.argsort(-rem, kind="stable")[:max(short, 0)]:
        base[i] += 1
    return base


def stratified_split(data: Dataset, fraction: float, seed: int = 0) -> tuple[Dataset, Dataset]:
    """Split by the argmax class of each label, keeping class proportions.

    Per-class train counts are ``fraction * n_c`` rounded so that the total is
    ``round(fraction * N)``. Classes with fewer than 2 instances go entirely to
    the training side (with a warning).
    """
    if not 0 < fraction < 1:
        raise ValueError("fraction must lie strictly between 0 and 1")
    strata = np.argmax(data.labels, axis=1)
    rng = np.random.default_rng(seed)
    classes = np.unique(strata)
    members = [np.flatnonzero(strata == c) for c in classes]
    small = [len(mem) < 2 for mem in members]
    if any(small):
        warnings.warn("strata with fewer than 2 instances assigned to train")
    splittable = [i for i, s in enumerate(small) if not s]
    quotas = np.array([fraction * len(members[i]) for i in splittable])
    target = int(np.floor(fraction * sum(len(members[i]) for i in splittable) + 0.5))
    counts = _largest_remainder(quotas, target) if splittable else np.array([], dtype=int)

    train_idx: list[int] = []
    test_idx: list[int] = []
    for i, mem in enumerate(members):
        if small[i]:
            train_idx.extend(mem.tolist())
            continue
        perm = rng.permutation(mem)
        n_train = int(counts[splittable.index(i)])
        train_idx.extend(perm[:n_train].tolist())
        test_idx.extend(perm[n_train:].tolist())
    if not test_idx:
        raise ValueError("split leaves the test side empty")
    return data.subset(sorted(train_idx)), data.subset(sorted(test_idx))
