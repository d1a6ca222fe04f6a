"""
Soft labels from grouped records
================================

Records sharing the same discrete attributes are pooled into one instance
whose label is the class frequency within the group. A model is trained on
half of the groups and scored on the rest by log-likelihood, KL divergence
(bits) and thresholded accuracy.
"""

import numpy as np

from probproto import RecordTable, TrainConfig, coordinate_ascent_train, evaluate
from probproto import group_records_to_soft_labels, stratified_split, train_standard_prototype

rng = np.random.default_rng(0)

# three discrete attributes; the class depends noisily on the first two,
# and each record carries a 2-D continuous measurement
rows = []
for _ in range(3000):
    a, b, c = rng.integers(4), rng.integers(3), rng.integers(2)
    logits = np.array([a - 1.5, b - 1.0, 0.5 * c])
    p = np.exp(logits) / np.exp(logits).sum()
    cls = int(rng.choice(3, p=p)) + 1
    rows.append(((int(a), int(b), int(c)), rng.normal(loc=[a, b], scale=0.7), cls))

data = group_records_to_soft_labels(RecordTable(rows, n_classes=3))
print(f"{len(data)} groups, sizes {min(i.M for i in data)}..{max(i.M for i in data)}")
print("first group:", data[0].id, np.round(data[0].label, 3))

train, test = stratified_split(data, 0.5, seed=0)
tc = TrainConfig(K=4, lam=0.01, seed=0)
model, _ = coordinate_ascent_train(train, tc)
base = train_standard_prototype(train, tc)
for name, m in (("probabilistic", model), ("standard", base)):
    print(name, evaluate(test, m))
