"""
Relation to learning vector quantization
========================================

With a very large rate parameter each point belongs to exactly one
prototype. The relaxed per-instance update then touches only the winning
center and coincides with the LVQ-style rule. The exact log-likelihood
gradient, by contrast, vanishes in that limit because every term carries a
factor ``f (1 - f)``.
"""

import numpy as np

from probproto import Codebook, Instance, Model, Weights, lvq_update, relaxed_lvq_gradient_step

rng = np.random.default_rng(1)
centers = np.array([[0.0, 0.0], [3.0, 0.0], [0.0, 3.0]])
theta = rng.normal(size=(2, 3))

inst = Instance(np.array([[2.7, 0.4]]), [1.0, 0.0])  # nearest to center 1
for beta in (0.5, 5.0, 1e4):
    m = Model(Codebook(centers, beta), Weights(theta))
    relaxed = relaxed_lvq_gradient_step(m, inst, eta=0.1)
    exact = relaxed_lvq_gradient_step(m, inst, eta=0.1, form="exact")
    lvq = lvq_update(m, inst, inst.label, 1, eta=0.1)
    print(f"beta={beta:g}")
    print("  relaxed step  ", np.round(relaxed - centers, 6).tolist())
    print("  LVQ (winner)  ", np.round(lvq - centers[1], 6).tolist())
    print("  exact gradient", np.round(exact - centers, 6).tolist())
