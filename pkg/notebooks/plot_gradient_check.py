"""
Checking the analytic gradients
===============================

The centre and rate derivatives go through the pooled encoding by the chain
rule. Here they are compared with central differences on a few random
problems, and a deliberately corrupted gradient is caught.
"""

import numpy as np

from probproto import Codebook, Dataset, GradientBundle, Instance, Model, Weights
from probproto import finite_diff_check, objective_and_gradient

rng = np.random.default_rng(0)


def random_problem(N=5, D=2, K=3, C=3, lam=0.1):
    insts = [Instance(rng.normal(size=(rng.integers(1, 5), D)), rng.dirichlet(np.ones(C))) for _ in range(N)]
    model = Model(Codebook(rng.normal(size=(K, D)), 0.8), Weights(rng.normal(size=(C, K)), lam))
    return Dataset(insts), model


for trial in range(3):
    data, model = random_problem()
    print(finite_diff_check(data, model))

###############################################################################
# Adding 0.1 to one coordinate of the beta derivative is flagged.
value, grad = objective_and_gradient(data, model)
bad = GradientBundle(grad.d_centers, grad.d_beta + 0.1, grad.d_theta, grad.beta)
print("corrupted:", finite_diff_check(data, model, analytic=bad).failing_blocks(1e-3))
