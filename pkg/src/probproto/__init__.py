"""Discriminative probabilistic prototype learning.

Feature sets are encoded by mean-pooling soft assignments to ``K``
prototype centers; a softmax classifier on the pooled encoding is trained
jointly with the centers and the assignment rate ``beta`` by maximizing the
soft-label log-likelihood.
"""

from .baselines import lvq_update, relaxed_lvq_gradient_step, train_standard_prototype
from .classifier import Model, Weights, class_posterior, dataset_objective, instance_loglik
from .core import Codebook, Dataset, Instance, encode_dataset, encode_instance, hard_assign, soft_assign
from .data import (
    RecordTable,
    SyntheticConfig,
    generate_figure1_toy,
    generate_soft_label_benchmark,
    group_records_to_soft_labels,
    load_dataset,
    load_model,
    save_dataset,
    save_model,
    stratified_split,
)
from .gradients import (
    GradientBundle,
    encoding_jacobian,
    finite_diff_check,
    grad_codebook,
    grad_theta,
    grad_wrt_encoding,
    objective_and_gradient,
)
from .metrics import MetricsReport, evaluate
from .optimize import (
    OptimizerConfig,
    TrainConfig,
    TrainReport,
    coordinate_ascent_train,
    kmeans_init,
    optimize_codebook_block,
    optimize_theta_block,
    quasi_newton_maximize,
)

__version__ = "0.1.0"
