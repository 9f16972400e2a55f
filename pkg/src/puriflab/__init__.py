"""Desk-scale laboratory for score-based diffusion purification.

Exact Gaussian-mixture scores stand in for a learned score network, so the
three design knobs of diffusion purification (forward schedule, solver
order, randomness strength) and the attack/defense evaluation loop can be
verified numerically rather than approximately.
"""

from .attacks import AttackSpec, bpda_eot_attack, pgd_attack, project, spsa_attack, spsa_gradient
from .gmm import GaussianMixture, LabeledDataset, make_score_fn, sample_dataset
from .interaction import (
    interaction_predicate,
    interaction_time_bisect,
    interaction_time_ve,
    interaction_time_vp,
    order_report,
)
from .mlp import (
    MlpClassifier,
    TrainConfig,
    accuracy,
    init_classifier,
    load_classifier,
    loss_and_input_gradient,
    predict_logits,
    save_classifier,
    train,
)
from .purify import FORWARD_ODE, FORWARD_STOCHASTIC, PurifierConfig, make_batch_purifier, purify, purify_batch
from .schedules import EDM, VE, VP, Schedule
from .solvers import (
    EULER,
    HEUN,
    SolverConfig,
    SolverDivergedError,
    integrate_forward_ode,
    integrate_reverse,
    integrate_sde,
    mixed_reverse_drift,
)

__all__ = [
    "AttackSpec",
    "EDM",
    "EULER",
    "FORWARD_ODE",
    "FORWARD_STOCHASTIC",
    "GaussianMixture",
    "HEUN",
    "LabeledDataset",
    "MlpClassifier",
    "PurifierConfig",
    "Schedule",
    "SolverConfig",
    "SolverDivergedError",
    "TrainConfig",
    "VE",
    "VP",
    "accuracy",
    "bpda_eot_attack",
    "init_classifier",
    "integrate_forward_ode",
    "integrate_reverse",
    "integrate_sde",
    "interaction_predicate",
    "interaction_time_bisect",
    "interaction_time_ve",
    "interaction_time_vp",
    "load_classifier",
    "loss_and_input_gradient",
    "make_batch_purifier",
    "make_score_fn",
    "mixed_reverse_drift",
    "order_report",
    "pgd_attack",
    "predict_logits",
    "project",
    "purify",
    "purify_batch",
    "sample_dataset",
    "save_classifier",
    "spsa_attack",
    "spsa_gradient",
    "train",
]
