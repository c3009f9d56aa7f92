"""Multiclass score-oriented losses on the probability simplex."""

from .confusion import (
    HardConfusion,
    SoftConfusion,
    hard_confusions,
    mc_hard_membership,
    mc_hard_memberships,
    smoothed_membership,
    smoothed_memberships,
    soft_confusions,
)
from .dirichlet import DirichletPrior, ThresholdSet, hoeffding_samples, log_pdf, sample_thresholds
from .losses import ClassWeights, LossConfig, LossValue, cross_entropy, multisol, multisol_grad, multisol_hard, squared_loss
from .scores import ScoreKind, macro_score, score
from .simplex import ClassDecision, SimplexPoint, argmax_rule, barycenter, classify, in_region, vertex

__version__ = "0.1.0"
