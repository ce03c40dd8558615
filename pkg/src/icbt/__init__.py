"""Clustered Bradley-Terry ranking with per-pair intransitivity.

Pairwise win probabilities are logistic in a skill difference plus a
pair-specific offset; skills and offsets are both clustered into ordered
levels whose counts are inferred by a split-merge reversible-jump MCMC
sampler.  Includes a maximum-likelihood Bradley-Terry baseline, tournament
simulation, and out-of-sample evaluation utilities.
"""

from .bradley_terry import BtFit, bt_pairwise_probabilities, fit_bt_mle
from .data import ComparisonDataset, ObjectIndex, PairLayout
from .errors import DataError, IcbtError, InvariantError
from .evaluation import (
    PosteriorSummary,
    adjusted_intransitivity,
    log_loss,
    rank_by_ability,
    rank_by_average_probability,
    ranking_accuracy,
    relative_log_loss,
    spearman_comparison,
    summarize,
    train_test_split,
)
from .initialize import InitConfig, build_initial_state, kmeans_1d, select_by_bic, staged_warmup
from .kernels import BACKEND as KERNEL_BACKEND
from .model import (
    IntransitivityClustering,
    ModelState,
    SkillClustering,
    bt_probability,
    icbt_probability,
    log_likelihood,
    pairwise_probability_matrix,
    probability_from_bt_and_theta,
    skill_of,
    theta_of,
    transitive_bridge,
    validate_state,
)
from .priors import (
    Hyperparameters,
    log_dma_intransitivity,
    log_dma_skill,
    log_posterior_unnorm,
    log_prior_A,
    log_prior_joint,
    log_prior_K,
    log_prior_phi,
    log_prior_theta,
)
from .sampler import ChainSamples, SamplerSchedule, matching_inverse, matching_transform, run_chain
from .simulate import TournamentSpec, scenario_preset, simulate_round_robin

__version__ = "0.1.0"

__all__ = [
    "BtFit",
    "ChainSamples",
    "ComparisonDataset",
    "DataError",
    "Hyperparameters",
    "IcbtError",
    "InitConfig",
    "IntransitivityClustering",
    "InvariantError",
    "KERNEL_BACKEND",
    "ModelState",
    "ObjectIndex",
    "PairLayout",
    "PosteriorSummary",
    "SamplerSchedule",
    "SkillClustering",
    "TournamentSpec",
    "adjusted_intransitivity",
    "bt_pairwise_probabilities",
    "bt_probability",
    "build_initial_state",
    "fit_bt_mle",
    "icbt_probability",
    "kmeans_1d",
    "log_dma_intransitivity",
    "log_dma_skill",
    "log_likelihood",
    "log_loss",
    "log_posterior_unnorm",
    "log_prior_A",
    "log_prior_joint",
    "log_prior_K",
    "log_prior_phi",
    "log_prior_theta",
    "matching_inverse",
    "matching_transform",
    "pairwise_probability_matrix",
    "probability_from_bt_and_theta",
    "rank_by_ability",
    "rank_by_average_probability",
    "ranking_accuracy",
    "relative_log_loss",
    "run_chain",
    "scenario_preset",
    "select_by_bic",
    "simulate_round_robin",
    "skill_of",
    "spearman_comparison",
    "staged_warmup",
    "summarize",
    "theta_of",
    "train_test_split",
    "transitive_bridge",
    "validate_state",
]
