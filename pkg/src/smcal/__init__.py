"""Smoothed concordance-assisted learning of individualized treatment regimes.

The package estimates linear treatment rules 1(beta^T x > c) from
(outcome, treatment, covariates) observations by maximizing a smoothed
pairwise concordance objective with an L1 penalty, and ships the benchmark
simulation harness, metrics, and a CLI.
"""

from .concordance import (
    PairwiseProblem,
    indicator_concordance,
    loss,
    loss_gradient,
    loss_gradient_coord,
    scal_hinge_loss,
    smoothed_concordance,
)
from .data import (
    ContrastWeights,
    Dataset,
    Propensity,
    contrast_weights,
    load_dataset,
    save_dataset,
)
from .estimator import SCAL, SMCAL
from .optimizer import FitConfig, FitResult, auto_step, fit_beta, fit_beta_hinge, soft_threshold
from .regime import (
    Regime,
    ValueEstimate,
    bootstrap_value,
    bootstrap_value_diff,
    decide,
    fit_threshold,
    ipw_value,
)
from .simulation import (
    ScenarioSpec,
    SimulationReport,
    TruthOracle,
    estimated_value,
    generate,
    mse_normalized,
    pcd,
    run_replications,
    selection_counts,
)
from .smoothing import SmoothingKernel
from .tuning import TuningSpec, cross_validate, default_alpha_grid, lambda_max

__version__ = "0.1.0"

__all__ = [
    "ContrastWeights",
    "Dataset",
    "FitConfig",
    "FitResult",
    "PairwiseProblem",
    "Propensity",
    "Regime",
    "SCAL",
    "SMCAL",
    "ScenarioSpec",
    "SimulationReport",
    "SmoothingKernel",
    "TruthOracle",
    "TuningSpec",
    "ValueEstimate",
    "auto_step",
    "bootstrap_value",
    "bootstrap_value_diff",
    "contrast_weights",
    "cross_validate",
    "decide",
    "default_alpha_grid",
    "estimated_value",
    "fit_beta",
    "fit_beta_hinge",
    "fit_threshold",
    "generate",
    "indicator_concordance",
    "ipw_value",
    "lambda_max",
    "load_dataset",
    "loss",
    "loss_gradient",
    "loss_gradient_coord",
    "mse_normalized",
    "pcd",
    "run_replications",
    "save_dataset",
    "scal_hinge_loss",
    "selection_counts",
    "smoothed_concordance",
    "soft_threshold",
]
