"""Differentially private domain adaptation by smoothed discrepancy
minimization: a labeled public source sample is reweighted to match a
private unlabeled target sample, then a linear predictor is fit on the
reweighted source."""

from .discrepancy import (DiscrepancyModel, build_model, exact_discrepancy,
                          grad_pnorm_G, grad_softmax_F, grad_tilde_F,
                          pnorm_G, softmax_F, theory_constants, tilde_F,
                          weight_matrix, weight_vector)
from .errors import (InvalidInputError, InvalidParameterError,
                     ProxConvergenceError, RankDeficientError)
from .mechanisms import PrivacyBudget, RandomStream
from .optimizers import (FWConfig, MDConfig, noisy_frank_wolfe,
                         noisy_mirror_descent, private_stationary_fw)
from .pipeline import AdaptationResult, bound_report, single_stage, two_stage
from .regression import LinearHypothesis, mse, weighted_ridge

__all__ = [
    "AdaptationResult", "DiscrepancyModel", "FWConfig", "InvalidInputError",
    "InvalidParameterError", "LinearHypothesis", "MDConfig", "PrivacyBudget",
    "ProxConvergenceError", "RandomStream", "RankDeficientError",
    "bound_report", "build_model", "exact_discrepancy", "grad_pnorm_G",
    "grad_softmax_F", "grad_tilde_F", "mse", "noisy_frank_wolfe",
    "noisy_mirror_descent", "pnorm_G", "private_stationary_fw",
    "single_stage", "softmax_F", "theory_constants", "tilde_F", "two_stage",
    "weight_matrix", "weight_vector", "weighted_ridge",
]

__version__ = "0.1.0"
