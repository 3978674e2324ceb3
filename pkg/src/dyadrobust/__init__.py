"""Robust estimation and bias-aware inference for sparse bipartite dyadic regression."""

from .glm import FitResult, fit_glm, fit_logistic, fit_poisson
from .ingest import FeatureSpec, dump_network, fit_report, load_network
from .mc import MCConfig, MCSummary, emit_tables, mix_seed, run_mc
from .moments import (MomentComponents, Scores, compute_scores,
                      estimate_bias_terms, estimate_components, estimate_sigma)
from .network import BipartiteNetwork, MisspecNeighborhood, Theta
from .robust import (RobustEstimate, bias_aware_interval, critical_value,
                     influence_weights, one_step_estimate, optimal_sensitivity,
                     plugin_estimate, sampling_variance, worst_case_bias,
                     worst_case_mse)
from .sieve import SieveBasis, hermite_basis, regressor_augmented_basis, tensor_poly_basis
from .simulate import (SimulationDesign, eta_bound_oracle, simulate_network,
                       true_psi_oracle)
from .targets import TargetFunctional, builtin_target, numeric_target

__version__ = "0.1.0"

__all__ = [
    "BipartiteNetwork", "Theta", "MisspecNeighborhood",
    "TargetFunctional", "builtin_target", "numeric_target",
    "SieveBasis", "hermite_basis", "tensor_poly_basis", "regressor_augmented_basis",
    "FitResult", "fit_glm", "fit_logistic", "fit_poisson",
    "Scores", "MomentComponents", "compute_scores", "estimate_bias_terms",
    "estimate_sigma", "estimate_components",
    "RobustEstimate", "optimal_sensitivity", "worst_case_bias", "worst_case_mse",
    "sampling_variance", "critical_value", "bias_aware_interval",
    "one_step_estimate", "plugin_estimate", "influence_weights",
    "SimulationDesign", "simulate_network", "true_psi_oracle", "eta_bound_oracle",
    "MCConfig", "MCSummary", "run_mc", "emit_tables", "mix_seed",
    "FeatureSpec", "load_network", "dump_network", "fit_report",
]
