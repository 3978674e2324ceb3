"""Minimax-MSE one-step estimation and bias-aware confidence intervals.

The sensitivity vector weights the scaled instrument moments into a linear
correction of the plug-in estimate. Subject to the regularity constraint
(jacobian' kappa = target gradient), the optimal vector minimizes the
worst-case MSE over the misspecification neighborhood and has a closed form
involving two symmetric linear solves. Intervals are widened by the
worst-case bias through the folded-normal critical value.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass

import numpy as np
from scipy.linalg import cho_factor, cho_solve
from scipy.special import expit
from scipy.stats import norm

from .errors import ConfigError, IdentificationError, NumericsError
from .moments import MomentComponents, _instrument_values
from .network import BipartiteNetwork, Theta
from .targets import TargetFunctional

logger = logging.getLogger(__name__)

REGULARITY_TOL = 1e-8
EIG_FLOOR_REL = 1e-8


@dataclass(frozen=True)
class RobustEstimate:
    """A one-step (or plug-in) estimate with its bias-aware uncertainty summary.

    ``se`` is on the estimate scale; ``worst_bias`` is the worst-case bias on
    the same scale; ``wc_rmse`` is the root worst-case MSE on the
    sqrt(n)-normalized scale used throughout.
    """

    psi_hat: float
    psi_plugin: float
    adjustment: float
    kappa: np.ndarray
    se: float
    worst_bias: float
    wc_rmse: float
    ci_lo: float
    ci_hi: float
    alpha: float
    sigma_bar_sq: float

    def __post_init__(self):
        k = np.asarray(self.kappa, dtype=np.float64)
        k.flags.writeable = False
        object.__setattr__(self, "kappa", k)
        if not (self.ci_lo <= self.psi_hat <= self.ci_hi):
            raise NumericsError("confidence interval does not contain the estimate")
        if not self.se > 0:
            raise NumericsError("standard error must be positive")

    @property
    def ci(self):
        return (self.ci_lo, self.ci_hi)

    @property
    def length(self) -> float:
        return self.ci_hi - self.ci_lo


def _solve_spd(mat: np.ndarray, rhs: np.ndarray) -> np.ndarray:
    """Solve a symmetric PD system, falling back to an eigenvalue floor."""
    try:
        c = cho_factor(mat, lower=True, check_finite=False)
        return cho_solve(c, rhs, check_finite=False)
    except np.linalg.LinAlgError:
        pass
    vals, vecs = np.linalg.eigh(mat)
    top = vals.max()
    if not top > 0:
        raise IdentificationError("sensitivity quadratic has no positive curvature")
    floor = EIG_FLOOR_REL * top
    n_floored = int((vals < floor).sum())
    logger.warning("conditioning sensitivity quadratic: flooring %d eigenvalue(s)",
                   n_floored)
    vals = np.maximum(vals, floor)
    return vecs @ ((vecs.T @ rhs) / vals[:, None])


def optimal_sensitivity(components: MomentComponents) -> np.ndarray:
    """Closed-form minimizer of the worst-case MSE under the regularity constraint.

    Solves via two linear systems in the conditioned quadratic term; no
    explicit inverses. The regularity residual is checked to REGULARITY_TOL.
    """
    phi1 = components.sens_quad
    phi2 = components.sens_lin
    g = components.jacobian
    gamma = components.target_grad

    sol = _solve_spd(phi1, np.column_stack([phi2, g]))
    x2, xg = sol[:, 0], sol[:, 1:]
    inner = g.T @ xg  # (d_r, d_r)
    rhs = g.T @ x2 + gamma
    try:
        y = np.linalg.solve(inner, rhs)
    except np.linalg.LinAlgError as exc:
        raise IdentificationError(
            "jacobian' Phi1^{-1} jacobian is singular; instruments may be "
            "collinear or fewer than the regressors") from exc
    kappa = -x2 + xg @ y
    resid = float(np.abs(g.T @ kappa - gamma).max())
    if resid > REGULARITY_TOL:
        raise NumericsError(f"regularity residual {resid:.2e} exceeds tolerance")
    return kappa


def worst_case_bias(kappa: np.ndarray, components: MomentComponents) -> float:
    """Largest absolute bias over the misspecification neighborhood (sqrt scale)."""
    quad = (kappa @ components.bias_quad @ kappa
            - 2.0 * components.bias_cross @ kappa + components.bias_scalar)
    val = components.sigma_bar_sq * quad
    if val < 0.0:
        logger.warning("clamping negative worst-case bias quadratic %.3e", val)
        val = 0.0
    return math.sqrt(val)


def sampling_variance(kappa: np.ndarray, components: MomentComponents) -> float:
    """Variance of the normalized estimate for a given sensitivity vector."""
    return float(components.cov_target + 2.0 * components.cov_cross @ kappa
                 + kappa @ components.cov_instr @ kappa)


def worst_case_mse(kappa: np.ndarray, components: MomentComponents) -> float:
    """Worst-case MSE: squared worst-case bias plus sampling variance."""
    return worst_case_bias(kappa, components) ** 2 + sampling_variance(
        kappa, components)


def critical_value(t: float, alpha: float) -> float:
    """1 - alpha quantile of |Normal(t, 1)| by bisection on the folded CDF.

    Symmetric in t; reduces to the usual two-sided normal quantile at t = 0.
    """
    if not (0.0 < alpha < 1.0):
        raise ConfigError("alpha must lie in (0, 1)")
    t = abs(float(t))

    def coverage(c):
        return norm.cdf(c - t) - norm.cdf(-c - t)

    lo, hi = 0.0, t + 10.0
    target = 1.0 - alpha
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if hi - lo < 1e-10:
            break
        if coverage(mid) < target:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def one_sided_critical_value(t: float, alpha: float) -> float:
    """Literal 1 - alpha quantile of Normal(t, 1); audit variant, not used in CIs."""
    if not (0.0 < alpha < 1.0):
        raise ConfigError("alpha must lie in (0, 1)")
    return float(t + norm.ppf(1.0 - alpha))


def bias_aware_interval(psi_hat: float, kappa: np.ndarray,
                        components: MomentComponents, n: int, alpha: float):
    """Interval widened by the worst-case bias via the folded-normal quantile.

    Half-width = CV_alpha(bias / sd) * sd / sqrt(n) where sd is the root of
    the normalized sampling variance.
    """
    var = sampling_variance(kappa, components)
    if not var > 0:
        raise NumericsError("sampling variance must be positive for an interval")
    sd = math.sqrt(var)
    bias = worst_case_bias(kappa, components)
    half = critical_value(bias / sd, alpha) * sd / math.sqrt(n)
    return psi_hat - half, psi_hat + half


def _assemble(psi_plugin, adjustment, kappa, components, n, alpha):
    psi_hat = psi_plugin + adjustment
    var = sampling_variance(kappa, components)
    if not var > 0:
        raise NumericsError("estimated sampling variance is not positive")
    bias = worst_case_bias(kappa, components)
    lo, hi = bias_aware_interval(psi_hat, kappa, components, n, alpha)
    return RobustEstimate(
        psi_hat=psi_hat, psi_plugin=psi_plugin, adjustment=adjustment,
        kappa=kappa, se=math.sqrt(var / n), worst_bias=bias / math.sqrt(n),
        wc_rmse=math.sqrt(bias ** 2 + var), ci_lo=lo, ci_hi=hi, alpha=alpha,
        sigma_bar_sq=components.sigma_bar_sq)


def one_step_estimate(network: BipartiteNetwork, theta_hat: Theta, instruments,
                      target: TargetFunctional, components: MomentComponents,
                      alpha: float = 0.05, score: str = "exp",
                      kappa: np.ndarray | None = None) -> RobustEstimate:
    """Plug-in estimate plus the optimally weighted moment correction.

    The correction weights the scaled sample moments n * mean((Y - q) H)
    with the optimal sensitivity vector; ``score`` picks q as the
    exponential intensity (default) or the logistic CDF. Passing ``kappa``
    overrides the optimal vector (e.g. zero to recover the plug-in).
    """
    if kappa is None:
        kappa = optimal_sensitivity(components)
    n = network.n_total
    h = _instrument_values(instruments)
    xb = network.regressors() @ theta_hat.as_array()
    if score == "exp":
        fitted = np.exp(xb)
    elif score == "logistic":
        fitted = expit(xb)
    else:
        raise ConfigError(f"unknown score convention {score!r}")
    resid = network.adjacency - fitted
    moment = n * np.einsum("ij,ijk->k", resid, h) / resid.size
    psi_plugin = target.plugin_mean(network.z_features, theta_hat)
    return _assemble(psi_plugin, float(kappa @ moment), kappa, components,
                     n, alpha)


def plugin_estimate(network: BipartiteNetwork, theta_hat: Theta,
                    target: TargetFunctional, components: MomentComponents,
                    kappa_weights: np.ndarray, alpha: float = 0.05) -> RobustEstimate:
    """Pure plug-in comparator with its implied sensitivity weights.

    ``kappa_weights`` are the initial estimator's influence weights mapped
    through the target gradient; the adjustment term is identically zero,
    but bias, variance and the interval follow the same construction with
    the raw regressors as instruments.
    """
    psi_plugin = target.plugin_mean(network.z_features, theta_hat)
    return _assemble(psi_plugin, 0.0, kappa_weights, components,
                     network.n_total, alpha)


def influence_weights(fit, n: int, target_grad: np.ndarray,
                      flavor: str = "hessian",
                      jacobian: np.ndarray | None = None) -> np.ndarray:
    """Sensitivity weights implied by an initial GLM estimator.

    flavor = "hessian": inverse negative Hessian of the fit (times n) applied
    to the target gradient; "moment_jacobian": uses the exponential-intensity
    jacobian instead, which satisfies the regularity constraint exactly.
    """
    if flavor == "hessian":
        mat = n * fit.neg_hessian  # symmetric
    elif flavor == "moment_jacobian":
        if jacobian is None:
            raise ConfigError("moment_jacobian flavor requires the jacobian")
        mat = jacobian.T  # solve jacobian' kappa = target_grad exactly
    else:
        raise ConfigError(f"unknown influence flavor {flavor!r}")
    try:
        return np.linalg.solve(mat, target_grad)
    except np.linalg.LinAlgError as exc:
        raise IdentificationError("initial estimator influence is singular") from exc
