"""Moment-component estimation: jacobians, bias quadratics and the dyadic covariance.

All estimators are exact sample averages over the dyad panel evaluated at an
initial parameter fit. The dyadic covariance uses the two-way decomposition
(agent-level row means, project-level column means, residual dyad noise)
with an O(N M k^2) pairwise-sum identity instead of the literal
O(N M^2 k^2) double loop.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np
from scipy.special import expit

from .errors import ConfigError, NumericsError
from .network import BipartiteNetwork, Theta
from .sieve import SieveBasis
from .targets import TargetFunctional

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class Scores:
    """Per-dyad scores: link residual scale and centered target kernel."""

    s_y: np.ndarray      # (N, M), n * (Y - fitted link intensity)
    s_gamma: np.ndarray  # (N, M), target kernel centered at its sample mean

    def __post_init__(self):
        for name in ("s_y", "s_gamma"):
            a = np.asarray(getattr(self, name), dtype=np.float64)
            a.flags.writeable = False
            object.__setattr__(self, name, a)


@dataclass(frozen=True)
class MomentComponents:
    """All estimated moment pieces needed by the sensitivity optimization.

    jacobian      (k, d_r)  derivative of the scaled instrument moment in theta
    target_grad   (d_r,)    mean gradient of the target kernel in theta
    bias_quad     (k, k)    second moment of the intensity-weighted instruments
    bias_cross    (k,)      cross moment of weighted instruments and d_v kernel
    bias_scalar   float     second moment of the d_v kernel
    cov_instr     (k, k)    dyadic covariance of the instrument scores
    cov_cross     (k,)      covariance between instrument and target scores
    cov_target    float     variance of the target score
    phi_share     float     M / n
    sigma_bar_sq  float     neighborhood bound used to form the sensitivity problem
    sigma2_diag   (k, k)    residual (dyad-level) covariance block, diagnostics
    """

    jacobian: np.ndarray
    target_grad: np.ndarray
    bias_quad: np.ndarray
    bias_cross: np.ndarray
    bias_scalar: float
    cov_instr: np.ndarray
    cov_cross: np.ndarray
    cov_target: float
    phi_share: float
    sigma_bar_sq: float
    sigma2_diag: np.ndarray

    @property
    def k_dim(self) -> int:
        return self.jacobian.shape[0]

    @property
    def sens_quad(self) -> np.ndarray:
        """Quadratic term of the worst-case MSE in the sensitivity vector."""
        return self.cov_instr + self.sigma_bar_sq * self.bias_quad

    @property
    def sens_lin(self) -> np.ndarray:
        """Linear term of the worst-case MSE in the sensitivity vector."""
        return self.cov_cross - self.sigma_bar_sq * self.bias_cross


def _instrument_values(instruments) -> np.ndarray:
    if isinstance(instruments, SieveBasis):
        return instruments.values
    h = np.asarray(instruments, dtype=np.float64)
    if h.ndim != 3:
        raise ConfigError("instruments must have shape (N, M, k)")
    return h


def compute_scores(network: BipartiteNetwork, theta_hat: Theta,
                   target: TargetFunctional, score: str = "exp") -> Scores:
    """Evaluate the per-dyad scores at the initial fit.

    ``score`` selects the fitted link intensity subtracted from Y: the
    sparse-scale exponential ("exp", default) or the logistic CDF
    ("logistic"). The two differ by O(1/n) on sparse panels.
    """
    xb = network.regressors() @ theta_hat.as_array()
    return _scores_from(network, theta_hat, target, score, xb)


def _scores_from(network, theta_hat, target, score, xb) -> Scores:
    n = network.n_total
    if score == "exp":
        fitted = np.exp(xb)
    elif score == "logistic":
        fitted = expit(xb)
    else:
        raise ConfigError(f"unknown score convention {score!r}")
    s_y = n * (network.adjacency - fitted)
    g = target.eval(network.z_features, 0.0, theta_hat)
    g = np.broadcast_to(g, network.adjacency.shape)
    if np.ptp(g) == 0.0:  # constant kernel centers to exactly zero
        s_gamma = np.zeros_like(s_y)
    else:
        s_gamma = g - g.mean()
    return Scores(s_y, s_gamma)


def estimate_bias_terms(network: BipartiteNetwork, theta_hat: Theta,
                        instruments, target: TargetFunctional):
    """Sample jacobian, target gradient, and worst-case-bias building blocks.

    Returns (jacobian, target_grad, bias_quad, bias_cross, bias_scalar).
    The weighted-instrument moments use the scaled intensity n*exp(R'theta),
    so the bias quadratic in the sensitivity vector equals the exact sample
    average of (kappa' w H - d_v)^2.
    """
    xb = network.regressors() @ theta_hat.as_array()
    return _bias_terms_from(network, theta_hat, instruments, target, xb)


def _bias_terms_from(network, theta_hat, instruments, target, xb):
    n = network.n_total
    h = _instrument_values(instruments)
    nm = h.shape[0] * h.shape[1]
    k = h.shape[2]
    r = network.regressors()
    if xb.max() + np.log(n) > 690.0:
        i, j = np.unravel_index(int(np.argmax(xb)), xb.shape)
        raise NumericsError(f"intensity overflow at dyad ({int(i)}, {int(j)})")
    w = n * np.exp(xb)  # (N, M)

    hf = h.reshape(nm, k)
    rf = r.reshape(nm, -1)
    wf = w.ravel()

    jacobian = (hf * wf[:, None]).T @ rf / nm
    target_grad = np.asarray(
        target.d_theta(network.z_features, theta_hat)).reshape(nm, -1).mean(axis=0)
    bias_quad = (hf * (wf ** 2)[:, None]).T @ hf / nm
    bias_quad = 0.5 * (bias_quad + bias_quad.T)
    dv = np.broadcast_to(np.asarray(target.d_v(network.z_features, theta_hat)),
                         w.shape).ravel()
    bias_cross = (hf * (wf * dv)[:, None]).mean(axis=0)
    bias_scalar = float(np.mean(dv ** 2))
    return jacobian, target_grad, bias_quad, bias_cross, bias_scalar


def _pairwise_row_blocks(s_y, s_gamma, h):
    """Average over rows of within-row pairwise products, via the sum identity.

    For each row i (agent), computes the mean over ordered pairs j != k of
    a_ij a_ik', a_ij s_gamma_ik and s_gamma_ij s_gamma_ik, where
    a_ij = s_y_ij H_ij, then averages over rows.
    """
    n_rows, n_cols, k = h.shape
    if n_cols < 2:
        raise ConfigError("need at least two columns for pairwise products")
    a = s_y[:, :, None] * h                      # (N, M, k)
    af = a.reshape(-1, k)
    row_a = a.sum(axis=1)                        # (N, k)
    row_g = s_gamma.sum(axis=1)                  # (N,)
    denom = n_rows * n_cols * (n_cols - 1)

    yy = (row_a.T @ row_a - af.T @ af) / denom
    yg = ((row_a * row_g[:, None]).sum(axis=0) - af.T @ s_gamma.ravel()) / denom
    gg = float(((row_g ** 2).sum() - (s_gamma ** 2).sum()) / denom)
    return yy, yg, gg


def estimate_sigma(scores: Scores, instruments, phi_n: float):
    """Dyadic covariance of the joint scores and its three-part decomposition.

    Returns (cov_instr, cov_cross, cov_target, sigma2_diag). The agent and
    project parts are U-statistic style within-row / within-column pairwise
    means; the residual part subtracts them from the raw second moment and
    carries the extra 1/n scaling of the dyad-level noise.
    """
    if not (0.0 < phi_n < 1.0):
        raise ConfigError(f"phi_n must lie in (0, 1), got {phi_n}")
    h = _instrument_values(instruments)
    n_rows, n_cols, k = h.shape
    n = n_rows + n_cols
    s_y, s_g = scores.s_y, scores.s_gamma

    a_yy, a_yg, a_gg = _pairwise_row_blocks(s_y, s_g, h)
    p_yy, p_yg, p_gg = _pairwise_row_blocks(
        s_y.T, s_g.T, np.transpose(h, (1, 0, 2)))

    hf = h.reshape(-1, k)
    raw = (hf * (s_y ** 2).ravel()[:, None]).T @ hf / (n_rows * n_cols)
    sigma2_diag = (raw - a_yy - p_yy) / n

    c_a, c_p, c_2 = 1.0 / (1.0 - phi_n), 1.0 / phi_n, 1.0 / (phi_n * (1.0 - phi_n))
    cov_instr = c_a * a_yy + c_p * p_yy + c_2 * sigma2_diag
    cov_instr = 0.5 * (cov_instr + cov_instr.T)
    cov_cross = c_a * a_yg + c_p * p_yg          # residual block is zero here
    cov_target = float(c_a * a_gg + c_p * p_gg)
    return cov_instr, cov_cross, cov_target, sigma2_diag


def estimate_components(network: BipartiteNetwork, theta_hat: Theta, instruments,
                        target: TargetFunctional, sigma_bar_sq,
                        score: str = "exp") -> MomentComponents:
    """One-stop assembly of every moment component at an initial fit.

    ``sigma_bar_sq`` is the researcher's neighborhood bound, given as a
    nonnegative float or a MisspecNeighborhood.
    """
    sigma_bar_sq = float(getattr(sigma_bar_sq, "sigma_bar_sq", sigma_bar_sq))
    if sigma_bar_sq < 0:
        raise ConfigError("sigma_bar_sq must be nonnegative")
    xb = network.regressors() @ theta_hat.as_array()
    jac, tgrad, b_quad, b_cross, b_scalar = _bias_terms_from(
        network, theta_hat, instruments, target, xb)
    sc = _scores_from(network, theta_hat, target, score, xb)
    phi_n = network.n_projects / network.n_total
    cov_i, cov_c, cov_t, s2 = estimate_sigma(sc, instruments, phi_n)
    return MomentComponents(
        jacobian=jac, target_grad=tgrad, bias_quad=b_quad, bias_cross=b_cross,
        bias_scalar=b_scalar, cov_instr=cov_i, cov_cross=cov_c, cov_target=cov_t,
        phi_share=phi_n, sigma_bar_sq=float(sigma_bar_sq), sigma2_diag=s2)
