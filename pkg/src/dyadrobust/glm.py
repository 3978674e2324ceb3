"""Initial root-n-consistent estimators: logistic MLE and Poisson pseudo-MLE.

Both are fit by Newton-Raphson with step-halving on the dense dyad panel.
The objective is the per-dyad average log likelihood, so gradient tolerances
are scale free in the panel size.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np
from scipy.special import expit

from .errors import EstimationError, NumericsError, SeparationError, SingularDesignError
from .network import BipartiteNetwork, Theta

logger = logging.getLogger(__name__)

GRAD_TOL = 1e-10
MAX_ITER = 100
MAX_HALVINGS = 30
RIDGE = 1e-10


@dataclass(frozen=True)
class FitResult:
    theta: Theta
    converged: bool
    iterations: int
    grad_norm: float
    neg_hessian: np.ndarray  # d_r x d_r, per-dyad average scale

    def __post_init__(self):
        h = np.asarray(self.neg_hessian, dtype=np.float64)
        h.flags.writeable = False
        object.__setattr__(self, "neg_hessian", h)


def _loglik_logistic(y, xb):
    # y*xb - log(1 + exp(xb)), numerically stable
    return float(np.mean(y * xb - np.logaddexp(0.0, xb)))


def _loglik_poisson(y, xb):
    return float(np.mean(y * xb - np.exp(xb)))


def fit_glm(y: np.ndarray, design: np.ndarray, family: str = "logistic") -> FitResult:
    """Maximize the average log likelihood of a flat (n_obs, d) panel.

    family = "logistic": l = y u - log(1+e^u); "poisson": l = y u - e^u,
    with u the linear index. Raises on separation / degenerate outcomes,
    rank-deficient designs, and non-convergence.
    """
    y = np.asarray(y, dtype=np.float64).ravel()
    x = np.asarray(design, dtype=np.float64).reshape(y.size, -1)
    d = x.shape[1]

    ybar = y.mean()
    if family == "logistic":
        if ybar <= 0.0 or ybar >= 1.0:
            raise SeparationError("all outcomes equal: logistic MLE does not exist")
    elif family == "poisson":
        if ybar <= 0.0:
            raise SeparationError("all outcomes zero: poisson rate diverges to -inf")
    else:
        raise ValueError(f"unknown family {family!r}")

    gram = x.T @ x / y.size
    if np.linalg.matrix_rank(gram, tol=1e-12 * max(1.0, np.linalg.norm(gram))) < d:
        raise SingularDesignError("design matrix is rank deficient")

    theta = np.zeros(d)
    theta[0] = np.log(ybar / (1.0 - ybar)) if family == "logistic" else np.log(ybar)

    def eval_parts(th, need_ll):
        xb = x @ th
        if xb.max() > 300.0:
            raise NumericsError("linear index overflow during GLM fit")
        if family == "logistic":
            p = expit(xb)
            wt = p * (1.0 - p)
            ll = _loglik_logistic(y, xb) if need_ll else None
        else:
            p = np.exp(xb)
            wt = p
            ll = _loglik_poisson(y, xb) if need_ll else None
        grad = x.T @ (y - p) / y.size
        neg_h = x.T @ (x * wt[:, None]) / y.size
        return ll, grad, neg_h

    # Objective values are only computed once a Newton step fails to shrink
    # the gradient, which on these concave fits is the rare path.
    ll = None
    _, grad, neg_h = eval_parts(theta, need_ll=False)
    for it in range(1, MAX_ITER + 1):
        gnorm = float(np.abs(grad).max())
        if gnorm <= GRAD_TOL:
            return FitResult(Theta.from_array(theta), True, it - 1, gnorm, neg_h)
        try:
            step = np.linalg.solve(neg_h, grad)
        except np.linalg.LinAlgError:
            logger.warning("singular Hessian, adding ridge %.1e", RIDGE)
            step = np.linalg.solve(neg_h + RIDGE * np.eye(d), grad)
        cand = theta + step
        try:
            _, grad_new, negh_new = eval_parts(cand, need_ll=False)
            full_ok = float(np.abs(grad_new).max()) < gnorm
        except NumericsError:
            full_ok = False
        if full_ok:
            theta, grad, neg_h, ll = cand, grad_new, negh_new, None
            continue
        # Step-halving line search on the average log likelihood.
        if ll is None:
            ll, _, _ = eval_parts(theta, need_ll=True)
        scale = 1.0
        for _ in range(MAX_HALVINGS):
            cand = theta + scale * step
            try:
                ll_new, grad_new, negh_new = eval_parts(cand, need_ll=True)
            except NumericsError:
                scale *= 0.5
                continue
            if ll_new >= ll - 1e-14:
                theta, ll, grad, neg_h = cand, ll_new, grad_new, negh_new
                break
            scale *= 0.5
        else:
            raise EstimationError(f"{family} fit: step-halving failed at iter {it}")
    raise EstimationError(
        f"{family} fit did not converge in {MAX_ITER} iterations "
        f"(grad sup-norm {float(np.abs(grad).max()):.2e})")


def _fit_network(network: BipartiteNetwork, family: str) -> FitResult:
    y = network.adjacency.ravel()
    r = network.regressors().reshape(y.size, -1)
    return fit_glm(y, r, family)


def fit_logistic(network: BipartiteNetwork) -> FitResult:
    """Logistic MLE of (alpha_n, beta) on the dyad panel."""
    return _fit_network(network, "logistic")


def fit_poisson(network: BipartiteNetwork) -> FitResult:
    """Poisson pseudo-MLE (composite-likelihood comparator)."""
    return _fit_network(network, "poisson")
