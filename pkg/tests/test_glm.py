import numpy as np
import pytest

from dyadrobust import (BipartiteNetwork, SimulationDesign, fit_glm, fit_logistic,
                        fit_poisson, simulate_network)
from dyadrobust.errors import SeparationError, SingularDesignError

from helpers import toy_network


def test_all_equal_outcomes_raise_separation():
    net = toy_network(np.ones((3, 3)), np.zeros((3, 3)))
    with pytest.raises(SeparationError):
        fit_logistic(net)
    net0 = toy_network(np.zeros((3, 3)), np.zeros((3, 3)))
    with pytest.raises(SeparationError):
        fit_logistic(net0)


def test_poisson_all_zero_guarded():
    net = toy_network(np.zeros((3, 3)), np.zeros((3, 3)))
    with pytest.raises(SeparationError):
        fit_poisson(net)


def test_poisson_single_observation_rate_one():
    res = fit_glm(np.array([1.0]), np.array([[1.0]]), family="poisson")
    assert res.theta.alpha_n == pytest.approx(0.0, abs=1e-12)


def test_rank_deficient_design_raises(small_network):
    z = small_network.z_features
    dup = np.concatenate([z, z], axis=2)  # identical columns
    net = BipartiteNetwork(adjacency=small_network.adjacency,
                           x_attrs=small_network.x_attrs,
                           w_attrs=small_network.w_attrs, z_features=dup)
    with pytest.raises(SingularDesignError):
        fit_logistic(net)


def test_gradient_supnorm_at_tolerance(small_network):
    for fit in (fit_logistic(small_network), fit_poisson(small_network)):
        assert fit.converged
        assert fit.grad_norm <= 1e-10


def test_gradient_matches_finite_differences(small_network):
    y = small_network.adjacency.ravel()
    r = small_network.regressors().reshape(y.size, -1)
    fit = fit_logistic(small_network)
    th = fit.theta.as_array()

    def loglik(v):
        xb = r @ v
        return np.mean(y * xb - np.logaddexp(0.0, xb))

    h = 1e-5
    for k in range(th.size):
        hi = th.copy(); hi[k] += h
        lo = th.copy(); lo[k] -= h
        fd = (loglik(hi) - loglik(lo)) / (2 * h)
        # analytic gradient at the optimum is ~0; FD must agree to 1e-6 * scale
        assert abs(fd) < 1e-6


def test_rescaling_features_is_reparameterization(small_network):
    c = 3.7
    scaled = BipartiteNetwork(adjacency=small_network.adjacency,
                              x_attrs=small_network.x_attrs,
                              w_attrs=small_network.w_attrs,
                              z_features=small_network.z_features * c)
    base = fit_logistic(small_network)
    alt = fit_logistic(scaled)
    assert alt.theta.beta[0] == pytest.approx(base.theta.beta[0] / c, rel=1e-8)
    assert alt.theta.alpha_n == pytest.approx(base.theta.alpha_n, abs=1e-8)
    xb0 = small_network.regressors() @ base.theta.as_array()
    xb1 = scaled.regressors() @ alt.theta.as_array()
    p0, p1 = 1 / (1 + np.exp(-xb0)), 1 / (1 + np.exp(-xb1))
    assert np.max(np.abs(p0 - p1)) < 1e-8


def test_deterministic_given_network(small_network):
    a = fit_logistic(small_network)
    b = fit_logistic(small_network)
    assert np.array_equal(a.theta.as_array(), b.theta.as_array())
    assert a.iterations == b.iterations


def test_logistic_poisson_sparse_agreement():
    # On sparse panels the two pseudo-likelihoods nearly coincide.
    for seed in range(5):
        net = simulate_network(SimulationDesign(n_agents=200, n_projects=200,
                                                seed=seed))
        bl = fit_logistic(net).theta.beta[0]
        bp = fit_poisson(net).theta.beta[0]
        assert abs(bl - bp) <= 0.05
