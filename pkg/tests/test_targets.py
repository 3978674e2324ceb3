import math

import numpy as np
import pytest

from dyadrobust import Theta, builtin_target, numeric_target
from dyadrobust.errors import ConfigError


def five_point(f, x, h):
    return (-f(x + 2 * h) + 8 * f(x + h) - 8 * f(x - h) + f(x - 2 * h)) / (12 * h)


def random_cases(rng, count=100):
    for _ in range(count):
        z = rng.normal(-0.5, 1.0, size=(3, 1))
        n = int(rng.integers(100, 900))
        theta = Theta(alpha_n=float(rng.normal(-5.0, 0.5)),
                      beta=[float(rng.normal(1.0, 0.5))])
        yield z, n, theta


def all_builtins(n, n_agents, n_projects):
    return [
        builtin_target("coordinate", component=0),
        builtin_target("coordinate", component=1),
        builtin_target("avg_out_degree", n_projects=n_projects),
        builtin_target("avg_in_degree", n_agents=n_agents),
        builtin_target("avg_out_degree", n_projects=n_projects, logistic_form=True),
        builtin_target("avg_marginal_effect", n=n, component=0),
        builtin_target("avg_partial_effect", n=n, component=0),
    ]


def test_coordinate_gradient_is_unit_vector():
    tgt = builtin_target("coordinate", component=1)
    z = np.zeros((2, 2, 1))
    th = Theta(alpha_n=-4.0, beta=[1.4])
    g = tgt.d_theta(z, th)
    assert np.allclose(g, [0.0, 1.0])
    assert np.all(tgt.d_v(z, th) == 0.0)


def test_coordinate_d_v_identically_zero(rng):
    tgt = builtin_target("coordinate", component=0)
    for z, n, theta in random_cases(rng, 100):
        assert np.all(tgt.d_v(z, theta) == 0.0)


def test_out_degree_eval_at_zero_feature():
    # M * exp(alpha) with alpha = log(2.56) - log(200), M = 100, z = 0, v = 0
    tgt = builtin_target("avg_out_degree", n_projects=100)
    th = Theta(alpha_n=math.log(2.56) - math.log(200), beta=[math.log(4.0)])
    val = tgt.eval(np.zeros((1, 1, 1)), 0.0, th)
    assert val.shape == (1, 1)
    assert val[0, 0] == pytest.approx(100 * 2.56 / 200, rel=1e-12)


def test_analytic_theta_gradients_match_finite_differences(rng):
    for z, n, theta in random_cases(rng, 100):
        for tgt in all_builtins(n, 150, 170):
            analytic = np.asarray(tgt.d_theta(z, theta))
            th0 = theta.as_array()
            for comp in range(th0.size):
                def f(x, comp=comp, tgt=tgt):
                    v = th0.copy(); v[comp] = x
                    return tgt.eval(z, 0.0, Theta.from_array(v))
                fd = five_point(f, th0[comp], 1e-3)
                scale = np.maximum(np.abs(analytic[..., comp]), 1.0)
                assert np.all(np.abs(analytic[..., comp] - fd) / scale < 1e-5), tgt.kind


def test_analytic_v_derivatives_match_finite_differences(rng):
    for z, n, theta in random_cases(rng, 100):
        for tgt in all_builtins(n, 150, 170):
            analytic = np.asarray(tgt.d_v(z, theta))
            fd = five_point(lambda v: tgt.eval(z, v, theta), 0.0, 1e-3)
            scale = np.maximum(np.abs(analytic), 1.0)
            assert np.all(np.abs(analytic - fd) / scale < 1e-5), tgt.kind


def test_unknown_kind_rejected():
    with pytest.raises(ConfigError):
        builtin_target("total_degree")
    with pytest.raises(ConfigError):
        builtin_target("coordinate")  # missing component
    with pytest.raises(ConfigError):
        builtin_target("avg_out_degree")  # missing n_projects


def test_numeric_escape_hatch_matches_analytic(rng):
    exact = builtin_target("avg_out_degree", n_projects=80)
    wrapped = numeric_target("custom", exact.eval)
    z = rng.normal(-0.5, 1.0, size=(4, 3, 1))
    th = Theta(alpha_n=-4.5, beta=[1.2])
    assert np.allclose(wrapped.d_theta(z, th), exact.d_theta(z, th), rtol=1e-6)
    assert np.allclose(wrapped.d_v(z, th), exact.d_v(z, th), rtol=1e-6)


def test_effect_targets_report_scaled_and_unscaled():
    z = np.full((2, 2, 1), 0.3)
    th = Theta(alpha_n=-4.0, beta=[1.0])
    scaled = builtin_target("avg_marginal_effect", n=400, component=0)
    plain = builtin_target("avg_marginal_effect", n=400, component=0,
                           scale_by_n=False)
    assert np.allclose(scaled.eval(z, 0.0, th), 400.0 * plain.eval(z, 0.0, th))
