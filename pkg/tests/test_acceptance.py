"""Acceptance suite: every exit criterion at its stated tolerance.

Heavy replication grids are session-scoped fixtures shared across the
criteria that read them. Each criterion prints one PASS/FAIL line (run
pytest with -s or check the captured output). Runtimes are desk scale:
the full module takes several minutes on one core.
"""

import math
import time

import numpy as np
import pytest
from scipy.stats import norm

from dyadrobust import (BipartiteNetwork, MCConfig, SimulationDesign, Scores,
                        builtin_target, critical_value, emit_tables,
                        estimate_sigma, fit_logistic, optimal_sensitivity,
                        run_mc, simulate_network, true_psi_oracle,
                        worst_case_mse)

from helpers import kkt_sensitivity, naive_sigma, random_components

MASTER = 20240915


def report(criterion, ok, detail):
    print(f"[criterion {criterion}] {'PASS' if ok else 'FAIL'}: {detail}",
          flush=True)
    return ok


# ---------------------------------------------------------------- fixtures

@pytest.fixture(scope="module")
def table1_run():
    """Reference-table cell: homophily design, sigma^2 = 0, n = 200, k_n = 2."""
    cfg = MCConfig(designs=("latent_homophily",), sigma_sq_grid=(0.0,),
                   n_grid=(200,), estimators=("robust_logistic_init",),
                   target_kind="coordinate", target_component=1, k_n=2,
                   replications=2000, alpha=0.05, master_seed=MASTER,
                   threads=1, sigma_bar_sq=4.0)
    t0 = time.perf_counter()
    summary = run_mc(cfg)
    print(f"\n[table1 fixture] {time.perf_counter() - t0:.0f}s", flush=True)
    return summary


@pytest.fixture(scope="module")
def ratio_run():
    """All sigma^2 cells with plug-in comparators at the oracle bound."""
    cfg = MCConfig(designs=("latent_homophily",),
                   sigma_sq_grid=(0.0, 1.0, 2.0, 3.0, 4.0), n_grid=(200,),
                   estimators=("robust_logistic_init", "plugin_logistic",
                               "plugin_poisson"),
                   target_kind="coordinate", target_component=1, k_n=2,
                   replications=2000, alpha=0.05, master_seed=MASTER + 1,
                   threads=1, sigma_bar_sq="eta_oracle")
    t0 = time.perf_counter()
    summary = run_mc(cfg)
    print(f"\n[ratio fixture] {time.perf_counter() - t0:.0f}s", flush=True)
    return summary


@pytest.fixture(scope="module")
def outdegree_run():
    """Average out-degree target at k_n = 3 on the sigma^2 = 0 cell."""
    cfg = MCConfig(designs=("latent_homophily",), sigma_sq_grid=(0.0,),
                   n_grid=(200,), estimators=("robust_logistic_init",),
                   target_kind="avg_out_degree", target_component=None,
                   k_n=3, replications=2000, alpha=0.05,
                   master_seed=MASTER + 2, threads=1, sigma_bar_sq=4.0,
                   oracle_draws=4_000_000)
    t0 = time.perf_counter()
    summary = run_mc(cfg)
    print(f"\n[outdegree fixture] {time.perf_counter() - t0:.0f}s", flush=True)
    return summary


@pytest.fixture(scope="module")
def size_run():
    """Larger networks, all designs, boundary misspecification levels."""
    cfg = MCConfig(designs=("latent_homophily", "functional_form",
                            "semiparametric"),
                   sigma_sq_grid=(0.0, 4.0), n_grid=(400, 800),
                   estimators=("robust_logistic_init",),
                   target_kind="coordinate", target_component=1, k_n=2,
                   replications=1000, alpha=0.05, master_seed=MASTER + 3,
                   threads=1, sigma_bar_sq=4.0)
    t0 = time.perf_counter()
    summary = run_mc(cfg)
    print(f"\n[size fixture] {time.perf_counter() - t0:.0f}s", flush=True)
    return summary


# ------------------------------------------------------------- criterion 1

def test_criterion_1_closed_form_equals_kkt_oracle():
    rng = np.random.default_rng(MASTER)
    t0 = time.perf_counter()
    worst_gap = worst_resid = 0.0
    for _ in range(50):
        k = int(rng.integers(2, 9))
        d = int(rng.integers(2, 4))
        if d > k:
            d = k
        comps = random_components(rng, k, d, float(rng.uniform(0.0, 4.0)))
        kap = optimal_sensitivity(comps)
        ref = kkt_sensitivity(comps.sens_quad, comps.sens_lin, comps.jacobian,
                              comps.target_grad)
        worst_gap = max(worst_gap, float(np.max(np.abs(kap - ref))))
        worst_resid = max(worst_resid, float(np.max(np.abs(
            comps.jacobian.T @ kap - comps.target_grad))))
    elapsed = time.perf_counter() - t0
    ok = worst_gap < 1e-6 and worst_resid <= 1e-8 and elapsed < 1.0
    assert report(1, ok, f"sup-gap {worst_gap:.2e}, residual {worst_resid:.2e}, "
                         f"{elapsed:.2f}s")


# ------------------------------------------------------------- criterion 2

def test_criterion_2_pairwise_sum_identity():
    rng = np.random.default_rng(MASTER + 10)
    t0 = time.perf_counter()
    worst = 0.0
    for _ in range(3):
        n_a = int(rng.integers(5, 21))
        n_p = int(rng.integers(5, 21))
        k = int(rng.integers(2, 4))
        s_y = rng.normal(0, 2, (n_a, n_p))
        s_g = rng.normal(0, 1, (n_a, n_p))
        s_g -= s_g.mean()
        h = rng.normal(0, 1, (n_a, n_p, k))
        h[..., 0] = 1.0
        phi = n_p / (n_a + n_p)
        fast = estimate_sigma(Scores(s_y, s_g), h, phi)
        ref = naive_sigma(s_y, s_g, h, phi)
        for got, want in zip(fast, ref):
            worst = max(worst, float(np.max(np.abs(np.asarray(got) - want))))
    elapsed = time.perf_counter() - t0
    ok = worst <= 1e-12 and elapsed < 1.0
    assert report(2, ok, f"max |fast - naive| {worst:.2e}, {elapsed:.2f}s")


# ------------------------------------------------------------- criterion 3

def test_criterion_3_critical_value():
    t0 = time.perf_counter()
    base = critical_value(0.0, 0.05)
    rng = np.random.default_rng(MASTER + 20)
    draws = np.abs(rng.normal(1.0, 1.0, 10_000_000))
    q_sim = float(np.quantile(draws, 0.95))
    dens = norm.pdf(q_sim - 1.0) + norm.pdf(-q_sim - 1.0)
    se = math.sqrt(0.95 * 0.05 / draws.size) / dens
    cv1 = critical_value(1.0, 0.05)
    elapsed = time.perf_counter() - t0
    ok = abs(base - 1.959964) <= 1e-4 and abs(cv1 - q_sim) <= 3 * se \
        and elapsed < 10.0
    assert report(3, ok, f"cv(0)={base:.6f}, cv(1)={cv1:.4f} vs sim "
                         f"{q_sim:.4f} (3se={3 * se:.1e}), {elapsed:.1f}s")


# ------------------------------------------------------------- criterion 4

def test_criterion_4_mean_coverage_degree(table1_run):
    row = table1_run.cell("latent_homophily", 0.0, 200, "robust_logistic_init")
    ok_mean = abs(row["coeff"] - 1.385) <= 0.015
    ok_cov = row["coverage"] >= 0.99
    ok_deg = abs(row["degree"] - 0.0104) <= 0.0015
    detail = (f"mean {row['coeff']:.4f} (1.385±0.015), coverage "
              f"{row['coverage']:.4f} (>=0.99), degree {row['degree']:.6f} "
              f"(0.0104±0.0015)")
    assert report("4 mean/coverage/degree", ok_mean and ok_cov and ok_deg,
                  detail)


def test_criterion_4_ci_length(table1_run):
    """Mean interval length against the reference band 1.46 ± 0.05.

    Known shortfall: with the folded-normal critical value mandated here the
    mean length sits a few percent below the band; adding the worst-case
    bias and the two-sided normal quantile instead (the additive honest
    interval) reproduces the reference value. See the diagnostic line.
    """
    row = table1_run.cell("latent_homophily", 0.0, 200, "robust_logistic_init")
    additive = 2.0 * (row["wc_bias"] + 1.959964 * row["se"])
    ok = abs(row["length"] - 1.46) <= 0.05
    report("4 CI length", ok,
           f"mean length {row['length']:.4f} (band 1.46±0.05); additive-form "
           f"equivalent {additive:.4f}")
    assert ok


# ------------------------------------------------------------- criterion 5

def test_criterion_5_worst_case_mse_ordering(ratio_run):
    cells = [(s, ratio_run.cell("latent_homophily", s, 200, est)["rmse"])
             for s in (0.0, 1.0, 2.0, 3.0, 4.0)
             for est in ("robust_logistic_init",)]
    ratios_logit, ratios_pois = {}, {}
    for s, _ in cells:
        rob = ratio_run.cell("latent_homophily", s, 200,
                             "robust_logistic_init")["rmse"]
        ratios_logit[s] = ratio_run.cell("latent_homophily", s, 200,
                                         "plugin_logistic")["rmse"] / rob
        ratios_pois[s] = ratio_run.cell("latent_homophily", s, 200,
                                        "plugin_poisson")["rmse"] / rob
    r_logit, r_pois = ratios_logit[0.0], ratios_pois[0.0]
    ok_bands = 1.05 <= r_logit <= 1.13 and 1.00 <= r_pois <= 1.04
    ok_every = all(v > 1.0 for v in ratios_logit.values()) and \
        all(v > 1.0 for v in ratios_pois.values())
    detail = (f"logit/robust {r_logit:.4f} in [1.05,1.13], pois/robust "
              f"{r_pois:.4f} in [1.00,1.04]; per-cell logit "
              f"{[round(v, 3) for v in ratios_logit.values()]}, pois "
              f"{[round(v, 3) for v in ratios_pois.values()]}")
    assert report(5, ok_bands and ok_every, detail)


def test_reference_mean_levels(ratio_run):
    """Reference mean estimates and worst-case rMSE at the oracle bound."""
    logit = ratio_run.cell("latent_homophily", 0.0, 200, "plugin_logistic")
    pois = ratio_run.cell("latent_homophily", 0.0, 200, "plugin_poisson")
    rob = ratio_run.cell("latent_homophily", 0.0, 200, "robust_logistic_init")
    assert logit["coeff"] == pytest.approx(1.418, abs=0.02)
    assert pois["coeff"] == pytest.approx(1.384, abs=0.02)
    assert rob["coeff"] == pytest.approx(1.385, abs=0.015)
    assert 2.0 <= rob["rmse"] <= 2.35  # reference level 2.16


# ------------------------------------------------------------- criterion 6

def test_criterion_6_psi_mean(outdegree_run):
    """Mean out-degree estimate against the reference band 1.021 ± 0.01.

    Known shortfall: the pipeline's population mean sits at about 1.031,
    exactly at the band edge, because the reference anchor bakes in the
    source tables' own replication noise (their plug-in column realization
    runs about one standard error below this pipeline's). The one-step
    adjustment itself matches the reference decomposition (-0.032).
    """
    row = outdegree_run.cell("latent_homophily", 0.0, 200,
                             "robust_logistic_init")
    ok = abs(row["coeff"] - 1.021) <= 0.01
    report("6 psi mean", ok, f"mean {row['coeff']:.4f} (band 1.021±0.01), "
                             f"plug-in part minus adjustment; internal truth "
                             f"{row['true']:.4f}")
    assert ok


def test_criterion_6_coverage(outdegree_run):
    row = outdegree_run.cell("latent_homophily", 0.0, 200,
                             "robust_logistic_init")
    ok = abs(row["coverage"] - 0.93) <= 0.02
    assert report("6 coverage", ok,
                  f"coverage {row['coverage']:.4f} (band 0.93±0.02)")


def test_criterion_6_true_value_oracle():
    """Brute-force target value against the reference figure 1.0408 ± 0.003.

    Known shortfall: the generator calibrated to the reference degree
    column yields a population value near 1.0347 (confirmed by closed form
    and by simulated mean degree), about 0.006 below the reference figure,
    which carries Monte Carlo noise of the same size. The band is asserted
    as stated.
    """
    design = SimulationDesign(sigma_sq=0.0)
    tgt = builtin_target("avg_out_degree", n_projects=100)
    val, se = true_psi_oracle(design, tgt, draws=4_000_000, seed=MASTER)
    ok = abs(val - 1.0408) <= 0.003
    report("6 true-value oracle", ok,
           f"oracle {val:.5f}±{se:.5f} vs band 1.0408±0.003 "
           f"(closed form 1.03476)")
    assert ok


# ------------------------------------------------------------- criterion 7

def test_criterion_7_size_control(size_run):
    floor = 0.95 - 2.0 * math.sqrt(0.05 * 0.95 / 1000.0)
    worst, worst_cell = 1.0, None
    for row in size_run.rows:
        if row["coverage"] < worst:
            worst = row["coverage"]
            worst_cell = (row["design"], row["sigma_sq"], row["n"])
    ok = worst >= floor
    assert report(7, ok, f"worst coverage {worst:.4f} at {worst_cell} "
                         f"(floor {floor:.4f}) over {len(size_run.rows)} cells")


# ------------------------------------------------------------- criterion 8

def test_criterion_8_thread_determinism(tmp_path):
    base = dict(designs=("latent_homophily",), sigma_sq_grid=(0.0, 4.0),
                n_grid=(60,), estimators=("robust_logistic_init",
                                          "plugin_poisson"),
                target_kind="coordinate", target_component=1, k_n=2,
                replications=30, master_seed=MASTER + 4, sigma_bar_sq=1.0)
    paths1 = emit_tables(run_mc(MCConfig(threads=1, **base)), tmp_path / "t1")
    paths4 = emit_tables(run_mc(MCConfig(threads=4, **base)), tmp_path / "t4")
    same = all(p1.read_bytes() == p4.read_bytes()
               for p1, p4 in zip(paths1, paths4))
    assert report(8, same, f"{len(paths1)} CSVs byte-identical across "
                           f"threads 1 vs 4")


# ------------------------------------------------------------- criterion 9

def test_criterion_9_glm_correctness(table1_run, ratio_run, outdegree_run,
                                     size_run):
    worst = 0.0
    for summary in (table1_run, ratio_run, outdegree_run, size_run):
        for row in summary.rows:
            worst = max(worst, row["max_grad_norm"])
    net = simulate_network(SimulationDesign(seed=MASTER))
    scaled = BipartiteNetwork(adjacency=net.adjacency, x_attrs=net.x_attrs,
                              w_attrs=net.w_attrs,
                              z_features=net.z_features * 2.5)
    f0, f1 = fit_logistic(net), fit_logistic(scaled)
    inv_gap = max(abs(f1.theta.beta[0] - f0.theta.beta[0] / 2.5),
                  abs(f1.theta.alpha_n - f0.theta.alpha_n))
    ok = worst <= 1e-10 and inv_gap <= 1e-8
    assert report(9, ok, f"max gradient sup-norm {worst:.2e} (<=1e-10), "
                         f"rescaling invariance gap {inv_gap:.2e} (<=1e-8)")
