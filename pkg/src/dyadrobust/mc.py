"""Replication harness: simulate, fit, estimate, and tabulate over a design grid.

Each replication is a pure function of a derived seed, so results are
independent of the worker count; per-cell aggregation always reduces in
replication order. Failed fits are counted and excluded, never retried.
"""

from __future__ import annotations

import csv
import logging
import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import ConfigError, EstimationError
from .glm import fit_logistic, fit_poisson
from .moments import estimate_components
from .robust import influence_weights, one_step_estimate, plugin_estimate
from .sieve import hermite_basis
from .simulate import (SimulationDesign, eta_bound_oracle, simulate_network,
                       true_psi_oracle)
from .targets import builtin_target

logger = logging.getLogger(__name__)

ESTIMATORS = ("robust_logistic_init", "robust_poisson_init",
              "plugin_logistic", "plugin_poisson")

_MASK64 = (1 << 64) - 1


def _splitmix64(z: int) -> int:
    """One SplitMix64 finalization step (documented constants)."""
    z = (z + 0x9E3779B97F4A7C15) & _MASK64
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK64
    return z ^ (z >> 31)


def mix_seed(master_seed: int, cell_id: int, replication: int) -> int:
    """Derive a 64-bit stream seed from (master, cell, replication)."""
    s = _splitmix64(master_seed & _MASK64)
    s = _splitmix64(s ^ ((cell_id * 0x9E3779B97F4A7C15) & _MASK64))
    return _splitmix64(s ^ ((replication * 0xBF58476D1CE4E5B9) & _MASK64))


@dataclass(frozen=True)
class MCConfig:
    """Grid and estimation settings for one harness run."""

    designs: tuple = ("latent_homophily",)
    sigma_sq_grid: tuple = (0.0, 1.0, 2.0, 3.0, 4.0)
    n_grid: tuple = (200,)                 # total node counts, split evenly
    estimators: tuple = ("robust_logistic_init",)
    target_kind: str = "coordinate"
    target_component: int = 1
    k_n: int = 2
    replications: int = 100
    alpha: float = 0.05
    master_seed: int = 20240915
    threads: int | str = 1
    sigma_bar_sq: float | str = "max_sigma_sq"
    score: str = "exp"
    oracle_draws: int = 1_000_000

    def __post_init__(self):
        if self.replications < 1:
            raise ConfigError("replications must be >= 1")
        for e in self.estimators:
            if e not in ESTIMATORS:
                raise ConfigError(f"unknown estimator {e!r}")
        for d in self.designs:
            SimulationDesign(design=d)  # validates the name
        if isinstance(self.threads, str) and self.threads != "auto":
            raise ConfigError("threads must be an integer or 'auto'")

    def resolved_threads(self) -> int:
        if self.threads == "auto":
            env = os.environ.get("DYADROBUST_THREADS")
            if env is not None and env.isdigit() and int(env) >= 1:
                return int(env)
            return min(os.cpu_count() or 1, 8)
        return max(int(self.threads), 1)


@dataclass
class MCSummary:
    """Per-cell aggregated metrics for every requested estimator."""

    config: MCConfig
    rows: list = field(default_factory=list)

    def cell(self, design, sigma_sq, n, estimator):
        for row in self.rows:
            if (row["design"] == design and row["sigma_sq"] == sigma_sq
                    and row["n"] == n and row["estimator"] == estimator):
                return row
        raise KeyError((design, sigma_sq, n, estimator))

    @property
    def any_cell_failed(self) -> bool:
        return any(r["n_failures"] >= self.config.replications for r in self.rows)


def _make_design(name, sigma_sq, n, seed=0):
    half = n // 2
    return SimulationDesign(design=name, sigma_sq=sigma_sq,
                            n_agents=half, n_projects=n - half, seed=seed)


def _make_target(cfg: MCConfig, design: SimulationDesign):
    return builtin_target(cfg.target_kind, n=design.n_total,
                          n_agents=design.n_agents, n_projects=design.n_projects,
                          component=cfg.target_component)


def _one_replication(design: SimulationDesign, cfg: MCConfig, sigma_bar_sq: float):
    """Run every requested estimator on one simulated network.

    Returns {estimator: record-tuple or None}; None marks a failed fit.
    """
    network = simulate_network(design)
    degree = network.mean_degree()
    target = _make_target(cfg, design)
    out = {}

    fits = {}
    for family, fitter in (("logistic", fit_logistic), ("poisson", fit_poisson)):
        wanted = any(e.endswith(f"{family}_init") or e == f"plugin_{family}"
                     for e in cfg.estimators)
        if not wanted:
            continue
        try:
            fits[family] = fitter(network)
        except EstimationError as exc:
            logger.debug("seed %d: %s fit failed: %s", design.seed, family, exc)
            fits[family] = None

    basis = None
    regs = network.regressors()
    for est in cfg.estimators:
        family = "logistic" if "logistic" in est else "poisson"
        fit = fits.get(family)
        if fit is None:
            out[est] = None
            continue
        try:
            if est.startswith("robust"):
                if basis is None:
                    basis = hermite_basis(network.z_features, cfg.k_n)
                comps = estimate_components(network, fit.theta, basis, target,
                                            sigma_bar_sq, score=cfg.score)
                res = one_step_estimate(network, fit.theta, basis, target, comps,
                                        alpha=cfg.alpha, score=cfg.score)
            else:
                comps = estimate_components(network, fit.theta, regs, target,
                                            sigma_bar_sq, score=cfg.score)
                kap = influence_weights(fit, network.n_total, comps.target_grad,
                                        flavor="hessian")
                res = plugin_estimate(network, fit.theta, target, comps, kap,
                                      alpha=cfg.alpha)
            out[est] = (res.psi_hat, res.se, res.ci_lo, res.ci_hi,
                        res.wc_rmse, degree, fit.grad_norm, res.worst_bias)
        except EstimationError as exc:
            logger.debug("seed %d: %s failed: %s", design.seed, est, exc)
            out[est] = None
    return out


def _rep_block(args):
    design_fields, seeds, cfg, sigma_bar_sq = args
    base = SimulationDesign(**design_fields)
    return [_one_replication(base.with_seed(s), cfg, sigma_bar_sq) for s in seeds]


def _resolve_sigma_bar(cfg: MCConfig, design: SimulationDesign, cell_id: int):
    if isinstance(cfg.sigma_bar_sq, (int, float)):
        return float(cfg.sigma_bar_sq)
    if cfg.sigma_bar_sq == "max_sigma_sq":
        return float(max(cfg.sigma_sq_grid))
    if cfg.sigma_bar_sq == "eta_oracle":
        return eta_bound_oracle(design, sigma_grid=cfg.sigma_sq_grid,
                                seed=mix_seed(cfg.master_seed, cell_id, 1 << 40))
    raise ConfigError(f"unknown sigma_bar_sq rule {cfg.sigma_bar_sq!r}")


def _true_value(cfg: MCConfig, design: SimulationDesign, cell_id: int):
    if cfg.target_kind == "coordinate":
        return float(design.theta0.as_array()[cfg.target_component])
    target = _make_target(cfg, design)
    value, _ = true_psi_oracle(design, target, draws=cfg.oracle_draws,
                               seed=mix_seed(cfg.master_seed, cell_id, 1 << 41))
    return value


def _aggregate(cell_meta, records, cfg, true_value):
    rows = []
    for est in cfg.estimators:
        recs = [r[est] for r in records if r[est] is not None]
        n_fail = len(records) - len(recs)
        row = dict(cell_meta, estimator=est, true=true_value, n_failures=n_fail)
        if not recs:
            row.update({k: float("nan") for k in
                        ("coeff", "rootn_bias", "se", "se_over_sd", "rmse",
                         "ci_lo", "ci_hi", "length", "coverage", "degree",
                         "max_grad_norm", "wc_bias")})
            rows.append(row)
            continue
        arr = np.asarray(recs)
        psi, se, lo, hi, rmse, degree, gnorm, wbias = arr.T
        sd = float(np.std(psi, ddof=1)) if len(recs) > 1 else float("nan")
        row.update(
            coeff=float(psi.mean()),
            rootn_bias=math.sqrt(cell_meta["n"]) * (float(psi.mean()) - true_value),
            se=float(se.mean()),
            se_over_sd=float(se.mean()) / sd if sd == sd and sd > 0 else float("nan"),
            rmse=float(rmse.mean()),
            ci_lo=float(lo.mean()),
            ci_hi=float(hi.mean()),
            length=float((hi - lo).mean()),
            coverage=float(np.mean((lo <= true_value) & (true_value <= hi))),
            degree=float(degree.mean()),
            max_grad_norm=float(gnorm.max()),
            wc_bias=float(wbias.mean()),
        )
        rows.append(row)
    return rows


def run_mc(cfg: MCConfig) -> MCSummary:
    """Execute the full design grid and aggregate the table metrics."""
    summary = MCSummary(cfg)
    workers = cfg.resolved_threads()
    cells = [(d, s, n) for d in cfg.designs for n in cfg.n_grid
             for s in cfg.sigma_sq_grid]
    pool = ProcessPoolExecutor(max_workers=workers) if workers > 1 else None
    try:
        for cell_id, (dname, s_sq, n) in enumerate(cells):
            base = _make_design(dname, s_sq, n)
            sigma_bar = _resolve_sigma_bar(cfg, base, cell_id)
            seeds = [mix_seed(cfg.master_seed, cell_id, r)
                     for r in range(cfg.replications)]
            design_fields = dict(design=dname, sigma_sq=s_sq,
                                 n_agents=base.n_agents, n_projects=base.n_projects)
            if pool is None:
                records = _rep_block((design_fields, seeds, cfg, sigma_bar))
            else:
                chunk = max(1, math.ceil(len(seeds) / (workers * 4)))
                blocks = [(design_fields, seeds[i:i + chunk], cfg, sigma_bar)
                          for i in range(0, len(seeds), chunk)]
                records = []
                for block in pool.map(_rep_block, blocks):
                    records.extend(block)
            true_value = _true_value(cfg, base, cell_id)
            logger.info("cell %d/%d (%s, sigma_sq=%g, n=%d): %d replications",
                        cell_id + 1, len(cells), dname, s_sq, n, len(records))
            meta = dict(design=dname, sigma_sq=s_sq, n=n, sigma_bar_sq=sigma_bar)
            rows = _aggregate(meta, records, cfg, true_value)
            for row in rows:
                if row["n_failures"]:
                    logger.warning("cell %s: %d failed replication(s) excluded",
                                   (dname, s_sq, n), row["n_failures"])
            summary.rows.extend(rows)
    finally:
        if pool is not None:
            pool.shutdown()
    return summary


_COLUMNS = ("n", "sigma_sq", "true", "coeff", "rootn_bias", "se", "se_over_sd",
            "rmse", "ci_lo", "ci_hi", "length", "coverage", "degree",
            "n_failures")


def _fmt(value) -> str:
    if isinstance(value, int):
        return str(value)
    if value != value:  # NaN
        return "NA"
    return f"{value:.6f}"


def emit_tables(summary: MCSummary, out_dir, prefix: str = "mc") -> list:
    """Write one CSV per estimator in the reference table column order."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    cfg = summary.config
    paths = []
    for est in cfg.estimators:
        path = out_dir / f"{prefix}_{cfg.target_kind}_{est}.csv"
        rows = [r for r in summary.rows if r["estimator"] == est]
        rows.sort(key=lambda r: (r["n"], r["sigma_sq"], r["design"]))
        with open(path, "w", newline="", encoding="utf-8") as fh:
            writer = csv.writer(fh)
            writer.writerow(("design",) + _COLUMNS)
            for r in rows:
                writer.writerow([r["design"]] + [
                    _fmt(r[c]) if c not in ("n", "n_failures")
                    else str(int(r[c])) for c in _COLUMNS])
        paths.append(path)
    return paths
