"""CSV ingestion of bipartite data and the per-coefficient report pipeline.

File schemas (UTF-8, header row required):
  nodes_a.csv : id, <attribute columns...>     one row per agent
  nodes_b.csv : id, <attribute columns...>     one row per project
  edges.csv   : a_id, b_id                     one row per link

Dyad features are built from a declarative list of FeatureSpec entries, in
declaration order, so downstream coefficient labels are stable.
"""

from __future__ import annotations

import csv
import logging
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import ConfigError, DataError
from .glm import fit_logistic, fit_poisson
from .moments import estimate_components
from .network import BipartiteNetwork
from .robust import influence_weights, one_step_estimate, plugin_estimate
from .sieve import regressor_augmented_basis
from .targets import builtin_target

logger = logging.getLogger(__name__)

FEATURE_KINDS = ("match", "product", "log_product", "abs_diff",
                 "raw_a", "raw_b", "interaction")


@dataclass(frozen=True)
class FeatureSpec:
    """One dyad feature built from node attributes.

    kind:
      match        1 if the two named attributes are equal
      product      attribute product
      log_product  log of the attribute product (attributes must be positive)
      abs_diff     absolute attribute difference
      raw_a/raw_b  broadcast a single-side attribute
      interaction  product of previously declared features (by name)
    """

    name: str
    kind: str
    field_a: str | None = None
    field_b: str | None = None
    components: tuple = field(default_factory=tuple)
    standardize: bool = False

    def __post_init__(self):
        if self.kind not in FEATURE_KINDS:
            raise ConfigError(f"unknown feature kind {self.kind!r}")
        object.__setattr__(self, "components", tuple(self.components))


def _read_nodes(path) -> tuple:
    path = Path(path)
    if not path.exists():
        raise DataError(f"missing file: {path}")
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise DataError(f"{path}: empty file") from None
        if not header or header[0] != "id":
            raise DataError(f"{path}: first column must be 'id'")
        ids, rows = [], []
        for lineno, row in enumerate(reader, start=2):
            if len(row) != len(header):
                raise DataError(f"{path}:{lineno}: expected {len(header)} fields, "
                                f"got {len(row)}")
            ids.append(row[0])
            try:
                rows.append([float(v) for v in row[1:]])
            except ValueError as exc:
                raise DataError(f"{path}:{lineno}: non-numeric attribute") from exc
    if len(set(ids)) != len(ids):
        raise DataError(f"{path}: duplicate node ids")
    return ids, header[1:], np.asarray(rows, dtype=np.float64).reshape(len(ids), -1)


def _read_edges(path, index_a, index_b) -> np.ndarray:
    path = Path(path)
    if not path.exists():
        raise DataError(f"missing file: {path}")
    y = np.zeros((len(index_a), len(index_b)))
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise DataError(f"{path}: empty file") from None
        if header[:2] != ["a_id", "b_id"]:
            raise DataError(f"{path}: header must start with a_id,b_id")
        for lineno, row in enumerate(reader, start=2):
            if len(row) < 2:
                raise DataError(f"{path}:{lineno}: malformed edge row")
            a, b = row[0], row[1]
            if a not in index_a:
                raise DataError(f"{path}:{lineno}: unknown agent id {a!r}")
            if b not in index_b:
                raise DataError(f"{path}:{lineno}: unknown project id {b!r}")
            i, j = index_a[a], index_b[b]
            if y[i, j] == 1.0:
                raise DataError(f"{path}:{lineno}: duplicate edge ({a}, {b})")
            y[i, j] = 1.0
    return y


def _column(attrs, headers, name, path_label):
    try:
        return attrs[:, headers.index(name)]
    except ValueError:
        raise ConfigError(f"feature references unknown {path_label} "
                          f"attribute {name!r}") from None


def build_features(x_attrs, x_headers, w_attrs, w_headers, specs) -> np.ndarray:
    """Evaluate FeatureSpecs into the (N, M, d_z) dyad feature array."""
    built: dict[str, np.ndarray] = {}
    order = []
    for spec in specs:
        if spec.name in built:
            raise ConfigError(f"duplicate feature name {spec.name!r}")
        if spec.kind == "interaction":
            vals = np.ones((len(x_attrs), len(w_attrs)))
            for comp in spec.components:
                if comp not in built:
                    raise ConfigError(f"interaction {spec.name!r} references "
                                      f"undeclared feature {comp!r}")
                vals = vals * built[comp]
        else:
            a = (_column(x_attrs, x_headers, spec.field_a, "agent")[:, None]
                 if spec.kind != "raw_b" else None)
            b = (_column(w_attrs, w_headers, spec.field_b, "project")[None, :]
                 if spec.kind != "raw_a" else None)
            if spec.kind == "match":
                vals = (a == b).astype(np.float64)
            elif spec.kind == "product":
                vals = a * b
            elif spec.kind == "log_product":
                prod = a * b
                if (prod <= 0).any():
                    raise DataError(f"feature {spec.name!r}: log_product needs "
                                    "positive attributes")
                vals = np.log(prod)
            elif spec.kind == "abs_diff":
                vals = np.abs(a - b)
            elif spec.kind == "raw_a":
                vals = np.broadcast_to(a, (len(x_attrs), len(w_attrs))).copy()
            else:  # raw_b
                vals = np.broadcast_to(b, (len(x_attrs), len(w_attrs))).copy()
        if spec.standardize:
            sd = vals.std()
            if sd > 0:
                vals = (vals - vals.mean()) / sd
        built[spec.name] = vals
        order.append(spec.name)
    return np.stack([built[name] for name in order], axis=2)


def load_network(nodes_a, nodes_b, edges, features) -> BipartiteNetwork:
    """Load a bipartite network from the three CSV files and a feature list."""
    ids_a, head_a, attrs_a = _read_nodes(nodes_a)
    ids_b, head_b, attrs_b = _read_nodes(nodes_b)
    index_a = {v: i for i, v in enumerate(ids_a)}
    index_b = {v: i for i, v in enumerate(ids_b)}
    y = _read_edges(edges, index_a, index_b)
    z = build_features(attrs_a, head_a, attrs_b, head_b, features)
    return BipartiteNetwork(adjacency=y, x_attrs=attrs_a, w_attrs=attrs_b,
                            z_features=z, names=tuple(s.name for s in features))


def dump_network(network: BipartiteNetwork, out_dir,
                 x_headers=None, w_headers=None) -> dict:
    """Write a network back out in the ingestion schema (full float precision)."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    paths = {"nodes_a": out_dir / "nodes_a.csv",
             "nodes_b": out_dir / "nodes_b.csv",
             "edges": out_dir / "edges.csv"}
    x_headers = x_headers or [f"x{k}" for k in range(network.x_attrs.shape[1])]
    w_headers = w_headers or [f"w{k}" for k in range(network.w_attrs.shape[1])]
    for key, attrs, headers, tag in (("nodes_a", network.x_attrs, x_headers, "a"),
                                     ("nodes_b", network.w_attrs, w_headers, "b")):
        with open(paths[key], "w", newline="", encoding="utf-8") as fh:
            writer = csv.writer(fh)
            writer.writerow(["id"] + list(headers))
            for i, row in enumerate(attrs):
                writer.writerow([f"{tag}{i}"] + [repr(float(v)) for v in row])
    with open(paths["edges"], "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["a_id", "b_id"])
        for i, j in zip(*np.nonzero(network.adjacency)):
            writer.writerow([f"a{i}", f"b{j}"])
    return paths


_REPORT_COLUMNS = ("parameter", "estimator", "coeff", "se", "max_rmse",
                   "ci_lo", "ci_hi", "length", "adjm")


def fit_report(network: BipartiteNetwork, k_n: int, sigma_bar_grid,
               out_dir, alpha: float = 0.05, include_out_degree: bool = True,
               score: str = "exp") -> list:
    """Per-coefficient robust and plug-in estimates, one CSV per bound value.

    Rows cover every index coordinate (features in declaration order, then
    the constant) and optionally the average out-degree, for the one-step
    robust estimator and both plug-in comparators. The ``adjm`` column is
    the one-step adjustment (zero for plug-ins).
    """
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    n = network.n_total
    basis = regressor_augmented_basis(network, k_n)
    regs = network.regressors()
    fits = {"logit": fit_logistic(network), "poisson": fit_poisson(network)}
    names = list(network.names) or [f"z{k}" for k in range(network.d_z)]
    coords = [(name, k + 1) for k, name in enumerate(names)] + [("constant", 0)]

    targets = [("coordinate", comp, label) for label, comp in coords]
    if include_out_degree:
        targets.append(("avg_out_degree", None, "avg_out_degree"))

    paths = []
    for sigma_bar_sq in sigma_bar_grid:
        rows = []
        for kind, comp, label in targets:
            target = builtin_target(kind, n=n, n_agents=network.n_agents,
                                    n_projects=network.n_projects, component=comp)
            comps_h = estimate_components(network, fits["logit"].theta, basis,
                                          target, sigma_bar_sq, score=score)
            rob = one_step_estimate(network, fits["logit"].theta, basis, target,
                                    comps_h, alpha=alpha, score=score)
            rows.append((label, "robust", rob))
            for est_name, fit in fits.items():
                comps_f = estimate_components(network, fit.theta, regs, target,
                                              sigma_bar_sq, score=score)
                kap = influence_weights(fit, n, comps_f.target_grad,
                                        flavor="hessian")
                plug = plugin_estimate(network, fit.theta, target, comps_f, kap,
                                       alpha=alpha)
                rows.append((label, f"plugin_{est_name}", plug))
        path = out_dir / f"report_sigma_{sigma_bar_sq:g}.csv"
        with open(path, "w", newline="", encoding="utf-8") as fh:
            fh.write(f"# k_n={basis.dim} sigma_bar_sq={sigma_bar_sq:g} "
                     f"alpha={alpha:g} standardize=declared-per-feature\n")
            writer = csv.writer(fh)
            writer.writerow(_REPORT_COLUMNS)
            for label, est, res in rows:
                writer.writerow([
                    label, est, f"{res.psi_hat:.6f}", f"{res.se:.6f}",
                    f"{res.wc_rmse:.6f}", f"{res.ci_lo:.6f}", f"{res.ci_hi:.6f}",
                    f"{res.length:.6f}", f"{res.adjustment:.6f}"])
        paths.append(path)
    return paths
