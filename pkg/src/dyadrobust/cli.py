"""Command-line entry point.

Subcommands: simulate (write a synthetic network to CSV), fit (per-
coefficient report from CSV data), mc (replication grid to CSV tables),
cv (print a bias-aware critical value), report (render an emitted summary
CSV as an aligned text table). Experiment grids are JSON config files
validated against a strict schema; flags only override scalars.

Exit codes: 0 success, 1 validation error, 2 numerical failure.
"""

from __future__ import annotations

import argparse
import csv
import json
import logging
import sys
from pathlib import Path

from .errors import ConfigError, DataError, EstimationError
from .ingest import FeatureSpec, dump_network, fit_report, load_network
from .mc import MCConfig, emit_tables, run_mc
from .robust import critical_value
from .simulate import SimulationDesign, simulate_network

_MC_SCHEMA = {
    "designs": list, "sigma_sq_grid": list, "n_grid": list, "estimators": list,
    "target_kind": str, "target_component": int, "k_n": int,
    "replications": int, "alpha": float, "master_seed": int,
    "threads": (int, str), "sigma_bar_sq": (float, int, str),
    "score": str, "oracle_draws": int,
}

_SIM_SCHEMA = {
    "design": str, "sigma_sq": (float, int), "n_agents": int,
    "n_projects": int, "seed": int,
}

_FEATURE_SCHEMA = {
    "name": str, "kind": str, "field_a": str, "field_b": str,
    "components": list, "standardize": bool,
}


def _check_keys(obj: dict, schema: dict, label: str):
    if not isinstance(obj, dict):
        raise ConfigError(f"{label}: expected a JSON object")
    for key, value in obj.items():
        if key not in schema:
            raise ConfigError(f"{label}: unknown key {key!r} "
                              f"(allowed: {sorted(schema)})")
        if not isinstance(value, schema[key]):
            raise ConfigError(f"{label}: key {key!r} has wrong type")
    return obj


def _load_json(path):
    try:
        with open(path, encoding="utf-8") as fh:
            return json.load(fh)
    except FileNotFoundError:
        raise ConfigError(f"config file not found: {path}") from None
    except json.JSONDecodeError as exc:
        raise ConfigError(f"invalid JSON in {path}: {exc}") from None


def _cmd_simulate(args) -> int:
    raw = _check_keys(_load_json(args.config), _SIM_SCHEMA, "simulate config")
    design = SimulationDesign(**raw)
    network = simulate_network(design)
    paths = dump_network(network, args.output_dir)
    print(f"wrote {paths['nodes_a']}, {paths['nodes_b']}, {paths['edges']} "
          f"(mean degree {network.mean_degree():.6f})")
    return 0


def _cmd_fit(args) -> int:
    spec_list = _load_json(args.features)
    if not isinstance(spec_list, list):
        raise ConfigError("features config must be a JSON list")
    specs = []
    for i, raw in enumerate(spec_list):
        _check_keys(raw, _FEATURE_SCHEMA, f"feature[{i}]")
        raw = dict(raw)
        raw["components"] = tuple(raw.get("components", ()))
        specs.append(FeatureSpec(**raw))
    network = load_network(args.nodes_a, args.nodes_b, args.edges, specs)
    paths = fit_report(network, args.k_n, args.sigma_bar_sq_grid,
                       args.output_dir, alpha=args.alpha)
    for p in paths:
        print(f"wrote {p}")
    return 0


def _cmd_mc(args) -> int:
    raw = _check_keys(_load_json(args.config), _MC_SCHEMA, "mc config")
    raw = dict(raw)
    for key in ("designs", "sigma_sq_grid", "n_grid", "estimators"):
        if key in raw:
            raw[key] = tuple(raw[key])
    if args.threads is not None:
        raw["threads"] = args.threads
    if args.replications is not None:
        raw["replications"] = args.replications
    cfg = MCConfig(**raw)
    summary = run_mc(cfg)
    paths = emit_tables(summary, args.output_dir, prefix=args.prefix)
    for p in paths:
        print(f"wrote {p}")
    if summary.any_cell_failed:
        print("error: at least one cell failed on every replication",
              file=sys.stderr)
        return 2
    return 0


def _cmd_cv(args) -> int:
    print(f"{critical_value(args.t, args.alpha):.6f}")
    return 0


def _cmd_report(args) -> int:
    path = Path(args.summary)
    if not path.exists():
        raise ConfigError(f"summary file not found: {path}")
    with open(path, newline="", encoding="utf-8") as fh:
        rows = [r for r in csv.reader(fh) if r and not r[0].startswith("#")]
    if not rows:
        raise DataError(f"{path}: empty summary")
    widths = [max(len(row[c]) for row in rows) for c in range(len(rows[0]))]
    for row in rows:
        print("  ".join(v.rjust(w) for v, w in zip(row, widths)))
    return 0


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="dyadrobust",
        description="Robust estimation for sparse bipartite dyadic regression")
    parser.add_argument("--log-level", default="warning",
                        choices=("debug", "info", "warning", "error"),
                        help="logging verbosity on standard error")
    sub = parser.add_subparsers(dest="command", required=True)

    p_sim = sub.add_parser("simulate", help="write a synthetic network to CSV")
    p_sim.add_argument("--config", required=True, help="JSON design file")
    p_sim.add_argument("--output-dir", default=".")
    p_sim.set_defaults(func=_cmd_simulate)

    p_fit = sub.add_parser("fit", help="per-coefficient report from CSV data")
    p_fit.add_argument("--nodes-a", required=True)
    p_fit.add_argument("--nodes-b", required=True)
    p_fit.add_argument("--edges", required=True)
    p_fit.add_argument("--features", required=True, help="JSON feature list")
    p_fit.add_argument("--k-n", type=int, default=3)
    p_fit.add_argument("--alpha", type=float, default=0.05)
    p_fit.add_argument("--sigma-bar-sq-grid", type=float, nargs="+",
                       default=[1.0, 2.0, 3.0, 4.0])
    p_fit.add_argument("--output-dir", default=".")
    p_fit.set_defaults(func=_cmd_fit)

    p_mc = sub.add_parser("mc", help="run a replication grid")
    p_mc.add_argument("--config", required=True, help="JSON grid file")
    p_mc.add_argument("--output-dir", default=".")
    p_mc.add_argument("--prefix", default="mc")
    p_mc.add_argument("--threads", type=int, default=None)
    p_mc.add_argument("--replications", type=int, default=None)
    p_mc.set_defaults(func=_cmd_mc)

    p_cv = sub.add_parser("cv", help="print the bias-aware critical value")
    p_cv.add_argument("--t", type=float, required=True,
                      help="bias-to-sd ratio (nonnegative)")
    p_cv.add_argument("--alpha", type=float, default=0.05)
    p_cv.set_defaults(func=_cmd_cv)

    p_rep = sub.add_parser("report", help="render a summary CSV as text")
    p_rep.add_argument("--summary", required=True)
    p_rep.set_defaults(func=_cmd_report)
    return parser


def main(argv=None) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return 1 if exc.code not in (0, None) else 0
    logging.basicConfig(level=getattr(logging, args.log_level.upper()),
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except (ConfigError, DataError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except EstimationError as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
