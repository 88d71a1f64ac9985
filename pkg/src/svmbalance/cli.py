"""Command-line interface.

Subcommands: ``path`` (trace the regularization path of a CSV dataset),
``estimate`` (effect estimate at a selected frontier point), ``qip-compare``
(integer-program comparison along the path), ``simulate`` (Monte Carlo
runs of the built-in scenarios), ``diagnose`` (per-lambda balance records)
and ``rerun`` (repeat a run from its manifest).

Every command echoes its full configuration, plus content digests of its
inputs and outputs, into ``<output>.manifest.json``; rerunning from that
manifest reproduces the outputs bit-exactly. Exit codes: 0 success,
2 validation error, 3 solver failure, 4 infeasible selection criterion.
"""

from __future__ import annotations

import argparse
import csv
import hashlib
import json
import sys

from . import __version__
from .balance import balance_report
from .data import load_csv, normalize_simplex, validate
from .errors import (DataValidationError, InfeasibleCriterionError, PathError,
                     SolverError)
from .frontier import build_frontier, select, write_frontier_csv
from .kernels import KernelSpec, build_q
from .path import compute_path
from .qip import solve_qip_exact, solve_qip_heuristic, qip_objective
from .simulate import MonteCarloSpec, run_monte_carlo
from .balance import coverage as qip_coverage


def _sha256(path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as f:
        for chunk in iter(lambda: f.read(1 << 20), b""):
            h.update(chunk)
    return h.hexdigest()


def read_config_file(path) -> dict:
    """Plain key=value config text; '#' starts a comment."""
    out = {}
    with open(path) as f:
        for line in f:
            line = line.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise DataValidationError(f"bad config line (need key = value): {line!r}")
            key, value = (s.strip() for s in line.split("=", 1))
            out[key.replace("-", "_")] = value
    return out


def _coerce(value, like):
    if like is None or isinstance(like, str) or value is None:
        return value
    if isinstance(like, bool):
        return str(value).lower() in ("1", "true", "yes")
    if isinstance(like, int):
        return int(value)
    if isinstance(like, float):
        return float(value)
    return value


DEFAULTS = {
    "input": None,
    "treatment": "treatment",
    "outcome": None,
    "covariates": None,        # comma-separated names; default all numeric
    "kernel": "linear",
    "degree": 2,
    "scale_c": 1.0,
    "gamma": "median",
    "literal_polynomial": False,
    "lambda_min": 1e-3,
    "criterion": "elbow",
    "target": None,
    "estimand": "sate",
    "seed": 0,
    "output": None,
    "summary": None,
    "exact_cap": 24,
    "heuristic": False,
    "time_budget": 5.0,
    "scenario": "a",
    "n": 200,
    "reps": 10,
    "lambdas": "1.0",
}


def build_config(args) -> dict:
    """Merge defaults, config file and explicit flags into one mapping."""
    config = dict(DEFAULTS)
    if getattr(args, "config", None):
        for k, v in read_config_file(args.config).items():
            if k not in config and k != "command":
                raise DataValidationError(f"unknown config key {k!r}")
            config[k] = _coerce(v, DEFAULTS.get(k))
    for key in config:
        val = getattr(args, key, None)
        if val is not None:
            config[key] = val
    config["command"] = args.command
    return config


def kernel_from_config(config) -> KernelSpec:
    family = config["kernel"]
    gamma = config["gamma"]
    if isinstance(gamma, str) and gamma != "median":
        gamma = float(gamma)
    return KernelSpec(
        family=family,
        degree=int(config["degree"]),
        scale_c=float(config["scale_c"]),
        gamma=gamma if family == "rbf" else None,
        explicit_features=not config["literal_polynomial"],
    )


def _load_dataset(config):
    if not config.get("input"):
        raise DataValidationError("an --input CSV is required")
    covs = config.get("covariates")
    if isinstance(covs, str):
        covs = [c.strip() for c in covs.split(",") if c.strip()]
    ds = load_csv(config["input"], config["treatment"],
                  outcome=config.get("outcome"), covariates=covs)
    validate(ds).raise_if_invalid()
    return ds


def _prepare(config, need_outcome=False):
    ds = _load_dataset(config)
    if need_outcome and ds.Y is None:
        raise DataValidationError("this command needs an --outcome column")
    spec = kernel_from_config(config)
    qm, Xs, spec = build_q(ds.X, ds.W, spec)
    path = compute_path(qm.Q, ds.W, lambda_min=float(config["lambda_min"]))
    return ds, qm, Xs, spec, path


def write_manifest(config, inputs, outputs):
    manifest = {
        "command": config["command"],
        "config": {k: v for k, v in config.items()},
        "inputs": {str(p): _sha256(p) for p in inputs},
        "outputs": {str(p): _sha256(p) for p in outputs},
        "version": __version__,
    }
    target = (config.get("output") or config.get("summary")) + ".manifest.json"
    with open(target, "w") as f:
        json.dump(manifest, f, indent=2, sort_keys=True, default=str)
    return target


def cmd_path(config) -> int:
    if not config.get("output"):
        raise DataValidationError("path needs --output for the breakpoint CSV")
    ds, qm, Xs, spec, path = _prepare(config)
    points = build_frontier(path, qm.Q, ds.W, Y=ds.Y, X=Xs,
                            estimand=config["estimand"])
    with open(config["output"], "w", newline="") as f:
        write_frontier_csv(points, f)
    selections = {}
    for crit in ("imbalance", "elbow", "balance"):
        pt = select(points, crit)
        selections[crit] = {"lambda": pt.lam, "weight_sum": pt.weight_sum,
                            "ess": pt.ess, "mmd": pt.mmd,
                            "normed_dim": pt.normed_dim}
    summary = {
        "n": ds.n, "n_treated": ds.n_treated, "n_control": ds.n_control,
        "kernel": spec.to_dict(),
        "lambda_max": path.lambda_max,
        "terminal_lambda": path.terminal_lambda,
        "lambda_min": float(config["lambda_min"]),
        "n_breakpoints": path.n_breakpoints,
        "termination": path.termination,
        "selections": selections,
    }
    outputs = [config["output"]]
    if config.get("summary"):
        with open(config["summary"], "w") as f:
            json.dump(summary, f, indent=2, sort_keys=True)
        outputs.append(config["summary"])
    write_manifest(config, [config["input"]], outputs)
    print(json.dumps(summary, sort_keys=True))
    return 0


def cmd_estimate(config) -> int:
    if not config.get("output"):
        raise DataValidationError("estimate needs --output for the JSON record")
    ds, qm, Xs, spec, path = _prepare(config, need_outcome=True)
    points = build_frontier(path, qm.Q, ds.W, Y=ds.Y, X=Xs,
                            estimand=config["estimand"])
    target = config.get("target")
    point = select(points, config["criterion"],
                   None if target is None else float(target))
    record = point.estimate.to_dict()
    record["lambda"] = point.lam
    record["criterion"] = config["criterion"]
    record["kernel"] = spec.to_dict()
    record["mmd"] = point.mmd
    record["weight_sum"] = point.weight_sum
    with open(config["output"], "w") as f:
        json.dump(record, f, indent=2, sort_keys=True)
    write_manifest(config, [config["input"]], [config["output"]])
    print(json.dumps(record, sort_keys=True))
    return 0


def cmd_qip_compare(config) -> int:
    if not config.get("output"):
        raise DataValidationError("qip-compare needs --output for the CSV")
    ds, qm, Xs, spec, path = _prepare(config)
    cap = int(config["exact_cap"])
    use_heuristic = bool(config["heuristic"])
    if ds.n > cap and not use_heuristic:
        raise DataValidationError(
            f"N = {ds.n} exceeds the exact cap {cap}; pass --heuristic to continue")
    rows = []
    for k in range(path.n_breakpoints):
        lam = float(path.lambdas[k])
        alpha = path.alphas[k]
        svm_obj = float(alpha @ qm.Q @ alpha / (2 * lam) - alpha.sum())
        if ds.n <= cap:
            qsol = solve_qip_exact(qm.Q, ds.W, lam, max_n=cap)
        else:
            qsol = solve_qip_heuristic(qm.Q, ds.W, lam,
                                       time_budget=float(config["time_budget"]),
                                       seed=int(config["seed"]))
        rows.append({
            "lambda": lam,
            "svm_objective": svm_obj,
            "qip_objective": qsol.objective,
            "coverage": qip_coverage(alpha, qsol.selection),
            "qip_size": qsol.size,
            "exact": qsol.exact,
        })
    with open(config["output"], "w", newline="") as f:
        writer = csv.DictWriter(f, fieldnames=list(rows[0].keys()))
        writer.writeheader()
        writer.writerows(rows)
    write_manifest(config, [config["input"]], [config["output"]])
    print(f"wrote {len(rows)} breakpoints to {config['output']}")
    return 0


def cmd_simulate(config) -> int:
    if not config.get("output"):
        raise DataValidationError("simulate needs --output for the CSV")
    lambdas = tuple(float(s) for s in str(config["lambdas"]).split(",") if s)
    spec = MonteCarloSpec(
        scenario=str(config["scenario"]).lower(),
        n=int(config["n"]),
        kernel=kernel_from_config(config),
        lambdas=lambdas,
        reps=int(config["reps"]),
        seed=int(config["seed"]),
        estimand=config["estimand"],
        lambda_min=float(config["lambda_min"]),
    )
    table = run_monte_carlo(spec)
    table.to_csv(config["output"], index=False)
    write_manifest(config, [], [config["output"]])
    print(f"wrote {len(table)} rows to {config['output']}")
    return 0


def cmd_diagnose(config) -> int:
    if not config.get("output"):
        raise DataValidationError("diagnose needs --output for the JSON records")
    ds, qm, Xs, spec, path = _prepare(config)
    records = []
    for k in range(path.n_breakpoints):
        lam = float(path.lambdas[k])
        tilde = normalize_simplex(path.alphas[k], ds.W)
        rep = balance_report(tilde, qm.Q, ds.W, X=Xs, lam=lam)
        rec = rep.to_dict()
        rec["weight_sum"] = float(path.alphas[k].sum())
        records.append(rec)
    with open(config["output"], "w") as f:
        json.dump(records, f, indent=2, sort_keys=True)
    write_manifest(config, [config["input"]], [config["output"]])
    print(f"wrote {len(records)} records to {config['output']}")
    return 0


HANDLERS = {
    "path": cmd_path,
    "estimate": cmd_estimate,
    "qip-compare": cmd_qip_compare,
    "simulate": cmd_simulate,
    "diagnose": cmd_diagnose,
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="svmbalance",
        description="Covariate balancing weights from the classifier dual, "
                    "with full regularization-path frontiers.")
    sub = parser.add_subparsers(dest="command", required=True)

    def add_common(p, outcome=False):
        p.add_argument("--config", help="key = value config file")
        p.add_argument("--input", help="input CSV (header row required)")
        p.add_argument("--treatment", help="treatment column name (0/1)")
        p.add_argument("--outcome", help="outcome column name")
        p.add_argument("--covariates",
                       help="comma-separated covariate columns (default: all numeric)")
        p.add_argument("--kernel", choices=("linear", "polynomial", "rbf"))
        p.add_argument("--degree", type=int)
        p.add_argument("--scale-c", dest="scale_c", type=float)
        p.add_argument("--gamma", help="rbf scale or 'median'")
        p.add_argument("--literal-polynomial", dest="literal_polynomial",
                       action="store_const", const=True,
                       help="use the (x'y + c)^d kernel instead of explicit features")
        p.add_argument("--lambda-min", dest="lambda_min", type=float)
        p.add_argument("--estimand", choices=("sate", "satt"))
        p.add_argument("--seed", type=int)
        p.add_argument("--output")
        p.add_argument("--summary")

    p = sub.add_parser("path", help="trace the path and write the breakpoint table")
    add_common(p)
    p = sub.add_parser("estimate", help="effect estimate at a selected frontier point")
    add_common(p)
    p.add_argument("--criterion",
                   choices=("balance", "elbow", "imbalance", "ess_target",
                            "normed_dim_target", "sdim_cap"))
    p.add_argument("--target", type=float,
                   help="target value for ess/normed-dim criteria or sdim cap")
    p = sub.add_parser("qip-compare", help="objective/coverage against the integer program")
    add_common(p)
    p.add_argument("--exact-cap", dest="exact_cap", type=int)
    p.add_argument("--heuristic", action="store_const", const=True)
    p.add_argument("--time-budget", dest="time_budget", type=float)
    p = sub.add_parser("simulate", help="Monte Carlo runs of scenario a or b")
    add_common(p)
    p.add_argument("--scenario", choices=("a", "b"))
    p.add_argument("--n", type=int)
    p.add_argument("--reps", type=int)
    p.add_argument("--lambdas", help="comma-separated lambda grid")
    p = sub.add_parser("diagnose", help="per-lambda balance records as JSON")
    add_common(p)
    p = sub.add_parser("rerun", help="repeat a run from its manifest")
    p.add_argument("manifest")
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        if args.command == "rerun":
            with open(args.manifest) as f:
                manifest = json.load(f)
            config = manifest["config"]
            handler = HANDLERS[config["command"]]
            return handler(config)
        config = build_config(args)
        return HANDLERS[args.command](config)
    except DataValidationError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except (SolverError, PathError) as exc:
        print(f"solver error: {exc}", file=sys.stderr)
        return 3
    except InfeasibleCriterionError as exc:
        print(f"infeasible criterion: {exc}", file=sys.stderr)
        return 4


if __name__ == "__main__":
    sys.exit(main())
