"""Command-line entry point: ``cbpolitex {solve,sweep,oracle,coreset,report}``."""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

import numpy as np
from pydantic import ValidationError

from ..cmdp import exact_eval
from ..lp import Infeasible
from ..oracle import chebyshev_eps_b, lambda_star_scan, slater_gap
from .config import load_config
from .experiment import build_cmdp, build_coreset_for, build_features, build_problem, run_experiment
from .sweep import read_summary, run_sweep

EXIT_OK, EXIT_CONFIG, EXIT_INFEASIBLE, EXIT_NUMERIC = 0, 2, 3, 4

log = logging.getLogger("cbpolitex")


def cmd_solve(args) -> int:
    config = load_config(args.config)
    seed = config.seeds[0] if args.seed is None else args.seed
    out, path = run_experiment(config, seed, args.out)
    print(json.dumps({"csv": str(path), "iterations": len(out), "U": out.U,
                      "zeta_hat": out.zeta_hat}))
    return EXIT_OK


def cmd_sweep(args) -> int:
    config = load_config(args.config)
    result = run_sweep(config, jobs=args.jobs, out_dir=args.out)
    best = result.cells[result.best_cell] if result.best_cell is not None else None
    print(json.dumps({
        "cells": len(result.cells),
        "best_cell": result.best_cell,
        "best_params": best.params if best else None,
        "best_rule": result.best_rule,
        "og_spread": result.og_spread(),
        "failed_runs": sum(r.status != "ok" for r in result.runs),
    }))
    return EXIT_OK


def oracle_report(config) -> dict:
    problem = build_problem(config)
    cmdp, fmap, sol = problem.cmdp, problem.features, problem.oracle
    scan = lambda_star_scan(cmdp)
    _, q_r = exact_eval(cmdp, sol.optimal_policy, "reward")
    _, q_c = exact_eval(cmdp, sol.optimal_policy, "constraint")
    eps_r, _ = chebyshev_eps_b(q_r, fmap)
    eps_c, _ = chebyshev_eps_b(q_c, fmap)
    return {
        "J_r_star": sol.J_r_star,
        "J_c_star": sol.J_c_star,
        "b": cmdp.threshold,
        "zeta": slater_gap(cmdp),
        "lambda_hat_star": scan.lambda_hat_star,
        "lambda_grid_step": scan.grid_step,
        "lambda_star_lp_dual": sol.dual_constraint,
        "eps_b": max(eps_r, eps_c),
        "eps_b_reward": eps_r,
        "eps_b_constraint": eps_c,
        "feature_dim": fmap.d,
    }


def cmd_oracle(args) -> int:
    print(json.dumps(oracle_report(load_config(args.config))))
    return EXIT_OK


def cmd_coreset(args) -> int:
    config = load_config(args.config)
    cmdp = build_cmdp(config)
    coreset = build_coreset_for(config, build_features(config, cmdp))
    print(json.dumps(coreset.to_json()))
    return EXIT_OK


def cmd_report(args) -> int:
    root = Path(args.dir)
    summaries = sorted(root.rglob("summary.csv"))
    if not summaries:
        print(f"no summary.csv under {root}", file=sys.stderr)
        return EXIT_CONFIG
    report = []
    for path in summaries:
        meta, rows = read_summary(path)
        ogs = [float(r["og_mean"]) for r in rows if r["n_ok"] != "0"]
        best = next((r for r in rows if r["best"] == "1"), None)
        report.append({
            "summary": str(path),
            "algorithm": meta.get("algorithm"),
            "cells": len(rows),
            "og_spread": float(np.max(ogs) - np.min(ogs)) if ogs else None,
            "best": best,
        })
    print(json.dumps(report, indent=2))
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="cbpolitex", description=__doc__)
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("solve", help="run one configuration for one seed")
    p.add_argument("config")
    p.add_argument("--seed", type=int)
    p.add_argument("--out")
    p.set_defaults(fn=cmd_solve)

    p = sub.add_parser("sweep", help="run every hyperparameter cell for every seed")
    p.add_argument("config")
    p.add_argument("--jobs", type=int, default=1)
    p.add_argument("--out")
    p.set_defaults(fn=cmd_sweep)

    p = sub.add_parser("oracle", help="print ground-truth quantities as JSON")
    p.add_argument("config")
    p.set_defaults(fn=cmd_oracle)

    p = sub.add_parser("coreset", help="print the G-optimal coreset as JSON")
    p.add_argument("config")
    p.set_defaults(fn=cmd_coreset)

    p = sub.add_parser("report", help="summarize sweep summary CSVs under a directory")
    p.add_argument("dir")
    p.set_defaults(fn=cmd_report)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING)
    try:
        return args.fn(args)
    except (ValidationError, json.JSONDecodeError, FileNotFoundError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except Infeasible as exc:
        print(f"infeasible: {exc}", file=sys.stderr)
        return EXIT_INFEASIBLE
    except ValueError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (np.linalg.LinAlgError, FloatingPointError, RuntimeError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except OSError as exc:
        print(f"I/O error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
