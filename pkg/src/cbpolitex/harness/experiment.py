"""Single runs: build the problem from a config, run it, write the CSV."""

from __future__ import annotations

import io
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from ..cmdp import IterateLog, TabularCmdp, discounted_occupancy, per_iteration_primal_regret
from ..design import build_coreset, full_enumeration_coreset
from ..envs import GRID_SIZE, make_gridworld, make_random_cmdp
from ..estimation import ExactEstimator, MonteCarloEstimator
from ..features import FeatureMap, build_one_hot, build_tile_coding
from ..oracle import LpSolution, solve_constrained_lp
from ..solvers import run_algorithm
from .config import ExperimentConfig

CSV_COLUMNS = ("iter", "J_r", "J_c", "est_Jc", "lambda", "og_running", "cv_running",
               "primal_regret_running", "dual_regret_at_0", "dual_regret_at_U")


@dataclass
class Problem:
    cmdp: TabularCmdp
    features: FeatureMap
    oracle: LpSolution


def build_cmdp(config: ExperimentConfig) -> TabularCmdp:
    env = config.env
    if env.kind == "gridworld":
        return make_gridworld(env.gamma, env.b, env.rho_value(), b_fraction=env.b_fraction)
    spec = env.random
    return make_random_cmdp(spec.n_states, spec.n_actions, env.gamma, spec.seed, b=env.b,
                            concentration=spec.concentration, rho=env.rho_value())


def build_features(config: ExperimentConfig, cmdp: TabularCmdp) -> FeatureMap:
    spec = config.features
    if spec.kind == "one_hot":
        fmap = build_one_hot(cmdp.n_states, cmdp.n_actions)
    else:
        if config.env.kind != "gridworld":
            raise ValueError("tile coding is defined for the gridworld only")
        fmap = build_tile_coding((GRID_SIZE, GRID_SIZE), cmdp.n_actions, spec.tile_size,
                                 spec.n_tilings, spec.offsets)
    if spec.expected_d is not None and fmap.d != spec.expected_d:
        raise ValueError(f"feature dimension {fmap.d} != expected_d {spec.expected_d}")
    return fmap


def build_coreset_for(config: ExperimentConfig, features: FeatureMap):
    if config.coreset is None:
        return full_enumeration_coreset(features)
    return build_coreset(features, config.coreset.eps_prime, config.coreset.nu)


def build_estimator(config: ExperimentConfig, cmdp: TabularCmdp, features: FeatureMap):
    est = config.estimator
    if est.kind == "exact":
        return ExactEstimator(cmdp)
    coreset = build_coreset_for(config, features)
    return MonteCarloEstimator(cmdp, features, coreset, est.m, est.eps_trunc, est.delta)


def build_problem(config: ExperimentConfig) -> Problem:
    cmdp = build_cmdp(config)
    return Problem(cmdp, build_features(config, cmdp), solve_constrained_lp(cmdp))


def running_metrics(log: IterateLog, cmdp: TabularCmdp, oracle: LpSolution) -> dict:
    """Running OG/CV, primal regret against ``pi*`` and dual regret at ``0`` and ``U``."""
    T = len(log)
    if T == 0:
        return {k: np.zeros(0) for k in CSV_COLUMNS[5:]} | {"cv_signed": np.zeros(0)}
    t = np.arange(1, T + 1)
    J_r, J_c = np.asarray(log.J_r), np.asarray(log.J_c)
    est, lam = np.asarray(log.est_Jc), np.asarray(log.lambdas)
    b = cmdp.threshold
    viol = np.cumsum(b - J_c)
    nu = discounted_occupancy(cmdp, oracle.optimal_policy)
    rp = per_iteration_primal_regret(log.policies, log.q_lagrangian(), oracle.optimal_policy, nu)
    return {
        "og_running": np.cumsum(oracle.J_r_star - J_r) / t,
        "cv_running": np.maximum(viol, 0.0) / t,
        "cv_signed": viol / t,
        "primal_regret_running": np.cumsum(rp),
        "dual_regret_at_0": np.cumsum(lam * (est - b)),
        "dual_regret_at_U": np.cumsum((lam - log.U) * (est - b)),
    }


def _fmt(x) -> str:
    if x is None:
        return ""
    return format(float(x) + 0.0, ".17g")  # no "-0"


def render_csv(config: ExperimentConfig, seed: int, log: IterateLog, problem: Problem) -> str:
    metrics = running_metrics(log, problem.cmdp, problem.oracle)
    info = log.info
    buf = io.StringIO()
    header = {
        "config_hash": config.config_hash(),
        "algorithm": config.algorithm.name,
        "seed": seed,
        "seed_rule": "cell_seed = SeedSequence([master_seed, cell_index]).generate_state(1)[0]",
        "T": config.T,
        "U": _fmt(log.U) if len(log) else "",
        "zeta_hat": _fmt(log.zeta_hat) if len(log) else "",
        "eta1": _fmt(info.get("eta1")),
        "eta2": _fmt(info.get("eta2")),
        "b": _fmt(problem.cmdp.threshold),
        "gamma": _fmt(problem.cmdp.gamma),
        "J_r_star": _fmt(problem.oracle.J_r_star),
    }
    for key, value in header.items():
        buf.write(f"# {key}={value}\n")
    buf.write(",".join(CSV_COLUMNS) + "\n")
    for i in range(len(log)):
        row = [str(i), _fmt(log.J_r[i]), _fmt(log.J_c[i]), _fmt(log.est_Jc[i]),
               _fmt(log.lambdas[i])] + [_fmt(metrics[k][i]) for k in CSV_COLUMNS[5:]]
        buf.write(",".join(row) + "\n")
    return buf.getvalue()


def run_experiment(config: ExperimentConfig, seed: int | None = None,
                   out_path: str | Path | None = None, problem: Problem | None = None):
    """Run one seed; returns ``(log, csv_path)``.  The CSV goes to ``out_path``
    or ``<config.output>/run_seed<seed>.csv``."""
    seed = config.seeds[0] if seed is None else seed
    problem = problem or build_problem(config)
    estimator = build_estimator(config, problem.cmdp, problem.features)
    log = run_algorithm(problem.cmdp, estimator, config.run_config(seed))
    path = Path(out_path) if out_path else Path(config.output) / f"run_seed{seed}.csv"
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(render_csv(config, seed, log, problem))
    except OSError as exc:
        raise OSError(f"could not write {path}: {exc}") from exc
    return log, path
