import math

import numpy as np
import pytest

from cbpolitex.cmdp import TabularCmdp
from cbpolitex.envs import make_gridworld, make_random_cmdp
from cbpolitex.estimation import ExactEstimator, MonteCarloEstimator
from cbpolitex.design import full_enumeration_coreset
from cbpolitex.features import build_one_hot
from cbpolitex.oracle import slater_gap
from cbpolitex.solvers import (
    InfeasibleProblem,
    RunConfig,
    dual_cap,
    estimate_feasibility_and_u,
    run_algorithm,
)

HYPER = {
    "cbp": {},
    "cbp_practical": {"alpha_lambda": 8.0},
    "gda": {"alpha_pi": 1.0, "alpha_lambda": 0.1},
    "gda_theory": {},
    "crpo": {"alpha_pi": 0.75},
}


def test_feasibility_constant_constraint():
    S, A, gamma = 3, 2, 0.8
    rng = np.random.default_rng(0)
    P = rng.dirichlet(np.ones(S), size=(S, A))
    m = TabularCmdp(P, rng.random((S, A)), np.ones((S, A)), 0.0, np.full(S, 1 / S), gamma)
    feas = estimate_feasibility_and_u(m, ExactEstimator(m), 20)
    assert feas.feasible
    assert feas.zeta_hat == pytest.approx(1 / (1 - gamma))


def test_dual_cap_example():
    assert dual_cap(2.0, 0.9) == pytest.approx(10.0)
    assert dual_cap(0.0, 0.9) == math.inf


def test_gridworld_zeta_estimate_close_to_oracle(grid):
    feas = estimate_feasibility_and_u(grid, ExactEstimator(grid), 200)
    zeta = slater_gap(grid)
    assert abs(feas.zeta_hat - zeta) <= 0.05 * zeta


def test_infeasible_threshold_raises():
    m = make_gridworld(0.9, b=3.0, require_feasible=False)
    with pytest.raises(InfeasibleProblem) as info:
        run_algorithm(m, ExactEstimator(m), RunConfig("cbp", T=5, pre_iterations=20))
    assert info.value.zeta_hat < 0


def test_zero_horizon_gives_empty_log(grid):
    log = run_algorithm(grid, ExactEstimator(grid), RunConfig("cbp", T=0))
    assert len(log) == 0


@pytest.mark.parametrize("bad", [
    RunConfig("nope"),
    RunConfig("cbp_practical", alpha_lambda=None),
    RunConfig("gda", alpha_pi=1.0),
    RunConfig("crpo"),
    RunConfig("cbp", nu_ent=-1.0),
])
def test_invalid_hyperparameters_rejected(grid, bad):
    with pytest.raises(ValueError):
        run_algorithm(grid, ExactEstimator(grid), bad)


@pytest.mark.parametrize("alg", sorted(HYPER))
def test_runs_are_deterministic_and_bounded(grid, alg):
    cfg = dict(T=30, seed=3, pre_iterations=50, **HYPER[alg])
    a = run_algorithm(grid, ExactEstimator(grid), RunConfig(alg, **cfg))
    b = run_algorithm(grid, ExactEstimator(grid), RunConfig(alg, **cfg))
    assert len(a) == 30
    assert a.J_r == b.J_r and a.lambdas == b.lambdas
    lam = np.asarray(a.lambdas)
    assert lam.min() >= 0 and lam.max() <= a.U
    for p in a.policies:
        assert p.min() >= 0 and np.max(np.abs(p.sum(1) - 1)) <= 1e-9


def test_entropy_and_visited_only_with_sampling():
    m = make_random_cmdp(5, 3, 0.8, seed=2)
    fmap = build_one_hot(5, 3)
    est = MonteCarloEstimator(m, fmap, full_enumeration_coreset(fmap), m=30)
    cfg = RunConfig("cbp_practical", T=8, seed=1, alpha_lambda=5.0, nu_ent=0.01,
                    pre_iterations=10, visited_only=True)
    a = run_algorithm(m, est, cfg)
    b = run_algorithm(m, est, cfg)
    assert a.J_r == b.J_r and a.est_Jc == b.est_Jc
    assert 0 <= min(a.lambdas) and max(a.lambdas) <= a.U


def test_crpo_entropy_run(grid):
    log = run_algorithm(grid, ExactEstimator(grid),
                        RunConfig("crpo", T=10, alpha_pi=0.5, nu_ent=0.1, pre_iterations=20))
    assert all(np.isfinite(log.J_r))


def test_explicit_u_override(grid):
    log = run_algorithm(grid, ExactEstimator(grid), RunConfig("gda_theory", T=5, U=3.0,
                                                              pre_iterations=20))
    assert log.U == 3.0 and max(log.lambdas) <= 3.0
