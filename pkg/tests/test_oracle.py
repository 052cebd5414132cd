import numpy as np
import pytest
from scipy.optimize import linprog

from cbpolitex.cmdp import Policy, TabularCmdp, scalar_value
from cbpolitex.envs import make_gridworld, make_random_cmdp
from cbpolitex.features import build_one_hot
from cbpolitex.oracle import (
    Infeasible,
    chebyshev_eps_b,
    greedy_policy,
    lambda_star_scan,
    policy_from_occupancy,
    slater_gap,
    solve_constrained_lp,
    value_iteration,
)


def flow_residual(cmdp, mu):
    S, A = cmdp.n_states, cmdp.n_actions
    inflow = cmdp.rho + cmdp.gamma * np.einsum("sa,sat->t", mu, cmdp.transition)
    return np.max(np.abs(mu.sum(1) - inflow))


# -- constrained LP ------------------------------------------------------------

def test_inactive_constraint_matches_value_iteration():
    m = make_random_cmdp(6, 3, 0.85, seed=4, b=0.0)
    sol = solve_constrained_lp(m)
    assert sol.J_r_star == pytest.approx(value_iteration(m)[2], abs=1e-6)


def test_threshold_above_max_is_infeasible():
    m = make_random_cmdp(5, 2, 0.8, seed=2)
    top = value_iteration(m, signal="constraint")[2]
    with pytest.raises(Infeasible):
        solve_constrained_lp(m.with_threshold(top + 0.1))


def test_gridworld_solution_invariants(grid, grid_lp):
    mu = grid_lp.occupancy
    assert mu.min() >= -1e-12
    assert flow_residual(grid, mu) <= 1e-7
    assert grid_lp.J_r_star == pytest.approx((mu * grid.reward).sum(), abs=1e-12)
    assert grid_lp.J_c_star >= grid.threshold - 1e-7
    # the recovered policy attains the LP values
    assert scalar_value(grid, grid_lp.optimal_policy) == pytest.approx(grid_lp.J_r_star, abs=1e-7)
    assert scalar_value(grid, grid_lp.optimal_policy, "constraint") == pytest.approx(
        grid_lp.J_c_star, abs=1e-7)


def test_gridworld_fixture(grid, grid_lp):
    assert grid.threshold == pytest.approx(1.2786365904, abs=1e-8)
    assert grid_lp.J_r_star == pytest.approx(1.6910686935, abs=1e-8)


def test_gridworld_lp_value_matches_dual_scan(grid, grid_lp):
    scan = lambda_star_scan(grid)
    d_min = min(d for _, d in scan.dual_curve)
    # strong duality; the grid minimum sits above the true minimum by at most
    # the curve's variation over one grid step
    assert grid_lp.J_r_star <= d_min + 1e-7
    slope = max(abs(1 / (1 - grid.gamma) - grid.threshold), grid.threshold)
    assert d_min - grid_lp.J_r_star <= slope * scan.grid_step


def test_lp_against_reference_solver():
    m = make_random_cmdp(5, 3, 0.9, seed=8)
    S, A = 5, 3
    E = np.kron(np.eye(S), np.ones((1, A))) - m.gamma * m.transition.reshape(S * A, S).T
    ref = linprog(-m.reward.ravel(), A_eq=E, b_eq=m.rho,
                  A_ub=-m.constraint_reward.ravel()[None], b_ub=[-m.threshold],
                  bounds=(0, None), method="highs")
    assert solve_constrained_lp(m).J_r_star == pytest.approx(-ref.fun, abs=1e-7)


def test_lp_beats_random_feasible_policies(grid, grid_lp):
    rng = np.random.default_rng(0)
    base = value_iteration(grid, signal="constraint")[1].probs
    checked = 0
    for _ in range(1000):
        # perturb the constraint-greedy policy so that many samples stay feasible
        w = rng.uniform(0, 0.8)
        pi = Policy((1 - w) * base + w * rng.dirichlet(np.full(4, 0.3), size=25))
        if scalar_value(grid, pi, "constraint") >= grid.threshold:
            checked += 1
            assert scalar_value(grid, pi) <= grid_lp.J_r_star + 1e-7
    assert checked >= 100


def test_complementary_slackness(grid, grid_lp):
    # the constraint binds and its multiplier is positive
    assert grid_lp.dual_constraint > 0
    assert grid_lp.J_c_star == pytest.approx(grid.threshold, abs=1e-7)
    # reduced costs vanish on the support of mu
    lam = grid_lp.dual_constraint
    v = grid_lp.dual_flow
    Q = grid.reward + lam * grid.constraint_reward + grid.gamma * grid.transition @ v
    support = grid_lp.occupancy > 1e-9
    assert np.max(np.abs((Q - v[:, None])[support])) <= 1e-7
    assert np.max(Q - v[:, None]) <= 1e-7


def test_policy_from_occupancy_uniform_on_empty_rows():
    pi = policy_from_occupancy(np.array([[0.0, 0.0], [1.0, 3.0]]))
    np.testing.assert_allclose(pi.probs, [[0.5, 0.5], [0.25, 0.75]])


# -- value iteration -----------------------------------------------------------

def test_value_iteration_single_state():
    m = TabularCmdp(np.ones((1, 1, 1)), np.ones((1, 1)), np.zeros((1, 1)), 0.0,
                    np.array([1.0]), 0.5)
    assert value_iteration(m)[2] == pytest.approx(2.0, abs=1e-9)


def test_value_iteration_zero_lambda_is_reward_solve():
    m = make_random_cmdp(6, 3, 0.9, seed=1)
    a = value_iteration(m)
    b = value_iteration(m, m.reward + 0.0 * m.constraint_reward)
    assert a[2] == b[2]
    np.testing.assert_array_equal(a[1].probs, b[1].probs)


def test_value_iteration_residual():
    m = make_random_cmdp(7, 3, 0.9, seed=5)
    V, _, _ = value_iteration(m)
    backup = (m.reward + m.gamma * m.transition @ V).max(1)
    assert np.max(np.abs(backup - V)) <= 1e-10


def test_greedy_tie_break_lowest_index():
    pi = greedy_policy(np.array([[1.0, 1.0, 0.5], [0.0, 2.0, 2.0]]))
    np.testing.assert_array_equal(pi.probs, [[1, 0, 0], [0, 1, 0]])


def test_gridworld_zeta_matches_lp_on_constraint(grid):
    top = value_iteration(grid, signal="constraint")[2]
    swapped = TabularCmdp(grid.transition, grid.constraint_reward, grid.reward, 0.0,
                          grid.rho, grid.gamma)
    assert top == pytest.approx(solve_constrained_lp(swapped).J_r_star, abs=1e-7)
    assert slater_gap(grid) == pytest.approx(top - grid.threshold)
    assert top == pytest.approx(2.5572731808, abs=1e-8)


# -- dual scan ------------------------------------------------------------------

def test_scan_inactive_constraint_gives_zero():
    m = make_gridworld(0.9, b=0.1)
    assert lambda_star_scan(m).lambda_hat_star == 0.0


def test_scan_single_point():
    m = make_random_cmdp(4, 2, 0.8, seed=0)
    res = lambda_star_scan(m, grid=[0.7])
    assert res.lambda_hat_star == 0.7 and res.grid_step == 0.0


def test_dual_curve_convex(grid):
    curve = np.array([d for _, d in lambda_star_scan(grid).dual_curve])
    second = curve[:-2] - 2 * curve[1:-1] + curve[2:]
    assert second.min() >= -1e-8


# -- Chebyshev fit ---------------------------------------------------------------

def test_one_hot_is_exact():
    m = make_random_cmdp(4, 3, 0.9, seed=3)
    from cbpolitex.cmdp import exact_eval
    _, Q = exact_eval(m, Policy.uniform(4, 3))
    eps, theta = chebyshev_eps_b(Q, build_one_hot(4, 3))
    assert eps <= 1e-9
    np.testing.assert_allclose(theta, Q.ravel(), atol=1e-9)


def test_midpoint_example():
    eps, theta = chebyshev_eps_b(np.array([1.0, 3.0]), np.array([[1.0], [1.0]]))
    assert eps == pytest.approx(1.0)
    assert theta[0] == pytest.approx(2.0)


@pytest.mark.parametrize("seed", range(5))
def test_matches_grid_search(seed):
    rng = np.random.default_rng(seed)
    Phi = rng.normal(size=(12, 2))
    q = rng.random(12) * 5
    eps, _ = chebyshev_eps_b(q, Phi)
    # coarse grid, then a fine grid around the coarse minimizer
    def best(center, half, n):
        t = np.linspace(-half, half, n)
        T1, T2 = np.meshgrid(center[0] + t, center[1] + t, indexing="ij")
        thetas = np.stack([T1.ravel(), T2.ravel()], 1)
        errs = np.abs(q[None] - thetas @ Phi.T).max(1)
        k = np.argmin(errs)
        return thetas[k], errs[k]
    c, _ = best(np.zeros(2), 20.0, 801)
    c, _ = best(c, 0.1, 801)
    _, err = best(c, 0.001, 401)
    assert eps <= err + 1e-12
    assert err - eps <= 1e-4
