"""Ground-truth solvers used to check the learning algorithms.

Everything here is model-based and independent of the primal-dual code path:
the constrained LP over occupancy measures gives ``pi*`` and ``J_r*``, value
iteration gives ``max_pi J_c`` (hence ``zeta``), the dual scan locates
``lambda*`` on a grid and the Chebyshev LP gives the best max-norm linear fit.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .cmdp import Policy, TabularCmdp
from .lp import Infeasible, Unbounded, linprog_max

__all__ = [
    "Infeasible",
    "LpSolution",
    "DualScanResult",
    "solve_constrained_lp",
    "value_iteration",
    "slater_gap",
    "lambda_star_scan",
    "default_lambda_grid",
    "chebyshev_eps_b",
]


@dataclass
class LpSolution:
    occupancy: np.ndarray
    optimal_policy: Policy
    J_r_star: float
    J_c_star: float
    status: str = "optimal"
    dual_flow: np.ndarray | None = None
    dual_constraint: float = 0.0


@dataclass
class DualScanResult:
    lambda_hat_star: float
    dual_curve: list = field(default_factory=list)

    @property
    def grid_step(self) -> float:
        lams = [lam for lam, _ in self.dual_curve]
        return float(np.max(np.diff(lams))) if len(lams) > 1 else 0.0


def _flow_matrix(cmdp: TabularCmdp) -> np.ndarray:
    S, A = cmdp.n_states, cmdp.n_actions
    # row s': sum_a mu(s',a) - gamma sum_{s,a} P(s'|s,a) mu(s,a) = rho(s')
    E = np.zeros((S, S * A))
    for s in range(S):
        E[s, s * A:(s + 1) * A] = 1.0
    return E - cmdp.gamma * cmdp.transition.reshape(S * A, S).T


def policy_from_occupancy(mu: np.ndarray) -> Policy:
    totals = mu.sum(axis=1, keepdims=True)
    A = mu.shape[1]
    probs = np.where(totals > 1e-12, mu / np.maximum(totals, 1e-300), 1.0 / A)
    probs = np.clip(probs, 0.0, None)
    return Policy(probs / probs.sum(axis=1, keepdims=True))


def solve_constrained_lp(cmdp: TabularCmdp) -> LpSolution:
    """Maximize ``sum mu r`` over unnormalized discounted occupancies with
    ``sum mu c >= b``.  Raises :class:`Infeasible` when no policy meets ``b``."""
    S, A = cmdp.n_states, cmdp.n_actions
    E = _flow_matrix(cmdp)
    c_row = cmdp.constraint_reward.ravel()
    try:
        res = linprog_max(cmdp.reward.ravel(), A_eq=E, b_eq=cmdp.rho,
                          A_ub=-c_row[None, :], b_ub=[-cmdp.threshold])
    except Infeasible as exc:
        raise Infeasible(f"no policy reaches threshold {cmdp.threshold}") from exc
    except Unbounded as exc:  # pragma: no cover - compact feasible set
        raise RuntimeError("occupancy LP reported unbounded") from exc
    mu = res.x.reshape(S, A)
    return LpSolution(
        occupancy=mu,
        optimal_policy=policy_from_occupancy(mu),
        J_r_star=float(mu.ravel() @ cmdp.reward.ravel()),
        J_c_star=float(mu.ravel() @ c_row),
        dual_flow=res.duals_eq,
        dual_constraint=float(res.duals_ub[0]),
    )


def greedy_policy(q: np.ndarray, tol: float = 1e-9) -> Policy:
    """Deterministic greedy policy, ties broken toward the lowest action index."""
    best = q.max(axis=1, keepdims=True)
    actions = np.argmax(q >= best - tol, axis=1)
    return Policy.deterministic(actions, q.shape[1])


def value_iteration(cmdp: TabularCmdp, weighted_reward: np.ndarray | None = None, *,
                    signal: str | None = None, tol: float = 1e-10, max_iter: int = 100_000):
    """Unconstrained optimum for a per-step table (e.g. ``r + lam * c``).

    Returns ``(V, greedy_policy, J)`` with ``J = <rho, V>``.
    """
    if weighted_reward is None:
        weighted_reward = cmdp.signal_table(signal or "reward")
    R = np.asarray(weighted_reward, dtype=float)
    V = np.zeros(cmdp.n_states)
    P, g = cmdp.transition, cmdp.gamma
    for _ in range(max_iter):
        V_new = (R + g * P @ V).max(axis=1)
        resid = np.max(np.abs(V_new - V))
        V = V_new
        if resid <= tol * (1.0 - g) / max(g, 1e-300) or resid == 0.0:
            break
    else:  # pragma: no cover
        raise RuntimeError("value iteration did not converge")
    Q = R + g * P @ V
    return V, greedy_policy(Q), float(cmdp.rho @ V)


def slater_gap(cmdp: TabularCmdp) -> float:
    """``zeta = max_pi J_c - b``."""
    return value_iteration(cmdp, signal="constraint")[2] - cmdp.threshold


def default_lambda_grid(cmdp: TabularCmdp, n_points: int = 401) -> np.ndarray:
    zeta = slater_gap(cmdp)
    if zeta <= 0:
        raise Infeasible(f"zeta = {zeta} <= 0")
    U = 2.0 / (zeta * (1.0 - cmdp.gamma))
    return np.linspace(0.0, 2.0 * U, n_points)


def lambda_star_scan(cmdp: TabularCmdp, grid=None) -> DualScanResult:
    """Evaluate the dual function ``d(lam) = max_pi J_r + lam (J_c - b)`` on a grid."""
    grid = default_lambda_grid(cmdp) if grid is None else np.asarray(grid, dtype=float)
    curve = []
    for lam in grid:
        J = value_iteration(cmdp, cmdp.reward + lam * cmdp.constraint_reward)[2]
        curve.append((float(lam), J - lam * cmdp.threshold))
    values = np.array([d for _, d in curve])
    # lowest grid point among numerical ties
    idx = int(np.argmax(values <= values.min() + 1e-10))
    return DualScanResult(lambda_hat_star=curve[idx][0], dual_curve=curve)


def chebyshev_eps_b(true_q: np.ndarray, features):
    """Best max-norm linear fit ``min_theta max_z |Q(z) - <theta, phi(z)>|``.

    ``features`` is a :class:`~cbpolitex.features.FeatureMap` or an explicit
    ``(n_points, d)`` matrix whose rows line up with ``true_q.ravel()``.
    Returns ``(eps_b, theta_star)``.
    """
    q = np.asarray(true_q, dtype=float).ravel()
    Phi = features.matrix() if hasattr(features, "matrix") else np.asarray(features, float)
    n, d = Phi.shape
    if n != q.size:
        raise ValueError("feature rows must match the number of Q entries")
    # variables: theta+ (d), theta- (d), t ; maximize -t
    c = np.zeros(2 * d + 1)
    c[-1] = -1.0
    ones = np.ones((n, 1))
    A_ub = np.vstack([
        np.hstack([-Phi, Phi, -ones]),   #  Q - phi.theta <= t
        np.hstack([Phi, -Phi, -ones]),   #  phi.theta - Q <= t
    ])
    b_ub = np.concatenate([-q, q])
    res = linprog_max(c, A_ub=A_ub, b_ub=b_ub)
    theta = res.x[:d] - res.x[d:2 * d]
    eps = float(np.max(np.abs(q - Phi @ theta)))
    return eps, theta
