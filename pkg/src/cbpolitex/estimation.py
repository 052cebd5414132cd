"""Action-value estimation: Monte-Carlo rollouts, weighted least squares and
linear extrapolation, plus an exact model-based estimator."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .cmdp import Policy, TabularCmdp, exact_eval
from .design import Coreset
from .envs import sample_rollouts_batch
from .features import FeatureMap, build_one_hot

_BATCH_UNIFORMS = 4_000_000


@dataclass
class QEstimate:
    theta_r: np.ndarray
    theta_c: np.ndarray
    features: FeatureMap
    meta: dict = field(default_factory=dict)

    def tables(self):
        return self.features.predict(self.theta_r), self.features.predict(self.theta_c)


def truncation_horizon(gamma: float, eps_trunc: float = 1e-3) -> int:
    """Smallest ``H`` with ``gamma^H / (1 - gamma) <= eps_trunc``."""
    if gamma == 0.0:
        return 1
    return max(1, math.ceil(math.log(eps_trunc * (1.0 - gamma)) / math.log(gamma)))


def hoeffding_radius(gamma: float, m: int, n_points: int, delta: float) -> float:
    """Uniform (union-bounded) deviation of ``m``-sample means of returns in
    ``[0, 1/(1-gamma)]`` over ``n_points`` estimates, at confidence ``1-delta``."""
    return math.sqrt(math.log(2 * n_points / delta) / (2 * m)) / (1.0 - gamma)


def point_rng(seed, point_index: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence([int(seed), int(point_index)]))


def rollout_q_estimates(cmdp: TabularCmdp, policy: Policy, points, m: int, H: int, seed):
    """Mean truncated returns over ``m`` rollouts from each ``(s, a)`` in ``points``.

    Point ``i`` draws from its own generator seeded by ``(seed, i)``, so the
    estimate for a point does not depend on which other points are present.
    """
    if m < 1 or H < 1:
        raise ValueError("m and H must be >= 1")
    points = list(points)
    q_r = np.empty(len(points))
    q_c = np.empty(len(points))
    # batch several points per simulation while bounding the uniform buffer
    chunk = max(1, int(_BATCH_UNIFORMS // (2 * m * max(H - 1, 1))))
    for lo in range(0, len(points), chunk):
        idx = range(lo, min(lo + chunk, len(points)))
        ret_r, ret_c = sample_rollouts_batch(cmdp, policy, [points[i] for i in idx], H, m,
                                             [point_rng(seed, i) for i in idx])
        q_r[lo:lo + len(idx)] = ret_r.mean(axis=1)
        q_c[lo:lo + len(idx)] = ret_c.mean(axis=1)
    return q_r, q_c


def wls_fit(coreset: Coreset, q, ridge: float = 0.0) -> np.ndarray:
    """Weighted least squares ``argmin sum_z omega(z) (<theta, phi(z)> - q(z))^2``.

    With ``ridge > 0`` the normal matrix is ``ridge*I + G_omega``; with
    ``ridge == 0`` the minimum-norm solution (pseudo-inverse) is returned.
    """
    q = np.asarray(q, dtype=float)
    Phi = coreset.phi
    w = coreset.omega
    G = (Phi * w[:, None]).T @ Phi
    rhs = Phi.T @ (w * q)
    if ridge > 0:
        return np.linalg.solve(G + ridge * np.eye(G.shape[0]), rhs)
    return np.linalg.pinv(G, rcond=1e-12, hermitian=True) @ rhs


def predict_q(estimate: QEstimate, s: int, a: int):
    phi = estimate.features.featurize(s, a)
    return float(phi @ estimate.theta_r), float(phi @ estimate.theta_c)


def exact_estimator(cmdp: TabularCmdp, policy: Policy) -> QEstimate:
    """Exact ``Q_r``, ``Q_c`` packaged as a one-hot linear estimate."""
    _, Q_r = exact_eval(cmdp, policy, "reward")
    _, Q_c = exact_eval(cmdp, policy, "constraint")
    feats = build_one_hot(cmdp.n_states, cmdp.n_actions)
    return QEstimate(Q_r.ravel(), Q_c.ravel(), feats, {"kind": "exact"})


def estimate_constraint_value(rho: np.ndarray, policy: Policy, q_c: np.ndarray) -> float:
    """``sum_s rho(s) sum_a pi(a|s) Q_c(s, a)``."""
    return float(np.einsum("s,sa,sa->", np.asarray(rho, float), policy.probs, q_c))


class ExactEstimator:
    """Model-based estimates; ignores the random generator."""

    kind = "exact"

    def __init__(self, cmdp: TabularCmdp):
        self.cmdp = cmdp

    def __call__(self, policy: Policy, seed=None):
        _, Q_r = exact_eval(self.cmdp, policy, "reward")
        _, Q_c = exact_eval(self.cmdp, policy, "constraint")
        return Q_r, Q_c


class MonteCarloEstimator:
    """Rollouts on the coreset, weighted least squares, linear extrapolation."""

    kind = "monte_carlo"

    def __init__(self, cmdp: TabularCmdp, features: FeatureMap, coreset: Coreset, m: int,
                 eps_trunc: float = 1e-3, delta: float = 0.05, ridge: float = 0.0):
        self.cmdp = cmdp
        self.features = features
        self.coreset = coreset
        self.m = int(m)
        self.H = truncation_horizon(cmdp.gamma, eps_trunc)
        self.delta = delta
        self.ridge = ridge

    def fit(self, policy: Policy, seed) -> QEstimate:
        q_r, q_c = rollout_q_estimates(self.cmdp, policy, self.coreset.points, self.m,
                                       self.H, seed)
        return QEstimate(wls_fit(self.coreset, q_r, self.ridge),
                         wls_fit(self.coreset, q_c, self.ridge), self.features,
                         {"m": self.m, "H": self.H, "seed": seed, "delta": self.delta})

    def __call__(self, policy: Policy, seed):
        return self.fit(policy, seed).tables()
