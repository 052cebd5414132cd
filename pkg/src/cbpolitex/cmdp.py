"""Tabular CMDPs, exact policy evaluation, occupancy measures and run metrics."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Literal, Sequence

import numpy as np

Signal = Literal["reward", "constraint"]

_PROB_TOL = 1e-12


@dataclass(frozen=True)
class TabularCmdp:
    """A discounted CMDP with a single constraint-reward signal.

    ``transition[s, a, s']`` is the probability of landing in ``s'``.
    ``threshold`` is expressed in discounted value units, so a policy is
    feasible when its constraint value is at least ``threshold``.
    """

    transition: np.ndarray
    reward: np.ndarray
    constraint_reward: np.ndarray
    threshold: float
    rho: np.ndarray
    gamma: float

    def __post_init__(self):
        P = np.asarray(self.transition, dtype=float)
        r = np.asarray(self.reward, dtype=float)
        c = np.asarray(self.constraint_reward, dtype=float)
        rho = np.asarray(self.rho, dtype=float)
        if P.ndim != 3 or P.shape[0] != P.shape[2]:
            raise ValueError(f"transition must have shape (S, A, S), got {P.shape}")
        S, A, _ = P.shape
        if r.shape != (S, A) or c.shape != (S, A):
            raise ValueError("reward and constraint_reward must have shape (S, A)")
        if rho.shape != (S,):
            raise ValueError("rho must have shape (S,)")
        if np.any(P < 0) or np.max(np.abs(P.sum(axis=2) - 1.0)) > _PROB_TOL:
            raise ValueError("transition rows must be probability vectors")
        for name, table in (("reward", r), ("constraint_reward", c)):
            if np.any(table < 0) or np.any(table > 1):
                raise ValueError(f"{name} entries must lie in [0, 1]")
        if np.any(rho < 0) or abs(rho.sum() - 1.0) > _PROB_TOL:
            raise ValueError("rho must be a probability vector")
        if not 0.0 <= self.gamma < 1.0:
            raise ValueError(f"gamma must lie in [0, 1), got {self.gamma}")
        for name, arr in (("transition", P), ("reward", r),
                          ("constraint_reward", c), ("rho", rho)):
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)
        object.__setattr__(self, "threshold", float(self.threshold))
        object.__setattr__(self, "gamma", float(self.gamma))

    @property
    def n_states(self) -> int:
        return self.transition.shape[0]

    @property
    def n_actions(self) -> int:
        return self.transition.shape[1]

    def signal_table(self, signal: Signal) -> np.ndarray:
        if signal == "reward":
            return self.reward
        if signal == "constraint":
            return self.constraint_reward
        raise ValueError(f"unknown signal {signal!r}")

    def with_threshold(self, threshold: float) -> "TabularCmdp":
        return TabularCmdp(self.transition, self.reward, self.constraint_reward,
                           threshold, self.rho, self.gamma)


@dataclass(frozen=True)
class Policy:
    """Stochastic policy stored as a row-stochastic ``(S, A)`` table."""

    probs: np.ndarray

    def __post_init__(self):
        p = np.array(self.probs, dtype=float)
        if p.ndim != 2:
            raise ValueError("policy table must be 2-D")
        if np.any(p < 0) or np.max(np.abs(p.sum(axis=1) - 1.0)) > 1e-9:
            raise ValueError("policy rows must be probability vectors")
        p.setflags(write=False)
        object.__setattr__(self, "probs", p)

    @classmethod
    def uniform(cls, n_states: int, n_actions: int) -> "Policy":
        return cls(np.full((n_states, n_actions), 1.0 / n_actions))

    @classmethod
    def deterministic(cls, actions: Sequence[int], n_actions: int) -> "Policy":
        actions = np.asarray(actions, dtype=int)
        p = np.zeros((len(actions), n_actions))
        p[np.arange(len(actions)), actions] = 1.0
        return cls(p)


@dataclass(frozen=True)
class OccupancyMeasure:
    state_dist: np.ndarray
    state_action: np.ndarray | None = None


def _policy_matrices(cmdp: TabularCmdp, policy: Policy, table: np.ndarray):
    pi = policy.probs
    if pi.shape != (cmdp.n_states, cmdp.n_actions):
        raise ValueError("policy shape does not match the CMDP")
    P_pi = np.einsum("sa,sat->st", pi, cmdp.transition)
    r_pi = np.einsum("sa,sa->s", pi, table)
    return P_pi, r_pi


def evaluate_table(cmdp: TabularCmdp, policy: Policy, table: np.ndarray):
    """Exact ``(V, Q)`` for an arbitrary per-step signal ``table``."""
    P_pi, r_pi = _policy_matrices(cmdp, policy, table)
    S = cmdp.n_states
    V = np.linalg.solve(np.eye(S) - cmdp.gamma * P_pi, r_pi)
    Q = table + cmdp.gamma * cmdp.transition @ V
    return V, Q


def exact_eval(cmdp: TabularCmdp, policy: Policy, signal: Signal = "reward"):
    """Solve ``(I - gamma P_pi) V = r_pi`` and back out ``Q``."""
    return evaluate_table(cmdp, policy, cmdp.signal_table(signal))


def scalar_value(cmdp: TabularCmdp, policy: Policy, signal: Signal = "reward") -> float:
    V, _ = exact_eval(cmdp, policy, signal)
    return float(cmdp.rho @ V)


def discounted_occupancy(cmdp: TabularCmdp, policy: Policy) -> OccupancyMeasure:
    """Normalized discounted state visitation ``(1-gamma) rho (I - gamma P_pi)^-1``."""
    P_pi, _ = _policy_matrices(cmdp, policy, cmdp.reward)
    S = cmdp.n_states
    nu = (1.0 - cmdp.gamma) * np.linalg.solve((np.eye(S) - cmdp.gamma * P_pi).T, cmdp.rho)
    nu = np.clip(nu, 0.0, None)
    return OccupancyMeasure(state_dist=nu, state_action=nu[:, None] * policy.probs)


def compute_og_cv(history: Sequence[tuple[float, float]], J_r_star: float, b: float):
    """Average optimality gap and (sum-then-clip) average constraint violation."""
    if len(history) == 0:
        raise ValueError("history must be non-empty")
    arr = np.asarray(history, dtype=float)
    T = arr.shape[0]
    og = float(np.sum(J_r_star - arr[:, 0]) / T)
    cv = float(max(np.sum(b - arr[:, 1]), 0.0) / T)
    return og, cv


def primal_regret(policies, q_l, comparator: Policy, nu: OccupancyMeasure) -> float:
    """Sum over t of ``E_{s~nu} <pi*(.|s) - pi_t(.|s), Q_l^t(s, .)>``.

    ``policies`` and ``q_l`` are sequences (or stacked arrays) of ``(S, A)``
    tables with one entry per iteration.
    """
    pis = np.asarray(policies, dtype=float)
    qs = np.asarray(q_l, dtype=float)
    if pis.shape != qs.shape:
        raise ValueError("policies and q_l must have matching shapes")
    if pis.size == 0:
        return 0.0
    diff = comparator.probs[None] - pis
    per_state = np.einsum("tsa,tsa->s", diff, qs)
    return float(nu.state_dist @ per_state)


def per_iteration_primal_regret(policies, q_l, comparator: Policy, nu: OccupancyMeasure):
    pis = np.asarray(policies, dtype=float)
    qs = np.asarray(q_l, dtype=float)
    diff = comparator.probs[None] - pis
    return np.einsum("s,tsa,tsa->t", nu.state_dist, diff, qs)


def dual_regret(lambdas, est_values, lambda_ref: float, b: float) -> float:
    """``sum_t (lambda_t - lambda_ref)(J_c_hat(t) - b)``."""
    lam = np.asarray(lambdas, dtype=float)
    est = np.asarray(est_values, dtype=float)
    if lam.shape != est.shape:
        raise ValueError("lambdas and est_values must have equal length")
    return float(np.sum((lam - lambda_ref) * (est - b)))


@dataclass
class IterateLog:
    """Per-iteration record of a primal-dual run.

    Row ``t`` describes the iterate pair ``(pi_t, lambda_t)``; ``q_r``/``q_c``
    hold the estimates handed to the update rules at that iteration.
    """

    J_r: list = field(default_factory=list)
    J_c: list = field(default_factory=list)
    est_Jc: list = field(default_factory=list)
    lambdas: list = field(default_factory=list)
    policies: list = field(default_factory=list)
    q_r: list = field(default_factory=list)
    q_c: list = field(default_factory=list)
    wall_clock: list = field(default_factory=list)
    seed: int | None = None
    U: float = 0.0
    zeta_hat: float = float("nan")
    info: dict = field(default_factory=dict)

    def __len__(self):
        return len(self.J_r)

    def append(self, *, J_r, J_c, est_Jc, lam, policy, q_r, q_c, wall_clock):
        self.J_r.append(float(J_r))
        self.J_c.append(float(J_c))
        self.est_Jc.append(float(est_Jc))
        self.lambdas.append(float(lam))
        self.policies.append(np.asarray(policy))
        self.q_r.append(np.asarray(q_r))
        self.q_c.append(np.asarray(q_c))
        self.wall_clock.append(float(wall_clock))

    def q_lagrangian(self) -> np.ndarray:
        lam = np.asarray(self.lambdas)[:, None, None]
        return np.asarray(self.q_r) + lam * np.asarray(self.q_c)

    def history(self):
        return list(zip(self.J_r, self.J_c))
