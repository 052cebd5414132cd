"""Primal and dual update rules.

Primal: mirror ascent (multiplicative weights) and per-(s, a) coin betting.
Dual: projected gradient descent, sigmoid coin betting, and the adaptively
normalized coin-betting heuristic.  All dual iterates are kept in ``[0, U]``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from ..cmdp import Policy

LOG_FLOOR = 1e-12


def _as_table(pi) -> np.ndarray:
    return pi.probs if isinstance(pi, Policy) else np.asarray(pi, dtype=float)


def mirror_ascent_step(pi, q_l: np.ndarray, eta1: float, mask=None) -> Policy:
    """``pi'(a|s) ~ pi(a|s) exp(eta1 * Q_l(s, a))``, optionally on masked rows only."""
    if eta1 < 0:
        raise ValueError("eta1 must be non-negative")
    probs = _as_table(pi)
    logits = eta1 * np.asarray(q_l, dtype=float)
    logits = logits - logits.max(axis=1, keepdims=True)
    new = probs * np.exp(logits)
    new /= np.maximum(new.sum(axis=1, keepdims=True), LOG_FLOOR)
    if mask is not None:
        new = np.where(np.asarray(mask, bool)[:, None], new, probs)
    return Policy(new)


def gda_theory_stepsizes(T: int, n_actions: int, gamma: float, U: float, t: int | None = None):
    """Step sizes for which the mirror-ascent / projected-GD regret bounds hold.

    The fixed-horizon form uses ``T``; pass ``t`` (1-based) for the anytime form.
    """
    n = T if t is None else t
    if n < 1:
        raise ValueError("horizon must be >= 1")
    eta1 = math.sqrt(2.0 * math.log(n_actions) / n) * (1.0 - gamma) / (1.0 + U)
    eta2 = U * (1.0 - gamma) / math.sqrt(n)
    return eta1, eta2


def projected_gd_dual_step(lam: float, est_Jc: float, b: float, eta2: float, U: float) -> float:
    return float(np.clip(lam - eta2 * (est_Jc - b), 0.0, U))


def normalized_advantage(q_l: np.ndarray, pi, U: float, gamma: float) -> np.ndarray:
    """``(1-gamma)/(1+U) * (Q_l - <Q_l, pi>)`` row by row."""
    q_l = np.asarray(q_l, dtype=float)
    probs = _as_table(pi)
    baseline = np.sum(q_l * probs, axis=-1, keepdims=True)
    return (1.0 - gamma) / (1.0 + U) * (q_l - baseline)


def entropy_regularized_q(q_r, q_c, lam: float, nu_ent: float, pi) -> np.ndarray:
    """``Q_r + lam * Q_c - nu * log pi`` (probabilities floored before the log)."""
    q_l = np.asarray(q_r, dtype=float) + lam * np.asarray(q_c, dtype=float)
    if nu_ent:
        q_l = q_l - nu_ent * np.log(np.maximum(_as_table(pi), LOG_FLOOR))
    return q_l


def crpo_step(pi, q_r, q_c, est_Jc: float, b: float, eta_tol: float, alpha_pi: float,
              mask=None) -> Policy:
    """Ascend the reward when the constraint holds with margin, else the constraint."""
    target = q_r if est_Jc >= b + eta_tol else q_c
    return mirror_ascent_step(pi, target, alpha_pi, mask)


@dataclass
class PrimalCoinState:
    """Per-(s, a) coin-betting state for the policy update.

    ``w`` holds the current bets ``w_t``; ``sum_loss`` and ``sum_wealth``
    hold ``sum_i l_i`` and ``sum_i l_i * w_i``.
    """

    pi0: np.ndarray
    T: int
    t: int = 0
    w: np.ndarray = field(default=None)
    sum_loss: np.ndarray = field(default=None)
    sum_wealth: np.ndarray = field(default=None)

    def __post_init__(self):
        self.pi0 = np.array(_as_table(self.pi0), dtype=float)
        shape = self.pi0.shape
        if self.w is None:
            self.w = np.zeros(shape)
        if self.sum_loss is None:
            self.sum_loss = np.zeros(shape)
        if self.sum_wealth is None:
            self.sum_wealth = np.zeros(shape)

    def policy(self) -> Policy:
        return Policy(coin_policy(self.pi0, self.w))


def coin_policy(pi0: np.ndarray, w: np.ndarray) -> np.ndarray:
    weights = pi0 * np.maximum(w, 0.0)
    totals = weights.sum(axis=1, keepdims=True)
    return np.where(totals > 0, weights / np.where(totals > 0, totals, 1.0), pi0)


def cb_primal_step(state: PrimalCoinState, adv: np.ndarray, mask=None) -> Policy:
    """Advance the coin-betting recursion by one round and return ``pi_{t+1}``.

    Rows outside ``mask`` keep their bets and sums untouched.
    """
    if state.t >= state.T:
        raise ValueError(f"coin-betting primal already ran its T={state.T} rounds")
    adv = np.asarray(adv, dtype=float)
    clipped = np.where(state.w > 0, adv, np.maximum(adv, 0.0))
    sum_loss = state.sum_loss + clipped
    sum_wealth = state.sum_wealth + clipped * state.w
    w_next = sum_loss / ((state.t + 1) + state.T / 2.0) * (1.0 + sum_wealth)
    if mask is not None:
        rows = np.asarray(mask, bool)[:, None]
        sum_loss = np.where(rows, sum_loss, state.sum_loss)
        sum_wealth = np.where(rows, sum_wealth, state.sum_wealth)
        w_next = np.where(rows, w_next, state.w)
    state.sum_loss, state.sum_wealth, state.w = sum_loss, sum_wealth, w_next
    state.t += 1
    return state.policy()


@dataclass
class DualState:
    lam: float
    U: float
    lam0: float = 0.0


@dataclass
class ProjectedGDDual(DualState):
    eta2: float = 0.0

    def step(self, est_Jc: float, b: float) -> float:
        self.lam = projected_gd_dual_step(self.lam, est_Jc, b, self.eta2, self.U)
        return self.lam


@dataclass
class CoinBettingDual(DualState):
    """Running sums: ``sum_grad`` = sum(J_c_hat - b), ``sum_abs`` = sum|.|,
    ``wealth_loss`` = sum (lam_i - lam0)(J_c_hat(i) - b)."""

    gamma: float = 0.9
    sum_grad: float = 0.0
    sum_abs: float = 0.0
    wealth_loss: float = 0.0

    def step(self, est_Jc: float, b: float) -> float:
        return cb_dual_step(self, est_Jc, b, self.gamma, self.U)


def sigmoid(x: float) -> float:
    if x >= 0:
        return 1.0 / (1.0 + math.exp(-x))
    z = math.exp(x)
    return z / (1.0 + z)


def cb_dual_step(state: CoinBettingDual, est_Jc: float, b: float, gamma: float, U: float) -> float:
    g = est_Jc - b
    state.sum_grad += g
    state.sum_abs += abs(g)
    state.wealth_loss += (state.lam - state.lam0) * g
    scale = 1.0 / (1.0 - gamma)
    x = 2.0 * state.sum_grad / (scale + state.sum_abs)
    beta = (1.0 - gamma) * (2.0 * sigmoid(x) - 1.0)
    raw = state.lam0 - beta * (scale - state.wealth_loss)
    state.lam = float(np.clip(raw, 0.0, U))
    return state.lam


@dataclass
class PracticalCoinDual(DualState):
    """Adaptive-scale coin betting on ``g = b - J_c_hat``."""

    alpha: float = 1.0
    L: float = 0.0
    sum_g: float = 0.0
    sum_abs: float = 0.0
    reward: float = 0.0

    def __post_init__(self):
        if self.alpha <= 0:
            raise ValueError("alpha_lambda must be positive")

    def step(self, est_Jc: float, b: float) -> float:
        return practical_cb_dual_step(self, est_Jc, b, self.alpha, self.U)


def practical_cb_dual_step(state: PracticalCoinDual, est_Jc: float, b: float,
                           alpha_lambda: float, U: float) -> float:
    if alpha_lambda <= 0:
        raise ValueError("alpha_lambda must be positive")
    g = b - est_Jc
    state.L = max(state.L, abs(g))
    state.sum_g += g
    state.sum_abs += abs(g)
    state.reward += max((state.lam - state.lam0) * g, 0.0)
    L = state.L
    if L == 0.0:
        raw = state.lam0
    else:
        raw = state.lam0 + state.sum_g / (L * max(state.sum_abs + L, alpha_lambda * L)) * (
            L + state.reward)
    state.lam = float(np.clip(raw, 0.0, U))
    return state.lam
