"""Benchmark CMDPs and a seeded trajectory sampler."""

from __future__ import annotations

from typing import Sequence

import numpy as np

from .cmdp import Policy, TabularCmdp
from .lp import Infeasible

GRID_SIZE = 5
ACTIONS = ("N", "S", "E", "W")
_MOVES = {0: (-1, 0), 1: (1, 0), 2: (0, 1), 3: (0, -1)}

# teleport cells (row, col) and their per-step (reward, constraint reward)
CELL_A, CELL_A_PRIME = (0, 1), (4, 1)
CELL_B, CELL_B_PRIME = (0, 3), (2, 3)
REWARD_A, CONSTRAINT_A = 1.0, 0.1
REWARD_B, CONSTRAINT_B = 0.5, 1.0


def cell_index(row: int, col: int, n_cols: int = GRID_SIZE) -> int:
    return row * n_cols + col


def resolve_rho(rho, n_states: int) -> np.ndarray:
    """Accepts ``"uniform"``, ``{"point": s}`` or an explicit vector."""
    if rho is None or (isinstance(rho, str) and rho == "uniform"):
        return np.full(n_states, 1.0 / n_states)
    if isinstance(rho, dict):
        if set(rho) != {"point"}:
            raise ValueError(f"unsupported rho specification {rho!r}")
        s = int(rho["point"])
        if not 0 <= s < n_states:
            raise ValueError(f"rho point {s} outside [0, {n_states})")
        vec = np.zeros(n_states)
        vec[s] = 1.0
        return vec
    if isinstance(rho, str):
        raise ValueError(f"unsupported rho specification {rho!r}")
    vec = np.asarray(rho, dtype=float)
    if vec.shape != (n_states,) or np.any(vec < 0) or abs(vec.sum() - 1.0) > 1e-12:
        raise ValueError("rho must be a probability vector over the states")
    return vec


def gridworld_model(gamma: float = 0.9, rho="uniform"):
    """Transition, reward and constraint tables of the 5x5 teleport gridworld."""
    n = GRID_SIZE
    S, A = n * n, len(ACTIONS)
    P = np.zeros((S, A, S))
    r = np.zeros((S, A))
    c = np.zeros((S, A))
    specials = {
        CELL_A: (CELL_A_PRIME, REWARD_A, CONSTRAINT_A),
        CELL_B: (CELL_B_PRIME, REWARD_B, CONSTRAINT_B),
    }
    for row in range(n):
        for col in range(n):
            s = cell_index(row, col)
            for a, (dr, dc) in _MOVES.items():
                if (row, col) in specials:
                    dest, rew, con = specials[(row, col)]
                    P[s, a, cell_index(*dest)] = 1.0
                    r[s, a], c[s, a] = rew, con
                    continue
                nr, nc = row + dr, col + dc
                if not (0 <= nr < n and 0 <= nc < n):
                    nr, nc = row, col
                P[s, a, cell_index(nr, nc)] = 1.0
    return P, r, c, resolve_rho(rho, S)


def make_gridworld(gamma: float = 0.9, b: float | None = None, rho="uniform",
                   *, b_fraction: float = 0.5, require_feasible: bool = True) -> TabularCmdp:
    """The 5x5 gridworld with A/B teleports.

    When ``b`` is omitted the threshold defaults to ``b_fraction`` times the
    largest achievable constraint value.
    """
    from .oracle import value_iteration

    P, r, c, rho_vec = gridworld_model(gamma, rho)
    base = TabularCmdp(P, r, c, 0.0, rho_vec, gamma)
    if b is None or require_feasible:
        _, _, max_jc = value_iteration(base, signal="constraint")
        if b is None:
            b = b_fraction * max_jc
        elif b >= max_jc:
            raise Infeasible(f"threshold {b} is not below max_pi J_c = {max_jc}")
    return base.with_threshold(b)


def make_random_cmdp(n_states: int, n_actions: int, gamma: float, seed: int, *,
                     b: float | None = None, concentration: float = 1.0,
                     rho="uniform") -> TabularCmdp:
    """Random dense CMDP; ``b`` defaults to the uniform policy's constraint value."""
    rng = np.random.default_rng(seed)
    P = rng.dirichlet(np.full(n_states, concentration), size=(n_states, n_actions))
    P /= P.sum(axis=2, keepdims=True)
    r = rng.random((n_states, n_actions))
    c = rng.random((n_states, n_actions))
    cmdp = TabularCmdp(P, r, c, 0.0, resolve_rho(rho, n_states), gamma)
    if b is None:
        from .cmdp import scalar_value

        b = scalar_value(cmdp, Policy.uniform(n_states, n_actions), "constraint")
    return cmdp.with_threshold(b)


class _RowSampler:
    """Inverse-CDF sampling from many categorical rows at once.

    Only the nonzero entries of each row are kept (padded to the widest row),
    so sparse rows such as deterministic moves cost a single comparison.
    """

    def __init__(self, probs: np.ndarray):
        probs = np.asarray(probs).reshape(-1, probs.shape[-1])
        n_rows, width = probs.shape
        nnz = (probs > 0).sum(axis=1)
        k = max(int(nnz.max()), 1)
        self.index = np.full((n_rows, k), width - 1, dtype=int)
        self.cum = np.ones((n_rows, k))
        for i in range(n_rows):
            cols = np.flatnonzero(probs[i] > 0)
            self.index[i, :cols.size] = cols
            self.cum[i, :cols.size] = np.cumsum(probs[i, cols])
            self.index[i, cols.size:] = cols[-1] if cols.size else width - 1
        self.cum[:, -1] = 1.0
        self.k = k

    def __call__(self, rows: np.ndarray, u: np.ndarray) -> np.ndarray:
        if self.k == 1:
            return self.index[rows, 0]
        j = (u[:, None] >= self.cum[rows]).sum(axis=1)
        return self.index[rows, np.minimum(j, self.k - 1)]


def sample_rollouts(cmdp: TabularCmdp, policy: Policy, start: tuple[int, int],
                    horizon: int, n: int, rng: np.random.Generator):
    """``n`` truncated discounted returns that start with action ``a`` in ``s``.

    Returns arrays ``(ret_r, ret_c)`` of length ``n``.
    """
    ret_r, ret_c = sample_rollouts_batch(cmdp, policy, [start], horizon, n, [rng])
    return ret_r[0], ret_c[0]


def sample_rollouts_batch(cmdp: TabularCmdp, policy: Policy, starts, horizon: int,
                          n: int, rngs):
    """Simulate ``n`` rollouts from every start pair at once.

    Start ``i`` consumes uniforms only from ``rngs[i]`` (one block of shape
    ``(horizon - 1, 2, n)``), so its returns match a call with that start alone.
    Returns arrays of shape ``(len(starts), n)``.
    """
    k = len(starts)
    if k == 0:
        return np.zeros((0, n)), np.zeros((0, n))
    steps = max(horizon - 1, 0)
    u = np.stack([g.random((steps, 2, n)) for g in rngs], axis=2).reshape(steps, 2, k * n)
    next_state = _RowSampler(cmdp.transition)
    next_action = _RowSampler(policy.probs)
    A = cmdp.n_actions
    starts = np.asarray(starts, dtype=int).reshape(k, 2)
    states = np.repeat(starts[:, 0], n)
    actions = np.repeat(starts[:, 1], n)
    ret_r = np.zeros(k * n)
    ret_c = np.zeros(k * n)
    disc = 1.0
    for h in range(horizon):
        ret_r += disc * cmdp.reward[states, actions]
        ret_c += disc * cmdp.constraint_reward[states, actions]
        disc *= cmdp.gamma
        if h == horizon - 1:
            break
        states = next_state(states * A + actions, u[h, 0])
        actions = next_action(states, u[h, 1])
    return ret_r.reshape(k, n), ret_c.reshape(k, n)


def sample_rollout(cmdp: TabularCmdp, policy: Policy, start: tuple[int, int],
                   horizon: int, rng: np.random.Generator):
    """Single trajectory: ``(return_r, return_c, visited_states)``."""
    s, a = start
    cum_P = np.cumsum(cmdp.transition, axis=2)
    cum_pi = np.cumsum(policy.probs, axis=1)
    ret_r = ret_c = 0.0
    disc = 1.0
    visited = []
    for h in range(horizon):
        visited.append(int(s))
        ret_r += disc * cmdp.reward[s, a]
        ret_c += disc * cmdp.constraint_reward[s, a]
        disc *= cmdp.gamma
        if h == horizon - 1:
            break
        s = int(min(np.searchsorted(cum_P[s, a], rng.random(), side="right"),
                    cmdp.n_states - 1))
        a = int(min(np.searchsorted(cum_pi[s], rng.random(), side="right"),
                    cmdp.n_actions - 1))
    return ret_r, ret_c, visited


def sample_state_trajectory(cmdp: TabularCmdp, policy: Policy, horizon: int,
                            rng: np.random.Generator) -> list[int]:
    """States visited by one trajectory started from ``rho``."""
    s = int(min(np.searchsorted(np.cumsum(cmdp.rho), rng.random(), side="right"),
                cmdp.n_states - 1))
    a = int(min(np.searchsorted(np.cumsum(policy.probs[s]), rng.random(), side="right"),
                cmdp.n_actions - 1))
    return sample_rollout(cmdp, policy, (s, a), horizon, rng)[2]


def all_pairs(n_states: int, n_actions: int) -> Sequence[tuple[int, int]]:
    return [(s, a) for s in range(n_states) for a in range(n_actions)]
