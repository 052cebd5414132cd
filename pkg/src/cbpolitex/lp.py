"""Small dense two-phase simplex with Bland's anti-cycling rule.

Solves ``max c.x  s.t.  A_eq x = b_eq,  A_ub x <= b_ub,  x >= 0``.
Sized for desk-scale problems (a few hundred columns); every pivot is a full
tableau update.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


class Infeasible(Exception):
    """No point satisfies the constraints."""


class Unbounded(Exception):
    """The objective grows without bound on the feasible set."""


@dataclass
class LPResult:
    x: np.ndarray
    objective: float
    basis: np.ndarray
    duals_eq: np.ndarray
    duals_ub: np.ndarray
    n_pivots: int


def _pivot(tab: np.ndarray, row: int, col: int) -> None:
    tab[row] /= tab[row, col]
    piv = tab[row]
    col_vals = tab[:, col].copy()
    col_vals[row] = 0.0
    tab -= np.outer(col_vals, piv)


def _run(tab, basis, n_cols, tol, max_pivots):
    """Minimize the objective stored in the last row (reduced costs) over the
    first ``n_cols`` columns.  Returns the pivot count."""
    m = tab.shape[0] - 1
    pivots = 0
    while True:
        red = tab[-1, :n_cols]
        candidates = np.nonzero(red < -tol)[0]
        if candidates.size == 0:
            return pivots
        col = int(candidates[0])
        column = tab[:m, col]
        pos = column > tol
        if not np.any(pos):
            raise Unbounded("objective is unbounded")
        ratios = np.full(m, np.inf)
        ratios[pos] = tab[:m, -1][pos] / column[pos]
        best = ratios.min()
        ties = np.nonzero(ratios <= best + tol * max(1.0, abs(best)))[0]
        row = int(ties[np.argmin(basis[ties])])
        _pivot(tab, row, col)
        basis[row] = col
        pivots += 1
        if pivots > max_pivots:
            raise RuntimeError("simplex exceeded its pivot budget")


def linprog_max(c, A_eq=None, b_eq=None, A_ub=None, b_ub=None, *, tol: float = 1e-9,
                max_pivots: int = 50_000) -> LPResult:
    c = np.asarray(c, dtype=float)
    n = c.size
    A_eq = np.zeros((0, n)) if A_eq is None else np.atleast_2d(np.asarray(A_eq, float))
    b_eq = np.zeros(0) if b_eq is None else np.asarray(b_eq, float).ravel()
    A_ub = np.zeros((0, n)) if A_ub is None else np.atleast_2d(np.asarray(A_ub, float))
    b_ub = np.zeros(0) if b_ub is None else np.asarray(b_ub, float).ravel()
    m_eq, m_ub = A_eq.shape[0], A_ub.shape[0]
    m = m_eq + m_ub

    # standard form columns: x (n) | slacks (m_ub)
    A = np.zeros((m, n + m_ub))
    A[:m_eq, :n] = A_eq
    A[m_eq:, :n] = A_ub
    A[m_eq:, n:] = np.eye(m_ub)
    rhs = np.concatenate([b_eq, b_ub])
    sign = np.where(rhs < 0, -1.0, 1.0)
    A *= sign[:, None]
    rhs = rhs * sign
    n_std = n + m_ub

    # phase 1 with one artificial per row
    tab = np.zeros((m + 1, n_std + m + 1))
    tab[:m, :n_std] = A
    tab[:m, n_std:n_std + m] = np.eye(m)
    tab[:m, -1] = rhs
    tab[-1, :n_std] = -A.sum(axis=0)
    tab[-1, -1] = -rhs.sum()
    basis = np.arange(n_std, n_std + m)
    pivots = _run(tab, basis, n_std + m, tol, max_pivots)
    if -tab[-1, -1] > 1e3 * tol * max(1.0, np.abs(rhs).max(initial=0.0)):
        raise Infeasible(f"phase-1 residual {-tab[-1, -1]:.3e}")

    # drive zero-level artificials out of the basis; drop redundant rows
    keep = np.ones(m, dtype=bool)
    for i in range(m):
        if basis[i] < n_std:
            continue
        cand = np.nonzero(np.abs(tab[i, :n_std]) > 1e-7)[0]
        if cand.size:
            _pivot(tab, i, int(cand[0]))
            basis[i] = int(cand[0])
            pivots += 1
        else:
            keep[i] = False
    rows = np.nonzero(keep)[0]

    tab2 = np.zeros((rows.size + 1, n_std + 1))
    tab2[:-1, :n_std] = tab[rows, :n_std]
    tab2[:-1, -1] = tab[rows, -1]
    basis2 = basis[rows].copy()
    cost = np.zeros(n_std)
    cost[:n] = -c  # minimize -c.x
    tab2[-1, :n_std] = cost
    for i, j in enumerate(basis2):
        tab2[-1] -= cost[j] * tab2[i]
    pivots += _run(tab2, basis2, n_std, tol, max_pivots)

    z = np.zeros(n_std)
    z[basis2] = tab2[:-1, -1]
    z = np.clip(z, 0.0, None)
    x = z[:n]

    # duals y with B^T y = c_B on the kept (sign-normalised) rows
    full_cost = np.zeros(n_std)
    full_cost[:n] = c
    B = A[np.ix_(rows, basis2)]
    y_kept = np.linalg.lstsq(B.T, full_cost[basis2], rcond=None)[0]
    y = np.zeros(m)
    y[rows] = y_kept
    y *= sign
    return LPResult(x=x, objective=float(c @ x), basis=basis2, duals_eq=y[:m_eq],
                    duals_ub=y[m_eq:], n_pivots=pivots)
