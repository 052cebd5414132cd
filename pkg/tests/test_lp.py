import numpy as np
import pytest
from scipy.optimize import linprog

from cbpolitex.lp import Infeasible, Unbounded, linprog_max


def test_textbook_problem():
    # max 3x + 5y st x <= 4, 2y <= 12, 3x + 2y <= 18
    res = linprog_max([3, 5], A_ub=[[1, 0], [0, 2], [3, 2]], b_ub=[4, 12, 18])
    assert res.objective == pytest.approx(36.0)
    np.testing.assert_allclose(res.x, [2, 6], atol=1e-10)


def test_equality_and_duals():
    res = linprog_max([1, 1], A_eq=[[1, 2]], b_eq=[4], A_ub=[[1, 0]], b_ub=[3])
    assert res.objective == pytest.approx(3.5)
    # objective sensitivity: d obj / d b_eq = 0.5, d obj / d b_ub = 0.5
    assert res.duals_eq[0] == pytest.approx(0.5)
    assert res.duals_ub[0] == pytest.approx(0.5)


def test_infeasible():
    with pytest.raises(Infeasible):
        linprog_max([1], A_ub=[[1]], b_ub=[-1])


def test_unbounded():
    with pytest.raises(Unbounded):
        linprog_max([1, 0], A_ub=[[-1, 1]], b_ub=[1])


def test_redundant_equalities():
    res = linprog_max([1, 2], A_eq=[[1, 1], [2, 2]], b_eq=[1, 2])
    assert res.objective == pytest.approx(2.0)


@pytest.mark.parametrize("seed", range(40))
def test_matches_reference_solver(seed):
    rng = np.random.default_rng(seed)
    n, m_eq, m_ub = rng.integers(2, 9), rng.integers(0, 3), rng.integers(1, 6)
    x0 = rng.random(n)  # keeps the instance feasible
    A_eq = rng.normal(size=(m_eq, n))
    A_ub = rng.normal(size=(m_ub, n))
    b_eq = A_eq @ x0
    b_ub = A_ub @ x0 + rng.random(m_ub)
    # box rows keep it bounded
    A_ub = np.vstack([A_ub, np.eye(n)])
    b_ub = np.concatenate([b_ub, np.full(n, 5.0)])
    c = rng.normal(size=n)
    ref = linprog(-c, A_ub=A_ub, b_ub=b_ub, A_eq=A_eq if m_eq else None,
                  b_eq=b_eq if m_eq else None, bounds=(0, None), method="highs")
    assert ref.status == 0
    res = linprog_max(c, A_eq=A_eq, b_eq=b_eq, A_ub=A_ub, b_ub=b_ub)
    assert res.objective == pytest.approx(-ref.fun, abs=1e-7)
    assert np.all(res.x >= -1e-9)
    assert np.max(A_ub @ res.x - b_ub) <= 1e-7
    if m_eq:
        assert np.max(np.abs(A_eq @ res.x - b_eq)) <= 1e-7
