import numpy as np
import pytest
from hypothesis import assume, given
from hypothesis import strategies as st

from cbpolitex.design import build_coreset, full_enumeration_coreset, leverage
from cbpolitex.features import FeatureMap, build_one_hot, build_tile_coding


def random_map(seed, S=6, A=3, d=4):
    rng = np.random.default_rng(seed)
    return FeatureMap("random", S, A, rng.normal(size=(S * A, d)))


def test_one_hot_each_coordinate_once():
    fmap = build_one_hot(3, 2)
    core = build_coreset(fmap, 0.8)
    assert len(core) == 6
    assert sorted(core.points) == [(s, a) for s in range(3) for a in range(2)]
    assert core.sup_leverage == pytest.approx(1 / np.sqrt(2))
    assert core.gains == pytest.approx([1.0] * 6)


def test_unit_features_below_threshold_give_empty_coreset():
    core = build_coreset(build_one_hot(2, 2), 1.05)
    assert len(core) == 0
    assert core.sup_leverage == pytest.approx(1.0)


def test_leverage_empty_coreset_and_zero():
    core = build_coreset(build_one_hot(2, 2), 1.05)
    assert leverage(core, np.array([0.6, 0.8, 0.0, 0.0])) == pytest.approx(1.0)
    assert leverage(core, np.zeros(4)) == 0.0


def test_leverage_matches_dense_inverse():
    fmap = random_map(0)
    core = build_coreset(fmap, 0.5)
    Phi = core.phi
    direct = np.linalg.inv(core.nu * np.eye(fmap.d) + Phi.T @ Phi)
    x = np.random.default_rng(1).normal(size=fmap.d)
    assert leverage(core, x) == pytest.approx(np.sqrt(x @ direct @ x), abs=1e-8)


def test_gridworld_tile40_fixture():
    core = build_coreset(build_tile_coding((5, 5), 4, (1, 3)), 0.9)
    assert len(core) == 40
    assert core.sup_leverage == pytest.approx(1 / np.sqrt(2), abs=1e-9)
    # recompute from scratch and rescan all pairs
    M = build_tile_coding((5, 5), 4, (1, 3)).matrix()
    direct = np.linalg.inv(np.eye(40) + core.phi.T @ core.phi)
    lev = np.sqrt(np.einsum("nd,de,ne->n", M, direct, M))
    assert lev.max() <= 0.9


def test_cap_is_reported(caplog):
    core = build_coreset(random_map(0, S=2, A=2, d=3), 0.05)
    assert core.capped and len(core) == 4
    assert "cap" in caplog.text


def test_errors():
    with pytest.raises(ValueError):
        build_coreset(build_one_hot(2, 2), 0.0)
    with pytest.raises(ValueError):
        build_coreset(build_one_hot(2, 2), 0.5, pairs=[])


def test_omega_and_json():
    core = build_coreset(random_map(3), 0.6)
    assert core.omega.sum() == pytest.approx(1.0)
    doc = core.to_json()
    assert doc["size"] == len(core) and doc["d"] == 4
    assert isinstance(core.kw_size_check(), bool)


def test_full_enumeration():
    core = full_enumeration_coreset(build_one_hot(2, 3))
    assert len(core) == 6
    np.testing.assert_allclose(core.gram, np.eye(6) / 6)


@given(st.integers(0, 10_000), st.floats(0.2, 1.5), st.integers(1, 6))
def test_sherman_morrison_and_termination(seed, eps_prime, d):
    fmap = random_map(seed, d=d)
    Phi_all = fmap.matrix()
    errors = []

    def check(k, point, ginv):
        rows = core_rows[:k]
        direct = np.linalg.inv(np.eye(d) + np.array(rows).T @ np.array(rows))
        errors.append(np.linalg.norm(ginv - direct))

    # on_insert sees pairs in selection order; collect their features first
    core_rows = []

    def record(k, point, ginv):
        core_rows.append(fmap.featurize(*point))
        check(k, point, ginv)

    core = build_coreset(fmap, eps_prime, on_insert=record)
    assert max(errors, default=0.0) <= 1e-8
    assert all(a >= b - 1e-12 for a, b in zip(core.gains, core.gains[1:]))
    # the termination guarantee holds unless the S*A insertion cap stopped the loop
    assume(not core.capped)
    lev = np.sqrt(np.einsum("nd,de,ne->n", Phi_all, core.ginv, Phi_all))
    assert lev.max() <= eps_prime + 1e-12
