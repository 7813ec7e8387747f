"""Grid construction and the monotone generator matrix."""

import numpy as np
import pytest

from wageladder import ConfigError, EllipticityError, build_action_grid, build_grid
from wageladder.grid import TridiagonalOperator, assemble_generator


def test_grid_nodes_uniform_and_pinned():
    g = build_grid(-0.6, 3.9, 451)
    assert g.K == 451
    assert g.nodes[0] == -0.6
    assert g.nodes[-1] == 3.9
    np.testing.assert_allclose(np.diff(g.nodes), g.dz, rtol=0, atol=1e-15)
    assert g.dz == pytest.approx(4.5 / 450, rel=1e-15)


def test_grid_nodes_read_only():
    g = build_grid(0.0, 1.0, 11)
    with pytest.raises(ValueError):
        g.nodes[0] = 5.0


def test_grid_rejects_bad_shapes():
    with pytest.raises(ConfigError):
        build_grid(0.0, 1.0, 2)
    with pytest.raises(ConfigError):
        build_grid(1.0, 1.0, 10)
    with pytest.raises(ConfigError):
        build_grid(2.0, 1.0, 10)


def test_index_nearest_rounds_and_clips():
    g = build_grid(0.0, 1.0, 11)
    assert g.index_nearest(0.0) == 0
    assert g.index_nearest(0.34) == 3
    assert g.index_nearest(0.35001) == 4
    assert g.index_nearest(-3.0) == 0
    assert g.index_nearest(9.0) == 10


def test_action_grid_starts_at_zero():
    a = build_action_grid(0.3, 21)
    assert a.values[0] == 0.0
    assert a.values[-1] == pytest.approx(0.3)
    assert np.all(np.diff(a.values) > 0)
    with pytest.raises(ConfigError):
        build_action_grid(0.3, 1)
    with pytest.raises(ConfigError):
        build_action_grid(-0.1, 5)


def test_operator_apply_matches_dense():
    rng = np.random.default_rng(7)
    K = 12
    op = TridiagonalOperator(
        lower=rng.normal(size=K - 1),
        diag=rng.normal(size=K),
        upper=rng.normal(size=K - 1),
        corner_lo=0.3,
        corner_hi=-0.2,
    )
    x = rng.normal(size=K)
    np.testing.assert_allclose(op.apply(x), op.dense() @ x, rtol=1e-13)


def test_generator_annihilates_constants():
    g = build_grid(-0.5, 2.0, 101)
    drift = np.linspace(-0.03, 0.02, g.K)
    vol2 = np.full(g.K, 0.01)
    op = assemble_generator(drift, vol2, g)
    np.testing.assert_allclose(op.apply(np.ones(g.K)), 0.0, atol=1e-14)
    np.testing.assert_allclose(op.dense().sum(axis=1), 0.0, atol=1e-14)


def test_generator_is_monotone():
    # nonnegative off-diagonals and nonpositive diagonal on every row,
    # for either drift sign and for sign-switching drift
    g = build_grid(0.0, 1.0, 41)
    for drift in (np.full(g.K, 0.05), np.full(g.K, -0.05), np.linspace(-0.1, 0.1, g.K)):
        op = assemble_generator(drift, np.full(g.K, 0.004), g)
        assert np.all(op.lower >= 0.0)
        assert np.all(op.upper >= 0.0)
        assert np.all(op.diag <= 0.0)
        assert op.corner_lo == 0.0 and op.corner_hi == 0.0


def test_generator_upwind_pairing():
    # positive drift loads the forward difference, negative the backward
    g = build_grid(0.0, 1.0, 5)
    vol2 = np.full(g.K, 0.004)
    up = assemble_generator(np.full(g.K, 0.08), vol2, g)
    down = assemble_generator(np.full(g.K, -0.08), vol2, g)
    half = 0.5 * 0.004 / g.dz**2
    assert up.upper[1] == pytest.approx(0.08 / g.dz + half)
    assert up.lower[0] == pytest.approx(half)
    assert down.lower[0] == pytest.approx(0.08 / g.dz + half)
    assert down.upper[1] == pytest.approx(half)


def test_generator_interior_row_consistency():
    # applying the generator to smooth functions recovers mu f' + vol2/2 f''
    g = build_grid(-1.0, 1.0, 801)
    drift = np.full(g.K, 0.03)
    vol2 = np.full(g.K, 0.02)
    op = assemble_generator(drift, vol2, g)
    f = np.sin(g.nodes)
    exact = 0.03 * np.cos(g.nodes) - 0.01 * np.sin(g.nodes)
    got = op.apply(f)
    np.testing.assert_allclose(got[1:-1], exact[1:-1], atol=5e-4)


def test_generator_convergence_order_in_dz():
    # diffusion part is second order, upwind drift first order; the total
    # interior truncation error shrinks at least linearly when dz halves
    drift_val, vol2_val = 0.03, 0.02

    def interior_error(K):
        g = build_grid(-1.0, 1.0, K)
        op = assemble_generator(np.full(g.K, drift_val), np.full(g.K, vol2_val), g)
        f = np.exp(g.nodes)
        exact = (drift_val + 0.5 * vol2_val) * np.exp(g.nodes)
        return np.max(np.abs((op.apply(f) - exact)[1:-1]))

    e1 = interior_error(201)
    e2 = interior_error(401)
    assert e2 < 0.6 * e1


def test_generator_edge_rows_drift_only():
    g = build_grid(0.0, 1.0, 21)
    vol2 = np.full(g.K, 0.004)
    op = assemble_generator(np.full(g.K, 0.05), vol2, g)
    # bottom row pushes inward with the drift alone
    assert op.upper[0] == pytest.approx(0.05 / g.dz)
    assert op.diag[0] == pytest.approx(-0.05 / g.dz)
    # top row has no outward-pointing entries under positive drift
    assert op.lower[-1] == 0.0
    assert op.diag[-1] == 0.0


def test_generator_rejects_degenerate_volatility():
    g = build_grid(0.0, 1.0, 11)
    vol2 = np.full(g.K, 0.01)
    vol2[4] = 0.0
    with pytest.raises(EllipticityError):
        assemble_generator(np.zeros(g.K), vol2, g)


def test_generator_rejects_shape_mismatch():
    g = build_grid(0.0, 1.0, 11)
    with pytest.raises(ValueError):
        assemble_generator(np.zeros(10), np.full(11, 0.01), g)
