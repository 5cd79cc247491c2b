"""Tests for the velocity-field family: pointwise values, series sums,
rescalings, and grid diagnostics."""

import numpy as np
import pytest

from fractalflow import fields, geometry
from fractalflow.geometry import Rect, derive_constants


def naive_series(alpha, s, x, depth):
    """Direct double sum over all words, as an oracle for the tree descent."""
    x = np.atleast_2d(np.asarray(x, dtype=float))
    total = np.zeros_like(x)
    for k in range(depth + 1):
        for w in geometry.all_words(k):
            total += alpha ** k * fields.eval_rescaled(w, s, alpha, x)
    return total


def test_fundamental_plateau_is_exact():
    p = derive_constants(0.6)
    u = fields.fundamental(0.6)
    xs = np.linspace(p.delta, 2.0, 9)
    ys = np.linspace(-np.sqrt(2.0), np.sqrt(2.0), 7)
    pts = np.stack(np.meshgrid(xs, ys), axis=-1).reshape(-1, 2)
    v = u(pts)
    assert np.all(v[:, 0] == -1.0)
    assert np.all(v[:, 1] == 0.0)
    v2 = u(-pts)
    assert np.all(v2[:, 0] == 1.0)
    assert np.all(v2[:, 1] == 0.0)


def test_fundamental_support():
    p = derive_constants(0.6)
    u = fields.fundamental(0.6)
    # points outside the eps-inflated rectangle
    pts = np.array(
        [
            [2.0 + 2.0 * p.eps, 0.0],
            [0.0, np.sqrt(2.0) + 2.0 * p.eps],
            [-3.0, -3.0],
        ]
    )
    assert np.all(fields.eval_u(0.6, pts) == 0.0)
    assert np.all(u(pts) == 0.0)


def test_smoothed_sign_shape():
    d = 0.03
    z = np.linspace(-2.0 * d, 2.0 * d, 401)
    s = fields.smoothed_sign(z, d)
    assert np.max(np.abs(s + fields.smoothed_sign(-z, d))) == 0.0
    assert np.all(np.diff(s) >= 0.0)
    assert fields.smoothed_sign(np.array([d]), d)[0] == 1.0
    assert fields.smoothed_sign(np.array([-d]), d)[0] == -1.0
    with pytest.raises(ValueError):
        fields.smoothed_sign(z, 0.0)


def test_smoothed_sign_derivative_consistency():
    d = 0.05
    z = np.linspace(-0.9 * d, 0.9 * d, 101)
    h = 1e-6
    fd = (fields.smoothed_sign(z + h, d) - fields.smoothed_sign(z - h, d)) / (2 * h)
    assert np.max(np.abs(fd - fields.smoothed_sign_d(z, d))) < 1e-3


def test_series_tree_matches_naive_double_sum():
    alpha = 0.6
    rng = np.random.default_rng(11)
    x = rng.uniform(-2.3, 2.3, size=(120, 2))
    for s in (0.0, 0.4 * derive_constants(alpha).delta):
        tree = fields._series_sum(alpha, s, x, depth=6)
        naive = naive_series(alpha, s, x, depth=6)
        assert np.max(np.abs(tree - naive)) < 1e-12


def test_eval_U_time_profile_factor():
    alpha = 0.6
    eta = fields.eta_profile(alpha)
    x = np.array([[0.3, 0.2], [1.1, -0.5]])
    t = 0.37
    expected = float(eta(t)) * fields._series_sum(
        alpha, float(eta.cum(t)), x, depth=12
    )
    assert np.allclose(fields.eval_U(alpha, t, x, depth=12), expected, atol=1e-14)
    assert np.all(fields.eval_U(alpha, 0.0, x) == 0.0)


def test_eta_profile_masses():
    p = derive_constants(0.6)
    eta = fields.eta_profile(0.6)
    assert abs(float(eta.cum(1.0)) - p.delta) < 1e-10
    assert abs(float(fields.eta_tilde_profile().cum(1.0)) - 1.0) < 1e-10
    assert float(eta(0.0)) == 0.0 and float(eta(1.0)) == 0.0


def test_collapse_schedule_and_window():
    p = derive_constants(0.6)
    xi = fields.default_xi(p.gamma)
    assert np.sqrt(p.gamma) < xi < 1.0
    tk = fields.collapse_schedule(p.gamma, xi, count=6)
    assert abs(tk[0]) == 0.0
    assert abs(tk[-1] - (1.0 - xi ** 6) / (1.0 - xi)) < 1e-14
    # locate_window inverts the schedule
    for k in range(5):
        t_mid = tk[k] + 0.5 * xi ** k
        assert fields.locate_window(xi, t_mid) == k
    with pytest.raises(ValueError):
        fields.collapse_schedule(p.gamma, 0.5 * np.sqrt(p.gamma))


def test_collapse_field_is_rescaled_series():
    alpha = 0.6
    p = derive_constants(alpha)
    xi = fields.default_xi(p.gamma)
    k = 2
    tk = fields.collapse_schedule(p.gamma, xi)[k]
    t = tk + 0.45 * xi ** k
    rng = np.random.default_rng(5)
    x = rng.uniform(-1.0, 1.0, size=(40, 2))
    w = fields.eval_W(alpha, xi, t, x, depth=12)
    expected = (p.gamma / xi) ** k * fields.eval_U(
        alpha, (t - tk) / xi ** k, x / p.gamma ** k, depth=12
    )
    assert np.max(np.abs(w - expected)) < 1e-13


def test_nu_plateau_value_and_direction():
    # on the plateau every ramp is saturated and the cutoff is flat, so the
    # field is a constant horizontal drag
    # ahead of the advected tip (x1 = 24 - 3 s(t)) all ramps saturate
    t = 0.5
    eta_t = float(fields.eta_tilde_profile()(t))
    x = np.array([[22.6, 0.3], [23.0, -0.5], [23.8, 0.0]])
    v = fields.eval_nu(t, x)
    assert np.allclose(v[:, 0], -3.0 * eta_t, atol=1e-12)
    assert np.allclose(v[:, 1], 0.0, atol=1e-12)


def test_nu_vanishes_far_out():
    v = fields.eval_nu(0.5, np.array([[80.0, 0.0], [0.0, 70.0]]))
    assert np.max(np.abs(v)) == 0.0


def test_block_map_geometry():
    for k in (1, 2, 3):
        g = fields.block_map(k)
        f = (7.0 / 8.0) ** (k - 1)
        assert np.allclose(g(np.zeros((1, 2)))[0], [24.0 * f, 0.0], atol=1e-14)
        assert abs(g.scale - f / np.sqrt(2.0)) < 1e-15
        assert g.rotation_power == 1


def test_block_series_stage_structure():
    # within block k the series runs its own alpha_k, gamma_k ladder
    k = 1
    a_k, g_k = fields.block_params(k)
    assert 0.5 < a_k < 1.0 / np.sqrt(2.0)
    assert abs(g_k - (7.0 / 8.0) ** (1.0 / (k + 1))) < 1e-14
    x = np.array([[0.3, 0.1]])
    v0 = fields.eval_block_series(k, 0.2, x, depth=10)
    assert v0.shape == (1, 2)


def test_vtilde_stage_times():
    ts = fields.stage_times(3)
    assert abs(ts[1] - 2.0) < 1e-12
    assert abs(ts[2] - 34.0 / 9.0) < 1e-12
    rng = np.random.default_rng(2)
    x = rng.uniform(18.0, 25.0, size=(10, 2))
    # first stage of Vtilde is V itself
    t = 0.7
    assert np.allclose(
        fields.eval_Vtilde(t, x, kmax=8, depth=8),
        fields.eval_V(t, x, kmax=8, depth=8),
        atol=1e-12,
    )


def test_grid_divergence_first_order_decay():
    su = fields.series_U_handle(0.6, depth=4)
    reg = Rect((0.3, 0.2), (0.1, 0.1))
    d1 = fields.grid_divergence(su, reg, 4e-4, 0.4)
    d2 = fields.grid_divergence(su, reg, 2e-4, 0.4)
    assert d2 < 0.6 * d1
    nu = fields.aux_nu_handle(kmax=12)
    reg2 = Rect((10.0, 1.0), (2.0, 1.0))
    e1 = fields.grid_divergence(nu, reg2, 2e-2, 0.5)
    e2 = fields.grid_divergence(nu, reg2, 1e-2, 0.5)
    assert e2 < 0.6 * e1


def test_field_handle_tolerance_budget():
    h8 = fields.series_U_handle(0.6, depth=8)
    h16 = fields.series_U_handle(0.6, depth=16)
    assert 0.0 < h16.tolerance < h8.tolerance
    # truncation difference bounded by the coarser handle's tolerance
    rng = np.random.default_rng(8)
    x = rng.uniform(-2.0, 2.0, size=(60, 2))
    d = np.max(np.abs(h8.eval(0.5, x) - h16.eval(0.5, x)))
    assert d <= h8.tolerance


def test_negated_reflection():
    h = fields.fundamental_u_handle(0.6)
    r = h.negated_reflection(1.0)
    x = np.array([[0.4, 0.3]])
    assert np.allclose(r.eval(0.3, x), -h.eval(0.7, x), atol=1e-15)


def test_grid_sample_binary_roundtrip(tmp_path):
    h = fields.fundamental_u_handle(0.6)
    gs = fields.sample_field(h, Rect((0.0, 0.0), (1.0, 0.5)), 0.25, 0.0)
    path = tmp_path / "grid.bin"
    gs.to_binary(str(path))
    back = fields.GridSample.from_binary(str(path))
    assert back.values.shape == gs.values.shape
    assert np.array_equal(back.values, gs.values)
    assert back.h == gs.h
    assert np.allclose(back.origin, gs.origin)
    csv = gs.to_csv()
    assert csv.splitlines()[0] == "x,y,vx,vy"


def test_sobolev_norm_monotone_in_p():
    h = fields.fundamental_u_handle(0.6)
    reg = Rect((0.0, 0.0), (2.2, 1.6))
    n1 = fields.sobolev_norm(h, 0.0, 1.0, reg, 0.02)
    n15 = fields.sobolev_norm(h, 0.0, 1.5, reg, 0.02)
    assert n1 > 0.0 and n15 > 0.0
