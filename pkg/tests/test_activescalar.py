"""Tests for the singular axis kernel, its mollification, and the marker
collapse systems."""

import numpy as np
import pytest

from fractalflow import activescalar


def test_axis_kernel_shape():
    z = np.array([0.25, 1.0, 2.5, 3.5])
    v = activescalar.axis_kernel(z)
    assert v[0] == -0.5 and v[1] == -1.0
    assert v[3] == 0.0  # beyond the cutoff
    assert np.all(activescalar.axis_kernel(-z) == -v)


def test_mollified_kernel_basic_properties():
    M = activescalar.build_mollified(1e-2)
    z = np.linspace(-3.5, 3.5, 2001)
    v = M(z)
    assert np.max(np.abs(v + M(-z))) == 0.0  # exactly odd
    assert M(np.array([0.0]))[0] == 0.0
    # near-unmollified value away from the origin
    assert abs(M(np.array([1.0]))[0] + 1.0) < 1e-4
    # monotone nonincreasing on the table up to the cutoff shoulder
    core = M._z <= 2.0
    assert np.all(np.diff(M._v[core]) <= 0.0)
    assert np.all(M(np.array([4.0, -4.0])) == 0.0)


def test_mollified_kernel_tends_to_axis_kernel():
    z = np.array([0.1, 0.5, 1.0, 1.7])
    errs = []
    for eps in (1e-2, 5e-3, 2.5e-3):
        M = activescalar.build_mollified(eps)
        errs.append(np.max(np.abs(M(z) - activescalar.axis_kernel(z))))
    assert errs[1] < errs[0] and errs[2] < errs[1]


def test_mollified_magnitude_fast_path():
    M = activescalar.build_mollified(2e-3)
    az = np.linspace(0.0, 3.5, 500)
    assert np.array_equal(M.magnitude(az), -M(az))


def test_kernel_spec_and_eval():
    spec = activescalar.KernelSpec("slit2d")
    x = np.array([[0.5, 0.0], [0.0, 0.5]])
    K = activescalar.kernel_eval(spec, x)
    assert K.shape == (2, 2)
    spec3 = activescalar.KernelSpec("ribbon3x3")
    x3 = np.array([[0.5, 0.2, 0.1]])
    K3 = activescalar.kernel_eval(spec3, x3)
    assert K3.shape == (1, 3, 3)
    # only the (1,2) and (3,2) entries are populated
    mask = np.zeros((3, 3), dtype=bool)
    mask[0, 1] = mask[2, 1] = True
    assert np.all(K3[0][~mask] == 0.0)
    with pytest.raises(ValueError):
        activescalar.KernelSpec("nope")


def test_uniform_markers():
    Y = activescalar.uniform_markers(8)
    assert len(Y) == 8
    assert np.max(np.abs(Y + Y[::-1])) == 0.0
    assert np.all(np.diff(Y) > 0.0)
    for bad in (7, 0):
        with pytest.raises(ValueError):
            activescalar.uniform_markers(bad)


def test_slit_rhs_matches_dense_sum():
    M = activescalar.build_mollified(5e-3)
    for scale in (1.0, 0.2, 1e-4):
        Y = activescalar.uniform_markers(50) * scale
        dense = (2.0 / len(Y)) * np.sum(M(Y[:, None] - Y[None, :]), axis=1)
        fast = activescalar.slit_rhs(Y, M)
        assert np.max(np.abs(fast - dense)) < 1e-14


def test_slit_rhs_is_odd_and_contracting():
    M = activescalar.build_mollified(5e-3)
    Y = activescalar.uniform_markers(40)
    r = activescalar.slit_rhs(Y, M)
    assert np.max(np.abs(r + r[::-1])) < 1e-14
    # right half moves left, left half moves right
    assert np.all(r[Y > 0.05] < 0.0)
    assert np.all(r[Y < -0.05] > 0.0)


def test_short_slit_run_invariants():
    hist = activescalar.solve_slit(60, 1e-2, 2e-3, 0.5)
    assert hist.max_odd < 1e-12
    assert hist.max_slope <= 1.0 + 1e-10
    assert hist.min_slope >= 0.0
    assert hist.bound_excess <= 0.05
    # markers have contracted
    last = hist.states[-1]
    assert np.max(np.abs(last.Y)) < 1.0
    d = hist.to_dict()
    assert "collapse_bound_excess" in d


def test_ribbon_rate_is_twice_slit():
    # at t = 0 the two systems share marker positions, so the ribbon rhs is
    # exactly twice the slit rhs
    dt = 1e-6
    h1 = activescalar.solve_slit(40, 1e-2, dt, dt, sample_every=1)
    h2 = activescalar.solve_ribbon(40, 1e-2, dt, dt, sample_every=1)
    y1 = h1.states[-1].Y - h1.states[0].Y
    y2 = h2.states[-1].Y - h2.states[0].Y
    # displacement ratio approaches 2 as t -> 0 (equal up to O(t^2))
    assert np.max(np.abs(y2 - 2.0 * y1)) < 1e-5 * np.max(np.abs(y1))


def test_ribbon_collapses_by_one():
    hist = activescalar.solve_ribbon(80, 5e-3, 2e-3, 1.02)
    assert np.max(np.abs(hist.states[-1].Y)) < 1e-2
    assert hist.bound_excess <= 0.05


def test_slit_velocity_symmetry():
    hist = activescalar.solve_slit(60, 1e-2, 2e-3, 0.3)
    st = hist.states[-1]
    x = np.array([[0.4, 0.1], [1.2, -0.3], [0.0, 0.6]])
    v = activescalar.slit_velocity(st, x)
    refl = x.copy()
    refl[:, 0] *= -1.0
    vr = activescalar.slit_velocity(st, refl)
    # the marker set is odd-symmetric, so u1 is odd and u2 even under x1 -> -x1
    assert np.allclose(vr[:, 0], -v[:, 0], atol=1e-12)
    assert np.allclose(vr[:, 1], v[:, 1], atol=1e-12)


def test_ribbon_velocity_structure():
    rng = np.random.default_rng(4)
    mk = activescalar.uniform_markers(64)
    st = activescalar.RibbonState(mk, 0.5 * mk, 0.2, 0.05)
    pts = np.stack([np.zeros(20), rng.uniform(-0.9, 0.9, 20), st.Y[10:30]], axis=-1)
    v = activescalar.ribbon_velocity(st, pts, m_alpha2=64)
    assert np.max(np.abs(v[:, 1])) < 1e-12  # second component structurally 0
    assert np.max(np.abs(v[:, 0])) < 1e-12  # no cross-flow on the sheet itself


def test_active_sobolev_subcritical_vs_critical():
    hist = activescalar.solve_slit(60, 1e-2, 2e-3, 0.3)
    st = hist.states[-1]
    coarse = activescalar.active_sobolev_check(st, 1.5, region_half=1.5, h=0.04)
    fine = activescalar.active_sobolev_check(st, 1.5, region_half=1.5, h=0.02)
    assert abs(fine - coarse) / coarse < 0.25  # p < 2 stabilises
    c2 = activescalar.active_sobolev_check(st, 2.0, region_half=1.5, h=0.04)
    f2 = activescalar.active_sobolev_check(st, 2.0, region_half=1.5, h=0.02)
    assert f2 > c2  # p = 2 keeps growing


def test_history_csv():
    hist = activescalar.solve_slit(20, 1e-2, 5e-3, 0.1)
    csv = activescalar.history_csv(hist)
    lines = csv.splitlines()
    assert lines[0] == "t,alpha,Y"
    assert len(lines) == 1 + 20 * len(hist.states)


def test_solver_input_validation():
    with pytest.raises(ValueError):
        activescalar.solve_slit(21, 1e-2, 1e-3, 0.5)
    with pytest.raises(ValueError):
        activescalar.build_mollified(0.0)
