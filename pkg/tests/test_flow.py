"""Tests for the particle integrator and the trajectory-level verifications."""

import numpy as np
import pytest

from fractalflow import fields, flow, geometry


def linear_handle(a):
    """dX/dt = a (constant drift) as a FieldHandle."""
    a = np.asarray(a, dtype=float)
    return fields.FieldHandle("const", lambda t, x: np.broadcast_to(a, np.atleast_2d(x).shape), {})


def test_constant_drift_is_exact():
    h = linear_handle((0.5, -0.25))
    cloud = flow.ParticleCloud(np.array([[0.0, 0.0], [1.0, 2.0]]))
    out = flow.integrate(h, cloud, 0.0, 2.0, flow.IntegratorConfig(dt=0.1))
    assert np.allclose(out.positions, cloud.positions + np.array([1.0, -0.5]), atol=1e-13)


def test_rk4_fourth_order_on_rotation():
    # dX/dt = R X has exact solution exp(tR) X0; error should drop ~16x per halving
    def f(t, x):
        x = np.atleast_2d(x)
        return np.stack([-x[:, 1], x[:, 0]], axis=-1)

    h = fields.FieldHandle("rot", f, {})
    x0 = np.array([[1.0, 0.0]])
    exact = np.array([[np.cos(1.0), np.sin(1.0)]])
    errs = []
    for dt in (0.1, 0.05, 0.025):
        out = flow.integrate(h, flow.ParticleCloud(x0), 0.0, 1.0, flow.IntegratorConfig(dt=dt))
        errs.append(np.max(np.abs(out.positions - exact)))
    assert errs[1] < errs[0] / 12.0
    assert errs[2] < errs[1] / 12.0


def test_adaptive_meets_tolerance_on_rotation():
    def f(t, x):
        x = np.atleast_2d(x)
        return np.stack([-x[:, 1], x[:, 0]], axis=-1)

    h = fields.FieldHandle("rot", f, {})
    x0 = np.array([[1.0, 0.0]])
    exact = np.array([[np.cos(3.0), np.sin(3.0)]])
    out = flow.integrate(
        h,
        flow.ParticleCloud(x0),
        0.0,
        3.0,
        flow.IntegratorConfig(method="rk4_adaptive", dt=0.25, tol=1e-10),
    )
    assert np.max(np.abs(out.positions - exact)) < 1e-8


def test_integrator_config_validation():
    with pytest.raises(ValueError):
        flow.IntegratorConfig(method="euler")
    with pytest.raises(ValueError):
        flow.IntegratorConfig(dt=0.0)


def test_record_every_builds_history():
    h = linear_handle((1.0, 0.0))
    out = flow.integrate(
        h,
        flow.ParticleCloud(np.zeros((1, 2))),
        0.0,
        1.0,
        flow.IntegratorConfig(dt=0.1),
        record_every=2,
    )
    assert hasattr(out, "history")
    ts = [t for t, _ in out.history]
    assert ts[0] == 0.0 and abs(ts[-1] - 1.0) < 1e-12
    csv = flow.trajectory_csv(out.history)
    assert csv.splitlines()[0].startswith("t,")


def test_conjugation_identity_random_similarities():
    rng = np.random.default_rng(3)
    field = fields.fundamental_u_handle(0.6)
    cfg = flow.IntegratorConfig(dt=2e-3)
    worst = 0.0
    for _ in range(6):
        G = geometry.AffineSimilarity(
            rng.uniform(-1, 1, 2), int(rng.integers(0, 4)), float(rng.uniform(0.4, 1.5))
        )
        cloud = flow.ParticleCloud(rng.uniform(-1.5, 1.5, (20, 2)))
        worst = max(worst, flow.rescaled_trajectory_check(field, G, cloud, cfg, 0.0, 1.0))
    assert worst < 1e-8


def test_contraction_words_depth_two():
    rep = flow.verify_contraction(0.6, depth=2, cfg=flow.IntegratorConfig(dt=1e-3))
    assert len(rep) == 1 + 2 + 4
    worst = max(r.endpoint_error for r in rep)
    assert worst < 1e-6
    for r in rep:
        d = r.to_dict()
        assert set(d) >= {"word", "endpoint_error"}


def test_enclosure_first_windows():
    rep = flow.enclosure_check(
        0.6, kmax=1, cfg=flow.IntegratorConfig(dt=2e-3), sample_depth=6
    )
    assert rep.ok
    assert rep.max_excess <= rep.slack
    # per-window diameters contract by about gamma
    dia = rep.stage_diameters
    g = geometry.derive_constants(0.6).gamma
    assert dia[1] < dia[0]
    assert abs(dia[1] / dia[0] - g) < 0.05


def test_full_dim_scale_check_smoke():
    rep = flow.full_dim_scale_check(
        kmax=2, cfg=flow.IntegratorConfig(dt=2e-3), block_depth=2, series_depth=16
    )
    assert rep.tip_error < 1e-3
    assert rep.block_error < 1e-3
    assert rep.line_error < 1e-3
    assert rep.origin_error < 1e-6
    js = flow.report_json(rep)
    assert "tip_error" in js


def test_cloud_replaced_preserves_metadata():
    cloud = flow.ParticleCloud(
        np.zeros((3, 2)), labels=np.arange(3.0), weights=np.ones(3)
    )
    new = cloud.replaced(np.ones((3, 2)))
    assert np.array_equal(new.labels, cloud.labels)
    assert np.array_equal(new.weights, cloud.weights)
    assert np.all(new.positions == 1.0)
