"""Particle advection and the trajectory-level verification routines.

All fields are evaluated in batch over the particle cloud, so a single rk4
step costs four field evaluations regardless of particle count.
"""

import json
import numpy as np

from . import fields
from .fields import collapse_schedule, default_xi  # re-exported
from .geometry import (
    Rect,
    all_words,
    attractor_approx,
    derive_constants,
    word_map,
)


class ParticleCloud:
    """Positions plus immutable Lagrangian labels, weights and optional
    stretch vectors."""

    def __init__(self, positions, labels=None, weights=None, stretch=None):
        self.positions = np.array(positions, dtype=float)
        if self.positions.ndim == 1:
            self.positions = self.positions[None, :]
        n = self.positions.shape[0]
        self.labels = (
            np.array(labels, dtype=float)
            if labels is not None
            else self.positions.copy()
        )
        self.weights = (
            np.array(weights, dtype=float) if weights is not None else np.ones(n)
        )
        self.stretch = np.array(stretch, dtype=float) if stretch is not None else None
        if len(self.labels) != n or len(self.weights) != n:
            raise ValueError("labels/weights length mismatch")

    @property
    def n(self):
        return self.positions.shape[0]

    def replaced(self, positions):
        return ParticleCloud(
            positions,
            self.labels,
            self.weights,
            None if self.stretch is None else self.stretch.copy(),
        )


class IntegratorConfig:
    def __init__(self, method="rk4_fixed", dt=1e-3, tol=1e-9, max_steps=10 ** 8):
        if dt <= 0.0 or tol <= 0.0:
            raise ValueError("dt and tol must be positive")
        if method not in ("rk4_fixed", "rk4_adaptive"):
            raise ValueError("unknown method %r" % method)
        self.method = method
        self.dt = float(dt)
        self.tol = float(tol)
        self.max_steps = int(max_steps)


def _rk4_step(f, t, x, dt):
    k1 = f(t, x)
    k2 = f(t + 0.5 * dt, x + 0.5 * dt * k1)
    k3 = f(t + 0.5 * dt, x + 0.5 * dt * k2)
    k4 = f(t + dt, x + dt * k3)
    return x + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)


def integrate(field, cloud, t0, t1, cfg, monitor=None, record_every=0):
    """Advance the cloud from t0 to t1; labels and weights are untouched.

    monitor(t, positions) runs after every accepted step.  With
    record_every = m > 0 a history [(t, positions)] is attached to the
    returned cloud as .history, sampled every m-th step plus the endpoints.
    """
    if t1 < t0:
        raise ValueError("t1 must be >= t0")
    f = field.eval
    x = cloud.positions.copy()
    t = t0
    history = [(t0, x.copy())] if record_every else None
    steps = 0
    if cfg.method == "rk4_fixed":
        nsteps = max(int(np.ceil((t1 - t0) / cfg.dt - 1e-12)), 1) if t1 > t0 else 0
        dt = (t1 - t0) / nsteps if nsteps else 0.0
        for i in range(nsteps):
            x = _rk4_step(f, t, x, dt)
            t = t0 + (i + 1) * dt
            steps += 1
            if steps > cfg.max_steps:
                raise RuntimeError("step-count overflow at t=%g" % t)
            if monitor is not None:
                monitor(t, x)
            if record_every and (steps % record_every == 0 or i == nsteps - 1):
                history.append((t, x.copy()))
    else:
        # step doubling: compare one dt step with two dt/2 steps
        dt = cfg.dt
        while t < t1 - 1e-15:
            dt = min(dt, t1 - t)
            big = _rk4_step(f, t, x, dt)
            half = _rk4_step(f, t + 0.5 * dt, _rk4_step(f, t, x, 0.5 * dt), 0.5 * dt)
            err = float(np.max(np.abs(big - half))) if x.size else 0.0
            if err <= cfg.tol or dt < 1e-12:
                x = half
                t += dt
                steps += 1
                if steps > cfg.max_steps:
                    raise RuntimeError("step-count overflow at t=%g" % t)
                if monitor is not None:
                    monitor(t, x)
                if record_every and steps % record_every == 0:
                    history.append((t, x.copy()))
                if err < cfg.tol / 32.0:
                    # cfg.dt caps the step: growing beyond it can jump clean
                    # over narrow bands where the field varies
                    dt = min(2.0 * dt, cfg.dt)
            else:
                dt *= 0.5
    out = cloud.replaced(x)
    if record_every:
        if history[-1][0] != t:
            history.append((t, x.copy()))
        out.history = history
    return out


def trajectory_csv(history, labels=None):
    """CSV dump of an integration history: t, id, x, y[, z]."""
    dim = history[0][1].shape[1]
    head = "t,id,x,y" + (",z" if dim == 3 else "")
    lines = [head]
    for t, pos in history:
        for i, p in enumerate(pos):
            lines.append(
                "%r,%d," % (t, i) + ",".join("%r" % c for c in p)
            )
    return "\n".join(lines) + "\n"


def rescaled_trajectory_check(field, G, cloud, cfg, t0=0.0, t1=1.0):
    """Deviation between integrating the conjugated field from G(x) and
    applying G to the integration of the base field from x.

    The conjugated field is x -> L field(t, G^{-1} x) with L the linear part
    of G; for smooth fields the two sides agree up to integrator error.
    """
    L = G.matrix
    Ginv = G.inverse()

    def conj(t, x):
        return field.eval(t, Ginv(x)) @ L.T

    conj_handle = fields.FieldHandle("conjugated", conj, {})
    start = ParticleCloud(G(cloud.positions))
    lhs = integrate(conj_handle, start, t0, t1, cfg).positions
    rhs = G(integrate(field, cloud, t0, t1, cfg).positions)
    return float(np.max(np.linalg.norm(lhs - rhs, axis=-1)))


class ContractionReport:
    def __init__(self, word, expected, measured):
        self.word = word
        self.expected = np.asarray(expected, dtype=float)
        self.measured = np.asarray(measured, dtype=float)
        self.endpoint_error = float(
            np.max(np.linalg.norm(self.expected - self.measured, axis=-1))
        )

    def to_dict(self):
        return {
            "word": "".join(str(l) for l in self.word) or "-",
            "endpoint_error": self.endpoint_error,
            "expected": self.expected.tolist(),
            "measured": self.measured.tolist(),
        }


def verify_contraction(alpha, depth, cfg, series_depth=24):
    """Integrate the endpoints of every segment F_w(I), |w| <= depth, under
    the series field over [0,1] and compare with the gamma-contracted
    segment endpoints."""
    p = derive_constants(alpha)
    words = []
    for k in range(depth + 1):
        words.extend(all_words(k))
    e1 = np.array([1.0, 0.0])
    starts = np.empty((2 * len(words), 2))
    for i, w in enumerate(words):
        m = word_map(w, 0.0, alpha)
        starts[2 * i] = m(-e1)
        starts[2 * i + 1] = m(e1)
    handle = fields.series_U_handle(alpha, series_depth)
    cloud = ParticleCloud(starts)
    ended = integrate(handle, cloud, 0.0, 1.0, cfg).positions
    reports = []
    for i, w in enumerate(words):
        expected = p.gamma * starts[2 * i : 2 * i + 2]
        reports.append(ContractionReport(w, expected, ended[2 * i : 2 * i + 2]))
    return reports


class EnclosureReport:
    def __init__(self, alpha, xi, kmax, max_excess, stage_diameters, slack):
        self.alpha = alpha
        self.xi = xi
        self.kmax = kmax
        self.max_excess = max_excess
        self.stage_diameters = stage_diameters
        self.slack = slack

    @property
    def ok(self):
        return self.max_excess <= self.slack

    def to_dict(self):
        return {
            "alpha": self.alpha,
            "xi": self.xi,
            "kmax": self.kmax,
            "pass": bool(self.ok),
            "max_excess": self.max_excess,
            "slack": self.slack,
            "stage_diameters": self.stage_diameters,
        }


def enclosure_check(alpha, xi=None, kmax=3, cfg=None, sample_depth=8, slack=1e-5):
    """Advect attractor samples under the collapse field and verify that on
    window k they stay inside the gamma^k-scaled support rectangle."""
    if kmax < 1:
        raise ValueError("kmax must be >= 1")
    p = derive_constants(alpha)
    if xi is None:
        xi = default_xi(p.gamma)
    if cfg is None:
        cfg = IntegratorConfig(dt=1e-3)
    approx = attractor_approx(p, sample_depth)
    pts = np.unique(np.concatenate([approx.a, approx.b]), axis=0)
    handle = fields.collapse_W_handle(alpha, xi)
    sched = collapse_schedule(p.gamma, xi, kmax + 1)
    r_eps = Rect.standard(p.eps)
    excess = [0.0]

    def monitor(t, x):
        k = fields.locate_window(xi, t)
        if k is None or k > kmax:
            return
        scale = p.gamma ** k
        over = np.maximum(
            np.abs(x) - scale * r_eps.half[None, :], 0.0
        )
        m = float(np.max(over))
        if m > excess[0]:
            excess[0] = m

    stage_diam = [float(np.max(np.abs(pts)))]
    cloud = ParticleCloud(pts)
    for k in range(kmax + 1):
        cloud = integrate(handle, cloud, sched[k], sched[k + 1], cfg, monitor=monitor)
        stage_diam.append(float(np.max(np.abs(cloud.positions))))
    return EnclosureReport(alpha, xi, kmax, excess[0], stage_diam, slack)


class FullDimReport:
    def __init__(self, tip_error, block_error, line_error, origin_error, mid_error):
        self.tip_error = tip_error
        self.block_error = block_error
        self.line_error = line_error
        self.origin_error = origin_error
        self.mid_error = mid_error

    def to_dict(self):
        return {
            "tip_error": self.tip_error,
            "block_endpoint_error": self.block_error,
            "line_set_error": self.line_error,
            "origin_error": self.origin_error,
            "mid_stage_error": self.mid_error,
        }


def full_dim_scale_check(kmax, cfg, block_depth=3, series_depth=24, n_line=25):
    """Integrate samples of the line-plus-blocks set under the combined field
    over [0,2] and verify the global 7/8 contraction.

    Block endpoints and the tip (24,0) contract pointwise; generic points on
    the base line land on the contracted line only as a set, so they are
    scored by distance to the segment [0,21] x {0}.
    """
    if kmax < 1:
        raise ValueError("kmax must be >= 1")
    line = np.stack(
        [np.linspace(0.0, 24.0, n_line), np.zeros(n_line)], axis=-1
    )
    blocks = []
    block_of = []
    for k in range(1, kmax + 1):
        a_k, _ = fields.block_params(k)
        approx = attractor_approx(derive_constants(a_k), block_depth)
        local = np.concatenate([approx.a, approx.b])
        g = fields.block_map(k)
        blocks.append(g(local))
        block_of.extend([k] * len(local))
    pts = np.concatenate([line] + blocks)
    handle = fields.combined_V_handle(kmax=max(kmax, 40), depth=series_depth)
    cloud = ParticleCloud(pts)
    mid = integrate(handle, cloud, 0.0, 1.0, cfg)
    # intermediate check: each block is contracted by 7/8 about its own frame
    mid_err = 0.0
    ofs = n_line
    for k in range(1, kmax + 1):
        g = fields.block_map(k)
        nb = len(blocks[k - 1])
        expected = g(0.875 * g.inverse()(pts[ofs : ofs + nb]))
        err = float(
            np.max(np.linalg.norm(mid.positions[ofs : ofs + nb] - expected, axis=-1))
        )
        mid_err = max(mid_err, err)
        ofs += nb
    ended = integrate(handle, mid, 1.0, 2.0, cfg).positions
    target = 0.875 * pts
    tip_error = float(np.linalg.norm(ended[n_line - 1] - np.array([21.0, 0.0])))
    origin_error = float(np.linalg.norm(ended[0]))
    block_error = float(np.max(np.linalg.norm(ended[n_line:] - target[n_line:], axis=-1)))
    # interior line points: distance to the contracted segment
    li = ended[1 : n_line - 1]
    dx = np.maximum(np.maximum(-li[:, 0], li[:, 0] - 21.0), 0.0)
    line_error = float(np.max(np.hypot(dx, li[:, 1])))
    return FullDimReport(tip_error, block_error, line_error, origin_error, mid_err)


def report_json(obj):
    if isinstance(obj, list):
        return json.dumps([r.to_dict() for r in obj], indent=1)
    return json.dumps(obj.to_dict(), indent=1)
