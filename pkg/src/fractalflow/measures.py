"""Measure-valued transport checks: weak-advection residuals against smooth
test functions, time reversal, and box-counting dimension estimates.

Measures are finite particle sums.  The scalar weak identity has four
terms; the vector (3D) identity adds the stretching contraction and a
distributional-divergence pairing that reduces, for the ribbon geometry, to
a one-dimensional integral over the two long edges.
"""

import json
import numpy as np

from . import profiles


class ParticleMeasure:
    """Finite atomic measure: points with scalar or vector weights."""

    def __init__(self, points, weights, divergence_boundary=None):
        self.points = np.atleast_2d(np.asarray(points, dtype=float))
        self.weights = np.asarray(weights, dtype=float)
        if len(self.weights) != len(self.points):
            raise ValueError("points/weights length mismatch")
        self.divergence_boundary = divergence_boundary

    @property
    def vector_valued(self):
        return self.weights.ndim == 2

    def total_mass(self):
        return float(np.sum(self.weights, axis=0)) if not self.vector_valued \
            else np.sum(self.weights, axis=0)

    def to_csv(self, t=0.0):
        dim = self.points.shape[1]
        if self.vector_valued:
            head = "t," + ",".join("xyz"[:dim]) + ",wx,wy,wz"
        else:
            head = "t," + ",".join("xyz"[:dim]) + ",w"
        lines = [head]
        for p, w in zip(self.points, self.weights):
            ws = ",".join("%r" % c for c in np.atleast_1d(w))
            lines.append("%r," % t + ",".join("%r" % c for c in p) + "," + ws)
        return "\n".join(lines) + "\n"


def pushforward(cloud, mu0_weights):
    """Transport a measure along the cloud: same weights at the advected
    points.  Vector weights are rescaled by the stretch data when present
    (Lagrangian stretching); the ribbon's stretch is the constant (0,1,0)."""
    w = np.asarray(mu0_weights, dtype=float)
    if len(w) != cloud.n:
        raise ValueError("weight count does not match cloud")
    if w.ndim == 2 and cloud.stretch is not None:
        mass = np.linalg.norm(w, axis=1)
        w = mass[:, None] * cloud.stretch
    return ParticleMeasure(cloud.positions, w)


class TestFunction:
    """phi(t, x) = (a + b t) * bump((x-c)/s) * ((x-c)/s)^power.

    Compactly supported in the box c + s(-1,1)^d, closed-form gradient, at
    most cubic polynomial factor.  Vector-valued variants attach a constant
    component pattern to the same scalar profile.
    """

    def __init__(self, center, scale, power=None, time_coeffs=(1.0, 0.0),
                 pattern=None):
        self.center = np.asarray(center, dtype=float)
        self.scale = float(scale)
        self.power = (
            np.zeros(len(self.center), dtype=int)
            if power is None
            else np.asarray(power, dtype=int)
        )
        if int(np.sum(self.power)) > 3:
            raise ValueError("polynomial degree capped at 3")
        self.a, self.b = float(time_coeffs[0]), float(time_coeffs[1])
        self.pattern = (
            None if pattern is None else np.asarray(pattern, dtype=float)
        )

    def _space(self, x):
        x = np.atleast_2d(np.asarray(x, dtype=float))
        z = (x - self.center) / self.scale
        bumpv, bumpg = profiles.TensorBump.value_grad(z)
        mono = np.prod(z ** self.power, axis=-1)
        monog = np.zeros_like(z)
        for d in range(z.shape[-1]):
            p = self.power[d]
            if p == 0:
                continue
            others = np.prod(
                np.delete(z, d, axis=-1) ** np.delete(self.power, d), axis=-1
            )
            monog[..., d] = p * z[..., d] ** (p - 1) * others
        val = bumpv * mono
        grad = (bumpg * mono[..., None] + bumpv[..., None] * monog) / self.scale
        return val, grad

    def value(self, t, x):
        v, _ = self._space(x)
        return (self.a + self.b * t) * v

    def grad(self, t, x):
        _, g = self._space(x)
        return (self.a + self.b * t) * g

    def dt(self, t, x):
        v, _ = self._space(x)
        return self.b * v


class WeakResidualReport:
    def __init__(self, terms, meta):
        self.terms = dict(terms)
        self.residual = float(sum(self.terms.values()))
        self.meta = dict(meta)

    def to_dict(self):
        return {"residual": self.residual, "terms": self.terms, "meta": self.meta}


def _time_weights(ts):
    """Trapezoid weights for a (possibly nonuniform) increasing time grid."""
    ts = np.asarray(ts, dtype=float)
    w = np.zeros_like(ts)
    w[:-1] += 0.5 * np.diff(ts)
    w[1:] += 0.5 * np.diff(ts)
    return w


def weak_residual_2d(field, measures, phi, T):
    """Four-term scalar weak-advection residual.

    measures: list of (t, ParticleMeasure) covering [0, T].  Space integrals
    are exact particle sums; the time integral is the trapezoid rule on the
    sample grid.
    """
    ts = np.array([t for t, _ in measures])
    if abs(ts[0]) > 1e-12 or abs(ts[-1] - T) > 1e-9:
        raise ValueError("measure samples must cover [0, T]")
    tw = _time_weights(ts)
    t_dt = 0.0
    t_adv = 0.0
    for w, (t, mu) in zip(tw, measures):
        t_dt += w * float(np.sum(mu.weights * phi.dt(t, mu.points)))
        u = field.eval(t, mu.points)
        adv = np.sum(u * phi.grad(t, mu.points), axis=-1)
        t_adv += w * float(np.sum(mu.weights * adv))
    mu_T = measures[-1][1]
    mu_0 = measures[0][1]
    terms = {
        "time_derivative": t_dt,
        "terminal": -float(np.sum(mu_T.weights * phi.value(T, mu_T.points))),
        "initial": float(np.sum(mu_0.weights * phi.value(0.0, mu_0.points))),
        "advective": t_adv,
    }
    return WeakResidualReport(
        terms, {"samples": len(ts), "particles": mu_0.points.shape[0]}
    )


def weak_residual_3d(field, measures, phi, T):
    """Six-term vector weak-advection residual with stretching and the
    boundary form of the divergence pairing.

    Test field: phi_a = pattern_a * scalar(t, x).  The divergence pairing
    integrates (phi . u) over the two alpha2-boundary curves carried by each
    measure sample as divergence_boundary = (top, bottom), both sampled at
    the same uniform alpha3 markers.
    """
    if phi.pattern is None:
        raise ValueError("vector residual needs a component pattern")
    ts = np.array([t for t, _ in measures])
    if abs(ts[0]) > 1e-12 or abs(ts[-1] - T) > 1e-9:
        raise ValueError("measure samples must cover [0, T]")
    tw = _time_weights(ts)
    p = phi.pattern
    t_dt = 0.0
    t_adv = 0.0
    t_stretch = 0.0
    t_div = 0.0
    for w, (t, mu) in zip(tw, measures):
        if not mu.vector_valued:
            raise ValueError("3D residual needs vector weights")
        x = mu.points
        om = mu.weights
        u = field.eval(t, x)
        sval = phi.value(t, x)
        sgrad = phi.grad(t, x)
        # d_t phi . d omega
        t_dt += w * float(np.sum((phi.dt(t, x)[:, None] * p) * om))
        # (u . grad) phi . d omega : f_b = (u . grad s) p_b
        udg = np.sum(u * sgrad, axis=-1)
        t_adv += w * float(np.sum((udg[:, None] * p) * om))
        # -((grad phi)^T u) . d omega : f_b = sum_a u_a p_a d_b s
        pu = u @ p
        t_stretch -= w * float(np.sum((pu[:, None] * sgrad) * om))
        if mu.divergence_boundary is None:
            raise ValueError("missing divergence boundary data")
        top, bot = mu.divergence_boundary
        n3 = len(top)
        da3 = 2.0 / n3
        psi_top = np.sum(field.eval(t, top) * p, axis=-1) * phi.value(t, top)
        psi_bot = np.sum(field.eval(t, bot) * p, axis=-1) * phi.value(t, bot)
        t_div += w * da3 * float(np.sum(psi_top - psi_bot))
    mu_T = measures[-1][1]
    mu_0 = measures[0][1]
    terms = {
        "time_derivative": t_dt,
        "terminal": -float(
            np.sum((phi.value(T, mu_T.points)[:, None] * p) * mu_T.weights)
        ),
        "initial": float(
            np.sum((phi.value(0.0, mu_0.points)[:, None] * p) * mu_0.weights)
        ),
        "advective": t_adv,
        "stretching": t_stretch,
        "divergence_pairing": t_div,
    }
    return WeakResidualReport(
        terms, {"samples": len(ts), "particles": mu_0.points.shape[0]}
    )


def weak_residual_2d_multi(field, measures, phis, T):
    """Scalar residuals for many test functions with one field evaluation
    per time sample."""
    ts = np.array([t for t, _ in measures])
    tw = _time_weights(ts)
    us = [field.eval(t, mu.points) for t, mu in measures]
    reports = []
    for phi in phis:
        t_dt = 0.0
        t_adv = 0.0
        for w, (t, mu), u in zip(tw, measures, us):
            t_dt += w * float(np.sum(mu.weights * phi.dt(t, mu.points)))
            adv = np.sum(u * phi.grad(t, mu.points), axis=-1)
            t_adv += w * float(np.sum(mu.weights * adv))
        mu_T = measures[-1][1]
        mu_0 = measures[0][1]
        terms = {
            "time_derivative": t_dt,
            "terminal": -float(
                np.sum(mu_T.weights * phi.value(T, mu_T.points))
            ),
            "initial": float(np.sum(mu_0.weights * phi.value(0.0, mu_0.points))),
            "advective": t_adv,
        }
        reports.append(
            WeakResidualReport(
                terms, {"samples": len(ts), "particles": mu_0.points.shape[0]}
            )
        )
    return reports


def weak_residual_3d_multi(field, measures, phis, T):
    """Vector residuals for many test functions, sharing field evaluations
    at the particle points and on both boundary curves."""
    ts = np.array([t for t, _ in measures])
    tw = _time_weights(ts)
    us = []
    us_top = []
    us_bot = []
    for t, mu in measures:
        us.append(field.eval(t, mu.points))
        top, bot = mu.divergence_boundary
        us_top.append(field.eval(t, top))
        us_bot.append(field.eval(t, bot))
    reports = []
    for phi in phis:
        p = phi.pattern
        t_dt = t_adv = t_stretch = t_div = 0.0
        for w, (t, mu), u, ut, ub in zip(tw, measures, us, us_top, us_bot):
            x = mu.points
            om = mu.weights
            sgrad = phi.grad(t, x)
            t_dt += w * float(np.sum((phi.dt(t, x)[:, None] * p) * om))
            udg = np.sum(u * sgrad, axis=-1)
            t_adv += w * float(np.sum((udg[:, None] * p) * om))
            pu = u @ p
            t_stretch -= w * float(np.sum((pu[:, None] * sgrad) * om))
            top, bot = mu.divergence_boundary
            da3 = 2.0 / len(top)
            psi_top = (ut @ p) * phi.value(t, top)
            psi_bot = (ub @ p) * phi.value(t, bot)
            t_div += w * da3 * float(np.sum(psi_top - psi_bot))
        mu_T = measures[-1][1]
        mu_0 = measures[0][1]
        terms = {
            "time_derivative": t_dt,
            "terminal": -float(
                np.sum((phi.value(T, mu_T.points)[:, None] * p) * mu_T.weights)
            ),
            "initial": float(
                np.sum((phi.value(0.0, mu_0.points)[:, None] * p) * mu_0.weights)
            ),
            "advective": t_adv,
            "stretching": t_stretch,
            "divergence_pairing": t_div,
        }
        reports.append(
            WeakResidualReport(
                terms, {"samples": len(ts), "particles": mu_0.points.shape[0]}
            )
        )
    return reports


def time_reverse(measures, field, T):
    """Reversed measure path and the negated time-reflected field.

    Scalar weights pass through; vector weights flip sign, as does the field.
    Applying the operation twice returns the originals bitwise.
    """
    rev = []
    for t, mu in reversed(measures):
        w = -mu.weights if mu.vector_valued else mu.weights
        rev.append(
            (T - t, ParticleMeasure(mu.points, w, mu.divergence_boundary))
        )
    return rev, field.negated_reflection(T)


class BoxCountReport:
    def __init__(self, scales, counts, slope, fit_residual, degenerate=False):
        self.scales = list(map(float, scales))
        self.counts = list(map(int, counts))
        self.slope = float(slope)
        self.fit_residual = float(fit_residual)
        self.degenerate = bool(degenerate)

    def to_dict(self):
        return {
            "scales": self.scales,
            "counts": self.counts,
            "slope": self.slope,
            "fit_residual": self.fit_residual,
            "degenerate": self.degenerate,
        }

    def to_json(self):
        return json.dumps(self.to_dict(), indent=1)


def box_dimension(points, scales=None):
    """Least-squares box-counting slope over shifted grids.

    Counts occupied boxes at each scale, minimized over 4 shifted grids to
    damp alignment artifacts, then fits log N against log(1/s).
    """
    points = np.atleast_2d(np.asarray(points, dtype=float))
    if points.size == 0:
        raise ValueError("points must be non-empty")
    if scales is None:
        scales = 2.0 ** -np.arange(2, 11)
    scales = np.asarray(scales, dtype=float)
    if len(scales) < 2:
        raise ValueError("need at least 2 scales")
    counts = []
    for s in scales:
        best = None
        for shift in (0.0, 0.25, 0.5, 0.75):
            idx = np.floor(points / s + shift).astype(np.int64)
            n = len(np.unique(idx, axis=0))
            best = n if best is None else min(best, n)
        counts.append(best)
    counts = np.array(counts)
    if np.all(counts == counts[0]):
        return BoxCountReport(scales, counts, 0.0, 0.0, degenerate=True)
    lx = np.log(1.0 / scales)
    ly = np.log(counts.astype(float))
    coef = np.polyfit(lx, ly, 1)
    resid = float(np.sqrt(np.mean((np.polyval(coef, lx) - ly) ** 2)))
    return BoxCountReport(scales, counts, coef[0], resid)


def attractor_point_sample(alpha, depth=10, n=None, seed=0):
    """Random-word point sample of the strongly separated two-map attractor.

    Each sample composes depth random letter maps, applied innermost-first
    to the origin; the result lies within alpha^depth of the attractor and
    the default n covers every depth-10 cylinder many times over.
    """
    if n is None:
        n = 1 << 17
    rng = np.random.default_rng(seed)
    from .geometry import derive_constants

    derive_constants(alpha)  # validates the range
    pts = np.zeros((n, 2))
    for _ in range(depth):
        sign = np.where(rng.random(n) < 0.5, 1.0, -1.0)
        # F_i(x) = (+-1, 0) + alpha R x with R the quarter turn
        pts = np.stack([sign - alpha * pts[:, 1], alpha * pts[:, 0]], axis=-1)
    return pts


def attractor_scales(alpha, kmin=1, kmax=8):
    """Counting scales matched to the attractor's contraction ratio; at
    scale 2 alpha^k the occupied boxes track the 2^k cylinders, so the
    log-log slope recovers the similarity dimension cleanly."""
    return 2.0 * alpha ** np.arange(kmin, kmax + 1)
