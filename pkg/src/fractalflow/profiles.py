"""Smooth building-block profiles: bumps, cutoffs and mollifier tables.

Everything here is closed-form or tabulated once by quadrature and then
evaluated through cubic splines, so that velocity fields built on top have
analytic derivatives and no convolutions in the hot path.
"""

import numpy as np
from scipy.integrate import quad
from scipy.interpolate import CubicSpline


def smoothstep(s):
    """Quintic smoothstep: 0 for s<=0, 1 for s>=1, C^2 across the joins."""
    s = np.clip(s, 0.0, 1.0)
    return s ** 3 * (10.0 - 15.0 * s + 6.0 * s * s)


def smoothstep_d(s):
    """Derivative of :func:`smoothstep` (zero outside [0,1])."""
    s = np.asarray(s, dtype=float)
    inside = (s > 0.0) & (s < 1.0)
    sc = np.clip(s, 0.0, 1.0)
    d = 30.0 * sc * sc * (1.0 - sc) ** 2
    return np.where(inside, d, 0.0)


def bump01(t):
    """exp(-1/(t(1-t))) on (0,1), zero elsewhere.  Flat to all orders at 0,1."""
    t = np.asarray(t, dtype=float)
    inside = (t > 0.0) & (t < 1.0)
    tc = np.where(inside, t, 0.5)
    with np.errstate(over="ignore"):
        v = np.exp(-1.0 / (tc * (1.0 - tc)))
    return np.where(inside, v, 0.0)


# peak of bump01, used in documented sup-norm constants
BUMP01_PEAK = float(np.exp(-4.0))


def bump_sym(u):
    """exp(-1/(1-u^2)) on (-1,1), zero elsewhere: the standard even bump."""
    u = np.asarray(u, dtype=float)
    inside = np.abs(u) < 1.0
    uc = np.where(inside, u, 0.0)
    with np.errstate(over="ignore"):
        v = np.exp(-1.0 / (1.0 - uc * uc))
    return np.where(inside, v, 0.0)


_bump_cache = None


def _bump_tables():
    """Spline of bump01 on [0,1] and its antiderivative, built once."""
    global _bump_cache
    if _bump_cache is None:
        t = np.linspace(0.0, 1.0, 4001)
        spline = CubicSpline(t, bump01(t))
        anti = spline.antiderivative()
        total = float(anti(1.0))
        _bump_cache = (spline, anti, total)
    return _bump_cache


def bump01_mass():
    """Total integral of bump01 over (0,1)."""
    return _bump_tables()[2]


class TimeProfile:
    """Nonnegative C^inf ramp on (0,1) with a prescribed total integral.

    eta(t) = mass * bump01(t) / int(bump01); eta_cum(t) = int_0^t eta.
    The sup norm is mass * exp(-4)/int(bump01), i.e. the documented constant
    C = exp(-4)/int(bump01) ~ 2.605 in ||eta||_inf <= C * mass.
    """

    def __init__(self, mass=1.0):
        self.mass = float(mass)
        spline, anti, total = _bump_tables()
        self._spline = spline
        self._anti = anti
        self._scale = self.mass / total

    def __call__(self, t):
        return self._scale * bump01(t)

    def cum(self, t):
        t = np.asarray(t, dtype=float)
        tc = np.clip(t, 0.0, 1.0)
        return self._scale * self._anti(tc)

    @property
    def sup(self):
        return self._scale * BUMP01_PEAK


# --- radial 2D mollifier and its smoothed-sign marginal ----------------------

_marginal_cache = None


def _marginal_tables():
    """Tables for the 1D marginal of the radial unit bump on the disc.

    rho(x) = c * exp(-1/(1-|x|^2)) on the unit ball, mass 1.  The marginal
    rho_bar(s) = int rho(s, y) dy is tabulated on [-1,1] by quadrature; its
    antiderivative gives the smoothed sign P(z) = 2 int_0^z rho_bar with
    P(+-1) = +-1 exactly after normalisation.
    """
    global _marginal_cache
    if _marginal_cache is None:
        z = np.linspace(0.0, 1.0, 1501)
        m = np.empty_like(z)
        for i, s in enumerate(z):
            w = np.sqrt(max(1.0 - s * s, 0.0))
            if w == 0.0:
                m[i] = 0.0
                continue
            m[i] = quad(
                lambda y, s2=s * s: np.exp(-1.0 / (1.0 - s2 - y * y))
                if s2 + y * y < 1.0
                else 0.0,
                -w,
                w,
                limit=200,
            )[0]
        zz = np.concatenate([-z[:0:-1], z])
        mm = np.concatenate([m[:0:-1], m])  # even extension
        spline = CubicSpline(zz, mm)
        anti = spline.antiderivative()
        half_mass = float(anti(1.0) - anti(0.0))
        # dense lookup tables on [0, 1]; spline evaluation is far too slow
        # inside the particle loops, and linear interpolation at this grid
        # spacing is accurate to ~1e-9
        zd = np.linspace(0.0, 1.0, 8001)
        marg = spline(zd) / (2.0 * half_mass)
        pval = np.clip((anti(zd) - anti(-zd)) / (2.0 * half_mass), 0.0, 1.0)
        pval[-1] = 1.0
        _marginal_cache = (spline, anti, half_mass, zd, marg, pval)
    return _marginal_cache


def mollifier_marginal(z):
    """Normalised 1D marginal rho_bar(z) of the radial disc bump (mass 1)."""
    _, _, _, zd, marg, _ = _marginal_tables()
    z = np.abs(np.asarray(z, dtype=float))
    return np.interp(z, zd, marg, right=0.0)


def mollified_sign(z):
    """P(z) = (rho_bar * sign)(z): odd, smooth, exactly +-1 for |z| >= 1."""
    _, _, _, zd, _, pval = _marginal_tables()
    z = np.asarray(z, dtype=float)
    return np.sign(z) * np.interp(np.abs(z), zd, pval)


def mollified_sign_d(z):
    """Derivative of :func:`mollified_sign` (= 2 rho_bar)."""
    return 2.0 * mollifier_marginal(z)


def radial_bump_2d(x):
    """The normalised radial 2D mollifier itself (for quadrature oracles)."""
    x = np.atleast_2d(np.asarray(x, dtype=float))
    r2 = np.sum(x * x, axis=-1)
    inside = r2 < 1.0
    with np.errstate(over="ignore", divide="ignore"):
        v = np.exp(-1.0 / np.where(inside, 1.0 - r2, 1.0))
    v = np.where(inside, v, 0.0)
    return v / _radial_norm()


_radial_norm_cache = None


def _radial_norm():
    global _radial_norm_cache
    if _radial_norm_cache is None:
        _radial_norm_cache = 2.0 * np.pi * quad(
            lambda r: r * np.exp(-1.0 / (1.0 - r * r)), 0.0, 1.0, limit=200
        )[0]
    return _radial_norm_cache


# --- spatial cutoffs ---------------------------------------------------------


class RectCutoff:
    """Tensor-product C^2 cutoff: 1 on [-a,a]x[-b,b], 0 outside the margin-eps
    inflation.  Closed-form gradient."""

    def __init__(self, a, b, margin):
        self.a = float(a)
        self.b = float(b)
        self.margin = float(margin)

    def _axis(self, v, edge):
        return 1.0 - smoothstep((np.abs(v) - edge) / self.margin)

    def _axis_d(self, v, edge):
        return (
            -np.sign(v)
            * smoothstep_d((np.abs(v) - edge) / self.margin)
            / self.margin
        )

    def value(self, x):
        x = np.atleast_2d(x)
        return self._axis(x[..., 0], self.a) * self._axis(x[..., 1], self.b)

    def value_grad(self, x):
        x = np.atleast_2d(x)
        f1 = self._axis(x[..., 0], self.a)
        f2 = self._axis(x[..., 1], self.b)
        g1 = self._axis_d(x[..., 0], self.a) * f2
        g2 = f1 * self._axis_d(x[..., 1], self.b)
        return f1 * f2, g1, g2


class RadialCutoff:
    """C^2 radial cutoff: 1 for r <= r0, 0 for r >= r1."""

    def __init__(self, r0, r1):
        self.r0 = float(r0)
        self.r1 = float(r1)

    def value(self, r):
        return 1.0 - smoothstep((np.asarray(r, dtype=float) - self.r0) / (self.r1 - self.r0))

    def d(self, r):
        return -smoothstep_d((np.asarray(r, dtype=float) - self.r0) / (self.r1 - self.r0)) / (
            self.r1 - self.r0
        )


class AxisRamp:
    """C^2 ramp in x1 only: 0 for x1 <= 0, 1 for x1 >= width."""

    def __init__(self, width=0.75):
        self.width = float(width)

    def value(self, x1):
        return smoothstep(np.asarray(x1, dtype=float) / self.width)

    def d(self, x1):
        return smoothstep_d(np.asarray(x1, dtype=float) / self.width) / self.width


class ConeProfile:
    """Smooth profile supported in the cone {x1 > |x2|} (plus the origin).

    Equals 1 where x1 > 10 |x2| and |x| <= r_plateau; falls to zero before the
    cone boundary (angular ratio a_hi < 1) and beyond r_out.  Derivatives decay
    like 1/|x| (angular factor) resp. 1/r_plateau (radial factor).
    """

    def __init__(self, a_lo=0.1, a_hi=0.9, r_plateau=26.0, r_out=52.0):
        self.a_lo = float(a_lo)
        self.a_hi = float(a_hi)
        self.rad = RadialCutoff(r_plateau, r_out)

    def _angular(self, ratio):
        return 1.0 - smoothstep((ratio - self.a_lo) / (self.a_hi - self.a_lo))

    def _angular_d(self, ratio):
        return -smoothstep_d((ratio - self.a_lo) / (self.a_hi - self.a_lo)) / (
            self.a_hi - self.a_lo
        )

    def value(self, x):
        x = np.atleast_2d(x)
        x1 = x[..., 0]
        x2 = x[..., 1]
        pos = x1 > 0.0
        x1s = np.where(pos, x1, 1.0)
        ratio = np.abs(x2) / x1s
        r = np.hypot(x1, x2)
        v = self._angular(ratio) * self.rad.value(r)
        return np.where(pos, v, 0.0)

    def value_grad(self, x):
        x = np.atleast_2d(x)
        x1 = x[..., 0]
        x2 = x[..., 1]
        pos = x1 > 0.0
        x1s = np.where(pos, x1, 1.0)
        ratio = np.abs(x2) / x1s
        r = np.hypot(x1, x2)
        rs = np.where(r > 0.0, r, 1.0)
        ang = self._angular(ratio)
        ang_d = self._angular_d(ratio)
        rad = self.rad.value(r)
        rad_d = self.rad.d(r)
        # d(ratio)/dx1 = -|x2|/x1^2, d(ratio)/dx2 = sign(x2)/x1
        g1 = ang_d * (-np.abs(x2) / (x1s * x1s)) * rad + ang * rad_d * x1 / rs
        g2 = ang_d * (np.sign(x2) / x1s) * rad + ang * rad_d * x2 / rs
        val = np.where(pos, ang * rad, 0.0)
        return val, np.where(pos, g1, 0.0), np.where(pos, g2, 0.0)


class TensorBump:
    """C^inf tensor-product bump: prod_i exp(1 - 1/(1-z_i^2)) on (-1,1)^d.

    Value 1 at the centre; closed-form gradient.  Used as the localising
    factor of test functions.
    """

    @staticmethod
    def value(z):
        z = np.atleast_2d(z)
        inside = np.all(np.abs(z) < 1.0, axis=-1)
        zc = np.where(np.abs(z) < 1.0, z, 0.0)
        one = 1.0 - zc * zc
        v = np.exp(np.sum(1.0 - 1.0 / one, axis=-1))
        return np.where(inside, v, 0.0)

    @staticmethod
    def value_grad(z):
        z = np.atleast_2d(z)
        inside = np.all(np.abs(z) < 1.0, axis=-1)
        zc = np.where(np.abs(z) < 1.0, z, 0.0)
        one = 1.0 - zc * zc
        v = np.exp(np.sum(1.0 - 1.0 / one, axis=-1))
        v = np.where(inside, v, 0.0)
        grad = v[..., None] * (-2.0 * zc / (one * one))
        return v, grad
