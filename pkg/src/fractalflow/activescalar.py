"""Self-interacting particle systems on a slit (2D) and a ribbon (3D).

Both systems reduce to a scalar transport problem for axis positions
Y(t, alpha): the slit kernel restricted to the axis is
M(z) = -sign(z) sqrt(|z|) (times a far cutoff), and the ribbon's kernel row
structure makes its rhs exactly twice the slit's.  The singular M is
mollified by a scale-eps bump before time stepping; limit claims are
convergence studies over (N, eps).
"""

import numpy as np
from scipy.integrate import quad
from scipy.interpolate import CubicSpline

from . import profiles
from .profiles import RadialCutoff


class KernelSpec:
    """Closed-form kernel family: 2D slit (gradient-perp of a stream
    function) or the 3x3 ribbon matrix."""

    def __init__(self, kind):
        if kind not in ("slit2d", "ribbon3x3"):
            raise ValueError("unknown kernel kind %r" % kind)
        self.kind = kind
        if kind == "slit2d":
            self.cutoff = RadialCutoff(2.0, 3.0)
        else:
            self.cutoff = RadialCutoff(3.0, 4.0)


def _slit_K(x, cutoff):
    """grad-perp of x1 x2 |x|^{-1/2} chi(|x|); value 0 at the origin."""
    x = np.atleast_2d(np.asarray(x, dtype=float))
    x1 = x[..., 0]
    x2 = x[..., 1]
    r = np.hypot(x1, x2)
    rs = np.where(r > 0.0, r, 1.0)
    chi = cutoff.value(r)
    chid = cutoff.d(r)
    rm = rs ** -0.5
    d1 = x2 * rm * chi - 0.5 * x1 * x1 * x2 * rs ** -2.5 * chi \
        + x1 * x1 * x2 * rs ** -1.5 * chid
    d2 = x1 * rm * chi - 0.5 * x1 * x2 * x2 * rs ** -2.5 * chi \
        + x1 * x2 * x2 * rs ** -1.5 * chid
    out = np.stack([-d2, d1], axis=-1)
    return np.where((r > 0.0)[..., None], out, 0.0)


def _ribbon_derivs(x, cutoff):
    """(d1 kappa, d3 kappa) for kappa = x1 x3 |(x1,x3)|^{-1/2} chi(|x|)."""
    x = np.atleast_2d(np.asarray(x, dtype=float))
    x1 = x[..., 0]
    x2 = x[..., 1]
    x3 = x[..., 2]
    rho = np.hypot(x1, x3)
    r = np.sqrt(x1 * x1 + x2 * x2 + x3 * x3)
    ok = rho > 0.0
    rhos = np.where(ok, rho, 1.0)
    rsafe = np.where(r > 0.0, r, 1.0)
    chi = cutoff.value(r)
    chid = cutoff.d(r)
    pm = rhos ** -0.5
    d1 = x3 * pm * chi - 0.5 * x1 * x1 * x3 * rhos ** -2.5 * chi \
        + x1 * x3 * pm * chid * x1 / rsafe
    d3 = x1 * pm * chi - 0.5 * x1 * x3 * x3 * rhos ** -2.5 * chi \
        + x1 * x3 * pm * chid * x3 / rsafe
    return np.where(ok, d1, 0.0), np.where(ok, d3, 0.0)


def kernel_eval(spec, x):
    """Vector (slit) or 3x3 matrix (ribbon) kernel value; 0 at the origin."""
    if spec.kind == "slit2d":
        return _slit_K(x, spec.cutoff)
    d1, d3 = _ribbon_derivs(x, spec.cutoff)
    shape = np.shape(d1)
    K = np.zeros(shape + (3, 3))
    K[..., 0, 1] = d3
    K[..., 2, 1] = -d1
    return K


def axis_kernel(z, cutoff=None):
    """The slit kernel restricted to the axis: M(z) = -sign(z) sqrt|z| chi."""
    z = np.asarray(z, dtype=float)
    if cutoff is None:
        cutoff = RadialCutoff(2.0, 3.0)
    return -np.sign(z) * np.sqrt(np.abs(z)) * cutoff.value(np.abs(z))


class MollifiedKernel:
    """Table of M_eps = rho_eps * M with fast interpolated evaluation.

    One quadrature table covers the whole kernel support: a dense band
    [0, 32 eps] around the square-root cusp plus a coarser band out to the
    cutoff tail.  The cusp is removed by a v^2 endpoint substitution before
    Gauss quadrature, so knot values are accurate to ~1e-10.  M_eps is odd
    by construction and non-increasing on [0, 2] (beyond 2 the radial
    cutoff brings it back to 0); both are asserted on the table.
    """

    def __init__(self, eps, table_n=1200, quad_n=48):
        if eps <= 0.0:
            raise ValueError("eps must be positive")
        self.eps = float(eps)
        self.cross = min(32.0 * self.eps, 1.0)
        zmax = 3.0 + 2.0 * self.eps
        nodes, weights = np.polynomial.legendre.leggauss(quad_n)
        z = np.concatenate(
            [
                np.linspace(0.0, self.cross, table_n, endpoint=False),
                np.linspace(self.cross, zmax, table_n + 1),
            ]
        )
        vals = np.empty(len(z))
        for i, zi in enumerate(z):
            vals[i] = self._convolve(zi, nodes, weights)
        vals[0] = 0.0
        vals[-1] = 0.0
        # damp residual quadrature jitter in the monotone range
        core = z <= 2.0
        vals[core] = np.minimum.accumulate(vals[core])
        self._z = z
        self._v = vals
        self._vneg = -vals
        zz = np.concatenate([-z[:0:-1], z])
        vv = np.concatenate([-vals[:0:-1], vals])
        self.table = CubicSpline(zz, vv)

    def _convolve(self, z, nodes, weights):
        # integral of rho(u) M(z - eps u) over u in (-1,1), split at the
        # kernel cusp u0 = z/eps; a u = cusp +- (b-a) v^2 substitution at
        # the cusp endpoint restores smoothness for the Gauss rule
        eps = self.eps
        u0 = z / eps

        def f(u):
            return _rho1(u) * axis_kernel(z - eps * u)

        def chunk(a, b, cusp):
            if b - a <= 0.0:
                return 0.0
            v = 0.5 * (nodes + 1.0)  # Gauss nodes mapped to (0,1)
            vw = 0.5 * weights
            if cusp == "left":
                u = a + (b - a) * v * v
                jac = 2.0 * (b - a) * v
            elif cusp == "right":
                u = b - (b - a) * v * v
                jac = 2.0 * (b - a) * v
            else:
                u = a + (b - a) * v
                jac = b - a
            return float(np.sum(vw * f(u) * jac))

        if -1.0 < u0 < 1.0:
            return chunk(-1.0, u0, "right") + chunk(u0, 1.0, "left")
        return chunk(-1.0, 1.0, None)

    def __call__(self, z):
        z = np.asarray(z, dtype=float)
        # table values are <= 0 for positive z, so the sign flip is a
        # copysign; this keeps the kernel exactly odd
        mag = np.interp(np.abs(z), self._z, self._vneg)
        return np.copysign(mag, -z)

    def magnitude(self, az):
        """|M_eps| for nonnegative arguments (fast path for sorted markers)."""
        return np.interp(az, self._z, self._vneg)


_rho1_cache = None


def _rho1(u):
    """Normalised 1D mollifier bump on (-1,1)."""
    global _rho1_cache
    if _rho1_cache is None:
        _rho1_cache = quad(lambda s: float(profiles.bump_sym(s)), -1.0, 1.0)[0]
    return profiles.bump_sym(u) / _rho1_cache


def build_mollified(eps):
    return MollifiedKernel(eps)


class SlitState:
    """Axis markers alphas in [-1,1] and their current positions Y."""

    def __init__(self, alphas, Y, t, eps):
        self.alphas = np.asarray(alphas, dtype=float)
        self.Y = np.asarray(Y, dtype=float)
        self.t = float(t)
        self.eps = float(eps)
        self.N = len(self.alphas)


class RibbonState(SlitState):
    """Same marker structure in alpha3; the alpha2 extent is fixed [-1,1]."""

    alpha2_extent = (-1.0, 1.0)


def uniform_markers(N):
    """Midpoint markers on [-1,1]; even N keeps the set reflection-symmetric
    with no marker at 0."""
    if N < 2 or N % 2:
        raise ValueError("N must be even and >= 2")
    return -1.0 + (np.arange(N) + 0.5) * (2.0 / N)


_pair_cache = {}


def _pair_workspace(n):
    if n not in _pair_cache:
        iu, ju = np.triu_indices(n, k=1)
        lengths = n - 1 - np.arange(n - 1)
        starts = np.concatenate([[0], np.cumsum(lengths[:-1])])
        _pair_cache[n] = (iu, ju, starts, np.empty(len(iu)), np.empty(len(iu)))
    return _pair_cache[n]


def slit_rhs(Y, M):
    """dY_i/dt = (2/N) sum_j M_eps(Y_i - Y_j); all pairs, self term 0.

    The kernel is odd and the markers ascend, so only the i < j half of the
    pair matrix is evaluated (where Y_j - Y_i >= 0) and the transpose half
    enters with the opposite sign.  The i < j pairs sit in contiguous rows,
    so the row sums reduce with a single segmented add.
    """
    Y = np.asarray(Y, dtype=float)
    n = len(Y)
    iu, ju, starts, b1, b2 = _pair_workspace(n)
    np.take(Y, ju, out=b1)
    np.take(Y, iu, out=b2)
    np.subtract(b1, b2, out=b1)  # Y_j - Y_i, nonnegative up to roundoff
    m = M.magnitude(b1)  # = M(Y_i - Y_j) for i < j
    acc = np.zeros(n)
    acc[: n - 1] = np.add.reduceat(m, starts)
    acc -= np.bincount(ju, weights=m, minlength=n)
    return (2.0 / n) * acc


class CollapseHistory:
    """Per-run record: sampled states, invariant extremes, bound excess."""

    def __init__(self):
        self.states = []
        self.max_odd = 0.0
        self.max_slope = 0.0
        self.min_slope = np.inf
        self.bound_excess = 0.0
        self.max_abs = []

    def to_dict(self):
        return {
            "max_oddness_defect": self.max_odd,
            "max_marker_slope": self.max_slope,
            "min_marker_slope": self.min_slope,
            "collapse_bound_excess": self.bound_excess,
        }


def _solve_axis(N, eps, dt, T, rate, bound, state_cls, sample_every=20,
                invariant_tol=1e-10):
    """Shared rk4 driver for the slit (rate 1) and ribbon (rate 2) systems.

    Invariants enforced each step: oddness of Y, marker slopes in (0, 1],
    non-increasing max |Y|.  bound(t) is the square-root comparison envelope
    for Y(t, 1); its worst excess is recorded, not raised.
    """
    alphas = uniform_markers(N)
    M = build_mollified(eps)
    Y = alphas.copy()
    da = 2.0 / N
    hist = CollapseHistory()
    hist.states.append(state_cls(alphas, Y.copy(), 0.0, eps))
    t = 0.0
    prev_max = 1.0
    step = 0

    def f(_, y):
        return rate * slit_rhs(y, M)

    while t < T - 1e-12:
        h = dt
        if np.max(np.abs(Y)) < 10.0 * eps:
            h = dt / 4.0
        h = min(h, T - t)
        k1 = f(t, Y)
        k2 = f(t, Y + 0.5 * h * k1)
        k3 = f(t, Y + 0.5 * h * k2)
        k4 = f(t, Y + h * k3)
        Y = Y + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
        t += h
        step += 1
        odd = float(np.max(np.abs(Y + Y[::-1])))
        hist.max_odd = max(hist.max_odd, odd)
        if odd > invariant_tol:
            raise RuntimeError(
                "oddness defect %g at t=%g (step %d)" % (odd, t, step)
            )
        slopes = np.diff(Y) / da
        lo = float(np.min(slopes))
        hi = float(np.max(slopes))
        hist.min_slope = min(hist.min_slope, lo)
        hist.max_slope = max(hist.max_slope, hi)
        if lo < -invariant_tol or hi > 1.0 + invariant_tol:
            raise RuntimeError(
                "marker slope out of [0,1]: [%g, %g] at t=%g" % (lo, hi, t)
            )
        cur_max = float(np.max(np.abs(Y)))
        if cur_max > prev_max + invariant_tol:
            raise RuntimeError("max|Y| increased at t=%g" % t)
        prev_max = cur_max
        hist.max_abs.append((t, cur_max))
        if bound is not None:
            hist.bound_excess = max(hist.bound_excess, cur_max - bound(t))
        if step % sample_every == 0 or t >= T - 1e-12:
            hist.states.append(state_cls(alphas, Y.copy(), t, eps))
    return hist


def solve_slit(N, eps, dt, T, sample_every=20):
    """Slit collapse run; envelope Y(t,1) <= (1 - t/2)^2 until t = 2."""
    bound = lambda t: (1.0 - 0.5 * min(t, 2.0)) ** 2
    return _solve_axis(N, eps, dt, T, 1.0, bound, SlitState, sample_every)


def solve_ribbon(N, eps, dt, T, sample_every=20):
    """Ribbon run: exactly twice the slit rate, envelope (1 - t)^2."""
    bound = lambda t: (1.0 - min(t, 1.0)) ** 2
    return _solve_axis(N, eps, dt, T, 2.0, bound, RibbonState, sample_every)


def slit_velocity(state, x):
    """u(t,x) = (2/N) sum_j K(x - (Y_j, 0)) with the closed-form kernel."""
    spec = KernelSpec("slit2d")
    x = np.atleast_2d(np.asarray(x, dtype=float))
    out = np.zeros_like(x)
    chunk = max(1, 2 * 10 ** 6 // max(state.N, 1))
    for i in range(0, x.shape[0], chunk):
        xi = x[i : i + chunk]
        d = np.empty((xi.shape[0], state.N, 2))
        d[..., 0] = xi[:, None, 0] - state.Y[None, :]
        d[..., 1] = xi[:, None, 1]
        out[i : i + chunk] = (2.0 / state.N) * np.sum(
            _slit_K(d, spec.cutoff), axis=1
        )
    return out


def ribbon_velocity(state, x, m_alpha2=64):
    """Tensor-product quadrature of the matrix kernel against the ribbon.

    The stretch vector is exactly (0,1,0), so only the (1,2) and (3,2)
    kernel entries survive; the second velocity component is structurally 0.
    """
    spec = KernelSpec("ribbon3x3")
    x = np.atleast_2d(np.asarray(x, dtype=float))
    a2 = -1.0 + (np.arange(m_alpha2) + 0.5) * (2.0 / m_alpha2)
    w = (2.0 / m_alpha2) * (2.0 / state.N)
    out = np.zeros_like(x)
    for a in a2:
        d = np.empty((x.shape[0], state.N, 3))
        d[..., 0] = x[:, None, 0]
        d[..., 1] = x[:, None, 1] - a
        d[..., 2] = x[:, None, 2] - state.Y[None, :]
        d1, d3 = _ribbon_derivs(d, spec.cutoff)
        out[:, 0] += w * np.sum(d3, axis=1)
        out[:, 2] -= w * np.sum(d1, axis=1)
    return out


def active_sobolev_check(state, p, region_half=2.0, h=0.02):
    """Grid estimate of the L^p norm of grad u for the slit velocity.

    For p < 2 the estimate stabilises under refinement; at p = 2 it grows,
    since |grad K| ~ |x|^{-1/2} against a one-dimensional measure is exactly
    square-critical.
    """
    if not (1.0 <= p):
        raise ValueError("p must be >= 1")
    g = np.arange(-region_half, region_half + h / 2, h)
    xx, yy = np.meshgrid(g, g)
    pts = np.stack([xx.ravel(), yy.ravel()], axis=-1)
    v = slit_velocity(state, pts).reshape(len(g), len(g), 2)
    d1 = (v[1:-1, 2:] - v[1:-1, :-2]) / (2.0 * h)
    d2 = (v[2:, 1:-1] - v[:-2, 1:-1]) / (2.0 * h)
    mag = np.sqrt(np.sum(d1 * d1, axis=-1) + np.sum(d2 * d2, axis=-1))
    return float((np.sum(mag ** p) * h * h) ** (1.0 / p))


def history_csv(hist):
    """CSV of sampled states: t, alpha, Y."""
    lines = ["t,alpha,Y"]
    for st in hist.states:
        for a, y in zip(st.alphas, st.Y):
            lines.append("%r,%r,%r" % (st.t, a, y))
    return "\n".join(lines) + "\n"
