"""Divergence-free velocity fields built from a single stream-function bump.

The fundamental field u is the perpendicular gradient of
psi(x) = chi(x) * x2 * S_delta(x1), where S_delta is a mollified sign and chi
a rectangular cutoff that is 1 on R_0 and supported in R_eps.  Everything
else is u pushed around by quarter-turn similarities and summed:

  U  : word-indexed series over the IFS tree (one active word per level),
  W  : time-windowed geometric rescaling of U that collapses the attractor,
  nu : a cone-supported field sweeping a sequence of shrinking blocks,
  V  : per-block series fields for t in [0,1], then nu for t in [1,2],
  Vt : geometric time-compression of V on [0,18].

Evaluation is pure and vectorized over points; infinite sums carry explicit
geometric tail bounds recorded on the handle.
"""

import struct
import numpy as np

from . import profiles
from .geometry import (
    SQRT2,
    ROT,
    AffineSimilarity,
    IfsParams,
    Rect,
    derive_constants,
    word_map,
)


def smoothed_sign(x1, delta):
    """Mollified sign at scale delta: odd, smooth, +-1 for |x1| >= delta."""
    if delta <= 0.0:
        raise ValueError("delta must be positive")
    return profiles.mollified_sign(np.asarray(x1, dtype=float) / delta)


def smoothed_sign_d(x1, delta):
    return profiles.mollified_sign_d(np.asarray(x1, dtype=float) / delta) / delta


class FundamentalU:
    """The compactly supported unit-transport field at scale alpha.

    Equals (-1,0) on R_0 n {x1 >= delta} and (1,0) on R_0 n {x1 <= -delta},
    exactly; supported in R_eps.
    """

    def __init__(self, alpha):
        self.params = derive_constants(alpha)
        self.chi = profiles.RectCutoff(2.0, SQRT2, self.params.eps)

    def __call__(self, x):
        x = np.atleast_2d(np.asarray(x, dtype=float))
        x1 = x[..., 0]
        x2 = x[..., 1]
        chi, g1, g2 = self.chi.value_grad(x)
        s = smoothed_sign(x1, self.params.delta)
        sd = smoothed_sign_d(x1, self.params.delta)
        u1 = -(g2 * x2 * s + chi * s)
        u2 = g1 * x2 * s + chi * x2 * sd
        return np.stack([u1, u2], axis=-1)


_fund_cache = {}


def fundamental(alpha):
    key = round(float(alpha), 15)
    if key not in _fund_cache:
        _fund_cache[key] = FundamentalU(alpha)
    return _fund_cache[key]


_sup_cache = {}


def fundamental_sup(alpha):
    """Grid estimate of ||u||_inf for tail bounds (cached)."""
    key = round(float(alpha), 15)
    if key not in _sup_cache:
        p = derive_constants(alpha)
        g = np.linspace(-2.0 - p.eps, 2.0 + p.eps, 241)
        h = np.linspace(-SQRT2 - p.eps, SQRT2 + p.eps, 181)
        xx, yy = np.meshgrid(g, h)
        pts = np.stack([xx.ravel(), yy.ravel()], axis=-1)
        v = fundamental(alpha)(pts)
        _sup_cache[key] = float(np.max(np.linalg.norm(v, axis=-1)))
    return _sup_cache[key]


def eval_u(alpha, x):
    return fundamental(alpha)(x)


def eval_rescaled(word, eta_integral, alpha, x):
    """R^k u((F_w^t)^{-1} x): the fundamental field carried onto the word's
    image block."""
    m = word_map(word, eta_integral, alpha)
    y = m.inverse()(np.atleast_2d(np.asarray(x, dtype=float)))
    k = len(word) % 4
    return fundamental(alpha)(y) @ ROT[k].T


_eta_cache = {}


def eta_profile(alpha):
    """The drift profile: nonnegative ramp on (0,1) with integral delta."""
    key = round(float(alpha), 15)
    if key not in _eta_cache:
        _eta_cache[key] = profiles.TimeProfile(mass=derive_constants(alpha).delta)
    return _eta_cache[key]


_eta_tilde = None


def eta_tilde_profile():
    """Unit-mass ramp on (0,1)."""
    global _eta_tilde
    if _eta_tilde is None:
        _eta_tilde = profiles.TimeProfile(mass=1.0)
    return _eta_tilde


def _series_sum(alpha, s, x, depth, u=None):
    """Sum over the word tree of alpha^k R^k u((F_w^t)^{-1} x) at drift s.

    At most one word per level contains a given point, so the whole double
    sum collapses to a single descent down the tree: maintain local
    coordinates per point and peel one letter per level.
    """
    p = derive_constants(alpha)
    if u is None:
        u = fundamental(alpha)
    x = np.atleast_2d(np.asarray(x, dtype=float))
    n = x.shape[0]
    out = np.zeros((n, 2))
    hx = 2.0 + p.eps
    hy = SQRT2 + p.eps
    c = 1.0 - s
    idx = np.where(
        (np.abs(x[:, 0]) <= hx + 1e-12) & (np.abs(x[:, 1]) <= hy + 1e-12)
    )[0]
    ya = x[idx]
    scale = 1.0
    for k in range(depth + 1):
        if idx.size == 0:
            break
        out[idx] += scale * (u(ya) @ ROT[k % 4].T)
        # descend: child-local coordinates y' = R^{-1}(y -+ (c,0)) / alpha
        y1 = np.stack([ya[:, 1], -(ya[:, 0] - c)], axis=-1) / p.alpha
        y2 = np.stack([ya[:, 1], -(ya[:, 0] + c)], axis=-1) / p.alpha
        m1 = (np.abs(y1[:, 0]) <= hx + 1e-12) & (np.abs(y1[:, 1]) <= hy + 1e-12)
        m2 = (np.abs(y2[:, 0]) <= hx + 1e-12) & (np.abs(y2[:, 1]) <= hy + 1e-12)
        m2 &= ~m1
        keep = m1 | m2
        idx = idx[keep]
        ya = np.where(m1[:, None], y1, y2)[keep]
        scale *= p.alpha
    return out


def eval_U(alpha, t, x, depth=24):
    """The series field at time t: eta(t) times the word-tree sum."""
    if depth < 0:
        raise ValueError("depth must be >= 0")
    t = float(t)
    x = np.atleast_2d(np.asarray(x, dtype=float))
    eta = eta_profile(alpha)
    a = float(eta(t))
    if a == 0.0:
        return np.zeros_like(x)
    s = float(eta.cum(t))
    return a * _series_sum(alpha, s, x, depth)


def default_xi(gamma):
    return 0.5 * (1.0 + np.sqrt(gamma))


def collapse_schedule(gamma, xi, count=8):
    """Window start times t_k = (1-xi^k)/(1-xi), k = 0..count."""
    if not (np.sqrt(gamma) < xi < 1.0):
        raise ValueError("xi must lie in (sqrt(gamma), 1)")
    k = np.arange(count + 1)
    return (1.0 - xi ** k) / (1.0 - xi)


def locate_window(xi, t):
    """Index k with t in [t_k, t_{k+1}) for the geometric window schedule."""
    r = 1.0 - (1.0 - xi) * t
    if r <= 0.0:
        return None
    return max(int(np.floor(np.log(r) / np.log(xi))), 0)


def eval_W(alpha, xi, t, x, depth=24):
    """Collapse field: on window k, a (gamma/xi)^k-scaled copy of the series
    field acting at spatial scale gamma^k."""
    p = derive_constants(alpha)
    if not (np.sqrt(p.gamma) < xi < 1.0):
        raise ValueError("xi must lie in (sqrt(gamma), 1)")
    t = float(t)
    x = np.atleast_2d(np.asarray(x, dtype=float))
    horizon = 1.0 / (1.0 - xi)
    if t < 0.0 or t >= horizon:
        return np.zeros_like(x)
    k = locate_window(xi, t)
    tk = (1.0 - xi ** k) / (1.0 - xi)
    tau = (t - tk) / xi ** k
    fac = (p.gamma / xi) ** k
    return fac * eval_U(alpha, tau, x / p.gamma ** k, depth)


# --- the cone-swept auxiliary field -----------------------------------------

_cone = None


def cone_profile():
    global _cone
    if _cone is None:
        _cone = profiles.ConeProfile()
    return _cone


_ramp = None


def axis_ramp():
    global _ramp
    if _ramp is None:
        _ramp = profiles.AxisRamp(0.75)
    return _ramp


def _nu_sum(s, x, kmax):
    """Sum over k of the per-scale sweep terms at drift s in [0,1].

    Term k is the perpendicular gradient of x2 * Phi(x) * chi_k(s,x) with
    chi_k(s,x) = (7/8)^k ramp((8/7)^k (x1 - g_k(s))), g_k(s) =
    (7/8)^{k+1}(25-3s).  Once the ramp argument clears its width the term is
    exactly (7/8)^k * grad_perp(x2 Phi), so the tail sums in closed form.
    """
    x = np.atleast_2d(np.asarray(x, dtype=float))
    n = x.shape[0]
    out = np.zeros((n, 2))
    x1 = x[:, 0]
    x2 = x[:, 1]
    live = x1 > 0.0
    if not np.any(live):
        return out
    phi, p1, p2 = cone_profile().value_grad(x)
    ramp = axis_ramp()
    # grad_perp(x2 Phi) = (-(Phi + x2 dPhi/dx2), x2 dPhi/dx1)
    base1 = -(phi + x2 * p2)
    base2 = x2 * p1
    pending = np.where(live)[0]
    r78 = 7.0 / 8.0
    r87 = 8.0 / 7.0
    fk = 1.0
    gk = r78 * (25.0 - 3.0 * s)
    for k in range(kmax + 1):
        if pending.size == 0:
            break
        arg = (x1[pending] - gk) / fk
        plateau = arg >= ramp.width
        hit = np.where(plateau)[0]
        if hit.size:
            # every later term is also on plateau: analytic geometric tail
            j = pending[hit]
            tail = fk / (1.0 - r78)
            out[j, 0] += tail * base1[j]
            out[j, 1] += tail * base2[j]
            pending = pending[~plateau]
            arg = arg[~plateau]
        if pending.size:
            # chi_k = fk * ramp(z) with z = (x1 - g_k)/fk, so d(chi_k)/dx1
            # is ramp'(z) with the fk factors cancelling
            j = pending
            c = fk * ramp.value(arg)
            cd = ramp.d(arg)
            out[j, 0] += base1[j] * c
            out[j, 1] += base2[j] * c + x2[j] * phi[j] * cd
        fk *= r78
        gk *= r78
    return out


def eval_nu(t, x, kmax=40):
    """The sweep field: eta_tilde(t) * (3/8) * sum of per-scale terms."""
    if kmax < 1:
        raise ValueError("kmax must be >= 1")
    t = float(t)
    x = np.atleast_2d(np.asarray(x, dtype=float))
    eta = eta_tilde_profile()
    a = float(eta(t))
    if a == 0.0:
        return np.zeros_like(x)
    s = float(eta.cum(t))
    return a * (3.0 / 8.0) * _nu_sum(s, x, kmax)


# --- combined full-dimension field ------------------------------------------


def block_params(k):
    """Per-block scale alpha_k and contraction gamma_k for block index k >= 1."""
    g = (7.0 / 8.0) ** (1.0 / (k + 1.0))
    a = 2.0 * SQRT2 * (g - 0.75)
    return a, g


def block_map(k):
    """G_k: similarity placing the k-th attractor block on the axis.

    G_k(x) = (7/8)^{k-1} [ (1/sqrt2) R x + (24, 0) ].
    """
    f = (7.0 / 8.0) ** (k - 1)
    return AffineSimilarity((24.0 * f, 0.0), 1, f / SQRT2)


def eval_block_series(k, t, x, depth=24):
    """V_k: the k-th block's staged series field in local coordinates.

    (k+1) sum_n gamma_k^n U_{alpha_k}((k+1)t - n, gamma_k^{-n} x); exactly one
    stage n = floor((k+1)t) is active at any t in (0,1).
    """
    a_k, g_k = block_params(k)
    x = np.atleast_2d(np.asarray(x, dtype=float))
    tt = (k + 1.0) * float(t)
    n = int(np.floor(tt))
    if n > k:
        n = k
    if n < 0:
        n = 0
    tau = tt - n
    v = eval_U(a_k, tau, x / g_k ** n, depth)
    return (k + 1.0) * g_k ** n * v


def eval_V(t, x, kmax=40, depth=24):
    """Combined field: block series on [0,1], the sweep on [1,2], 0 outside."""
    if kmax < 1:
        raise ValueError("kmax must be >= 1")
    t = float(t)
    x = np.atleast_2d(np.asarray(x, dtype=float))
    out = np.zeros_like(x)
    if 1.0 < t <= 2.0:
        return eval_nu(t - 1.0, x, kmax)
    if not (0.0 <= t <= 1.0):
        return out
    r_half = Rect.standard(0.5)
    unassigned = np.arange(x.shape[0])
    for k in range(1, kmax + 1):
        if unassigned.size == 0:
            break
        g = block_map(k)
        y = g.inverse()(x[unassigned])
        inside = r_half.contains_point(y, slack=0.0)
        if not np.any(inside):
            continue
        j = unassigned[inside]
        v = eval_block_series(k, t, y[inside], depth)
        # the multiplier must be the full linear part of G_k (rotation and
        # the 1/sqrt2 scale), so that trajectories are conjugate to the
        # block-local dynamics of the series field
        out[j] = v @ g.matrix.T
        unassigned = unassigned[~inside]
    return out


def stage_times(count=8):
    """t_k = 18 (1 - (8/9)^k): stage starts of the compressed field."""
    k = np.arange(count + 1)
    return 18.0 * (1.0 - (8.0 / 9.0) ** k)


def eval_Vtilde(t, x, kmax=40, depth=24):
    """Geometric time-compression of the combined field on [0,18)."""
    t = float(t)
    if not (0.0 <= t <= 18.0):
        raise ValueError("t must lie in [0, 18]")
    x = np.atleast_2d(np.asarray(x, dtype=float))
    r = 1.0 - t / 18.0
    if r <= 0.0:
        return np.zeros_like(x)
    k = max(int(np.floor(np.log(r) / np.log(8.0 / 9.0))), 0)
    tk = 18.0 * (1.0 - (8.0 / 9.0) ** k)
    tau = (9.0 / 8.0) ** k * (t - tk)
    return (63.0 / 64.0) ** k * eval_Vtilde_inner(tau, (8.0 / 7.0) ** k * x, kmax, depth)


def eval_Vtilde_inner(tau, x, kmax, depth):
    return eval_V(min(max(tau, 0.0), 2.0), x, kmax, depth)


# --- handles and grid utilities ---------------------------------------------


class FieldHandle:
    """Uniform wrapper: eval(t, points) -> velocity array, plus metadata."""

    def __init__(self, kind, func, params, tolerance=0.0, dim=2):
        self.kind = kind
        self._func = func
        self.params = dict(params)
        self.tolerance = float(tolerance)
        self.dim = int(dim)

    def eval(self, t, x):
        return self._func(t, np.atleast_2d(np.asarray(x, dtype=float)))

    def negated_reflection(self, T):
        """Handle for -field(T - t, x): the time-reversed companion."""
        base = self._func
        return FieldHandle(
            self.kind + "_reversed",
            lambda t, x: -base(T - t, x),
            dict(self.params, reversed_about=T),
            self.tolerance,
            self.dim,
        )

    def __repr__(self):
        return "FieldHandle(%s, %s)" % (self.kind, self.params)


def fundamental_u_handle(alpha):
    u = fundamental(alpha)
    return FieldHandle("fundamental_u", lambda t, x: u(x), {"alpha": alpha})


def series_U_handle(alpha, depth=24):
    p = derive_constants(alpha)
    tol = eta_profile(alpha).sup * fundamental_sup(alpha) * p.alpha ** (depth + 1) / (
        1.0 - p.alpha
    )
    return FieldHandle(
        "series_U",
        lambda t, x: eval_U(alpha, t, x, depth),
        {"alpha": alpha, "depth": depth},
        tolerance=tol,
    )


def collapse_W_handle(alpha, xi=None, depth=24):
    p = derive_constants(alpha)
    if xi is None:
        xi = default_xi(p.gamma)
    tol = eta_profile(alpha).sup * fundamental_sup(alpha) * p.alpha ** (depth + 1) / (
        1.0 - p.alpha
    )
    return FieldHandle(
        "collapse_W",
        lambda t, x: eval_W(alpha, xi, t, x, depth),
        {"alpha": alpha, "xi": xi, "depth": depth},
        tolerance=tol,
    )


def aux_nu_handle(kmax=40):
    return FieldHandle(
        "aux_nu", lambda t, x: eval_nu(t, x, kmax), {"kmax": kmax}
    )


def combined_V_handle(kmax=40, depth=24):
    return FieldHandle(
        "combined_V",
        lambda t, x: eval_V(t, x, kmax, depth),
        {"kmax": kmax, "depth": depth},
    )


def full_Vtilde_handle(kmax=40, depth=24):
    return FieldHandle(
        "full_Vtilde",
        lambda t, x: eval_Vtilde(t, x, kmax, depth),
        {"kmax": kmax, "depth": depth},
    )


def zero_handle(dim=2):
    return FieldHandle(
        "zero", lambda t, x: np.zeros_like(np.atleast_2d(x)), {}, dim=dim
    )


class GridSample:
    """Field values on a uniform grid over an axis-aligned rectangle."""

    MAGIC = b"FFGRID01"

    def __init__(self, region, h, values, origin=None):
        self.region = region
        self.h = float(h)
        self.values = np.asarray(values, dtype=float)
        self.origin = (
            np.asarray(origin, dtype=float) if origin is not None else region.lo
        )

    @property
    def shape(self):
        return self.values.shape

    def nodes(self):
        ny, nx = self.values.shape[:2]
        gx = self.origin[0] + self.h * np.arange(nx)
        gy = self.origin[1] + self.h * np.arange(ny)
        return gx, gy

    def to_csv(self):
        gx, gy = self.nodes()
        lines = ["x,y,vx,vy"]
        for iy, y in enumerate(gy):
            for ix, x in enumerate(gx):
                v = self.values[iy, ix]
                lines.append("%r,%r,%r,%r" % (x, y, v[0], v[1]))
        return "\n".join(lines) + "\n"

    def to_binary(self, path):
        """Row-major float64 dump with a fixed-size header:
        magic (8 bytes), dims ny nx ncomp (3 x int64), spacing (float64),
        origin x y (2 x float64)."""
        ny, nx, nc = self.values.shape
        with open(path, "wb") as f:
            f.write(self.MAGIC)
            f.write(struct.pack("<3q", ny, nx, nc))
            f.write(struct.pack("<3d", self.h, self.origin[0], self.origin[1]))
            f.write(np.ascontiguousarray(self.values).tobytes())

    @classmethod
    def from_binary(cls, path):
        with open(path, "rb") as f:
            magic = f.read(8)
            if magic != cls.MAGIC:
                raise ValueError("bad grid file magic")
            ny, nx, nc = struct.unpack("<3q", f.read(24))
            h, ox, oy = struct.unpack("<3d", f.read(24))
            data = np.frombuffer(f.read(), dtype="<f8").reshape(ny, nx, nc)
        region = Rect(
            (ox + h * (nx - 1) / 2.0, oy + h * (ny - 1) / 2.0),
            (max(h * (nx - 1) / 2.0, h / 2), max(h * (ny - 1) / 2.0, h / 2)),
        )
        return cls(region, h, data, origin=(ox, oy))


def sample_field(field, region, h, t):
    """Evaluate a field handle on a uniform grid covering the region."""
    nx = int(np.floor(2.0 * region.half[0] / h)) + 1
    ny = int(np.floor(2.0 * region.half[1] / h)) + 1
    gx = region.lo[0] + h * np.arange(nx)
    gy = region.lo[1] + h * np.arange(ny)
    xx, yy = np.meshgrid(gx, gy)
    pts = np.stack([xx.ravel(), yy.ravel()], axis=-1)
    vals = field.eval(t, pts).reshape(ny, nx, -1)
    return GridSample(region, h, vals, origin=(gx[0], gy[0]))


def grid_divergence(field, region, h, t):
    """Max central-difference divergence over interior grid nodes."""
    if h <= 0.0:
        raise ValueError("h must be positive")
    gs = sample_field(field, region, h, t)
    v = gs.values
    div = (v[1:-1, 2:, 0] - v[1:-1, :-2, 0]) / (2.0 * h) + (
        v[2:, 1:-1, 1] - v[:-2, 1:-1, 1]
    ) / (2.0 * h)
    if div.size == 0:
        return 0.0
    return float(np.max(np.abs(div)))


def sobolev_norm(field, t, p, region, h):
    """Riemann estimate of the L^p norm of the velocity gradient at time t.

    Central differences for the Jacobian, Frobenius pointwise norm, cellwise
    summation over the grid.
    """
    if p < 1.0:
        raise ValueError("p must be >= 1")
    gs = sample_field(field, region, h, t)
    v = gs.values
    d1 = (v[1:-1, 2:] - v[1:-1, :-2]) / (2.0 * h)
    d2 = (v[2:, 1:-1] - v[:-2, 1:-1]) / (2.0 * h)
    mag = np.sqrt(np.sum(d1 * d1, axis=-1) + np.sum(d2 * d2, axis=-1))
    return float((np.sum(mag ** p) * h * h) ** (1.0 / p))
