"""Canned verification scenarios shared by the CLI and the test suite.

Each scenario produces a (field handle, measure path, horizon) triple at a
given refinement level; level l halves the time step and marker spacing of
level l-1, so residual ratios between levels measure convergence order.
"""

import numpy as np

from . import activescalar, fields, flow, measures


class SnapshotField(fields.FieldHandle):
    """Field reconstructed from stored particle states: evaluation picks the
    stored state nearest in time (sample times coincide with measure times,
    so lookup is exact in the residual pipeline)."""

    def __init__(self, kind, times, states, velocity_fn, dim):
        self.times = np.asarray(times, dtype=float)
        self.states = list(states)
        self._velocity = velocity_fn
        super().__init__(kind, self._eval, {"snapshots": len(states)}, dim=dim)

    def _eval(self, t, x):
        i = int(np.argmin(np.abs(self.times - t)))
        return self._velocity(self.states[i], x)

    def negated_reflection(self, T):
        base = self._eval
        return fields.FieldHandle(
            self.kind + "_reversed",
            lambda t, x: -base(T - t, x),
            dict(self.params, reversed_about=T),
            self.tolerance,
            self.dim,
        )


def make_test_functions_2d(rng, n=20, box=2.2, scale=1.6):
    phis = []
    for _ in range(n):
        c = rng.uniform(-box, box, size=2)
        deg = rng.integers(0, 4)
        power = np.zeros(2, dtype=int)
        for _ in range(deg):
            power[rng.integers(0, 2)] += 1
        b = rng.uniform(-1.0, 1.0)
        phis.append(
            measures.TestFunction(c, scale, power, time_coeffs=(1.0, b))
        )
    return phis


def make_test_functions_3d(rng, n=20, box=1.5, scale=2.0):
    phis = []
    for _ in range(n):
        c = rng.uniform(-box, box, size=3)
        deg = rng.integers(0, 4)
        power = np.zeros(3, dtype=int)
        for _ in range(deg):
            power[rng.integers(0, 3)] += 1
        b = rng.uniform(-1.0, 1.0)
        pat = rng.normal(size=3)
        pat /= np.linalg.norm(pat)
        phis.append(
            measures.TestFunction(
                c, scale, power, time_coeffs=(1.0, b), pattern=pat
            )
        )
    return phis


def _measure_path(field, points, weights, T, n_samples, dt):
    """Advect a particle measure and store snapshots at uniform times."""
    cfg = flow.IntegratorConfig(dt=dt)
    times = np.linspace(0.0, T, n_samples + 1)
    cloud = flow.ParticleCloud(points, weights=np.atleast_1d(weights))
    path = [(0.0, measures.ParticleMeasure(cloud.positions, cloud.weights))]
    for t0, t1 in zip(times[:-1], times[1:]):
        cloud = flow.integrate(field, cloud, t0, t1, cfg)
        path.append((t1, measures.ParticleMeasure(cloud.positions, cloud.weights)))
    return path


def advected_scenario(level=0, alpha=0.6):
    """Attractor-supported scalar measure advected by the series field.

    The initial measure is fixed across levels (particle sums are exact, so
    the residual measures time discretisation only); levels refine dt and
    the snapshot grid.
    """
    n_samples = 16 * 2 ** level
    dt = 0.02 / 2 ** level
    approx_pts = measures.attractor_point_sample(alpha, 8, n=2048)
    w = np.full(len(approx_pts), 1.0 / len(approx_pts))
    field = fields.series_U_handle(alpha)
    path = _measure_path(field, approx_pts, w, 1.0, n_samples, dt)
    return field, path, 1.0


def reversed_slit_scenario(level=0, T=1.0):
    """Slit markers advected, then the whole pair reversed in time.

    The initial measure is arclength on the slit (total mass 2); the field
    is the kernel-recovered velocity of the frozen states.
    """
    N = 64 * 2 ** level
    eps = 4.0 / N
    n_samples = 16 * 2 ** level
    dt = T / (8 * n_samples)
    hist = activescalar.solve_slit(N, eps, dt, T, sample_every=10 ** 9)
    # re-run snapshots at the exact sample times via fresh integration
    times = np.linspace(0.0, T, n_samples + 1)
    M = activescalar.build_mollified(eps)
    Y = activescalar.uniform_markers(N).copy()
    states = [activescalar.SlitState(Y.copy(), Y.copy(), 0.0, eps)]
    for t0, t1 in zip(times[:-1], times[1:]):
        nst = max(int(round((t1 - t0) / dt)), 1)
        h = (t1 - t0) / nst
        for _ in range(nst):
            k1 = activescalar.slit_rhs(Y, M)
            k2 = activescalar.slit_rhs(Y + 0.5 * h * k1, M)
            k3 = activescalar.slit_rhs(Y + 0.5 * h * k2, M)
            k4 = activescalar.slit_rhs(Y + h * k3, M)
            Y = Y + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
        states.append(
            activescalar.SlitState(states[0].alphas, Y.copy(), t1, eps)
        )
    field = SnapshotField(
        "slit_u", times, states, activescalar.slit_velocity, dim=2
    )
    w = np.full(N, 2.0 / N)
    path = [
        (
            t,
            measures.ParticleMeasure(
                np.stack([st.Y, np.zeros(N)], axis=-1), w
            ),
        )
        for t, st in zip(times, states)
    ]
    rev_path, rev_field = measures.time_reverse(path, field, T)
    return rev_field, rev_path, T, hist


def ribbon_scenario(level=0, T=0.8, m_alpha2=8):
    """Vector-weighted ribbon sheet with boundary curves for the divergence
    pairing."""
    N = 48 * 2 ** level
    eps = 4.0 / N
    n_samples = 12 * 2 ** level
    dt = T / (8 * n_samples)
    m2 = m_alpha2 * 2 ** level
    times = np.linspace(0.0, T, n_samples + 1)
    M = activescalar.build_mollified(eps)
    alphas = activescalar.uniform_markers(N)
    Y = alphas.copy()
    states = [activescalar.RibbonState(alphas, Y.copy(), 0.0, eps)]
    for t0, t1 in zip(times[:-1], times[1:]):
        nst = max(int(round((t1 - t0) / dt)), 1)
        h = (t1 - t0) / nst
        for _ in range(nst):
            k1 = 2.0 * activescalar.slit_rhs(Y, M)
            k2 = 2.0 * activescalar.slit_rhs(Y + 0.5 * h * k1, M)
            k3 = 2.0 * activescalar.slit_rhs(Y + 0.5 * h * k2, M)
            k4 = 2.0 * activescalar.slit_rhs(Y + h * k3, M)
            Y = Y + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
        states.append(activescalar.RibbonState(alphas, Y.copy(), t1, eps))

    def vel(state, x):
        return activescalar.ribbon_velocity(state, x, m_alpha2=32)

    field = SnapshotField("ribbon_u", times, states, vel, dim=3)
    a2 = -1.0 + (np.arange(m2) + 0.5) * (2.0 / m2)
    w_each = 4.0 / (m2 * N)
    path = []
    for t, st in zip(times, states):
        pts = np.zeros((m2 * N, 3))
        pts[:, 1] = np.repeat(a2, N)
        pts[:, 2] = np.tile(st.Y, m2)
        wv = np.zeros((m2 * N, 3))
        wv[:, 1] = w_each
        top = np.stack([np.zeros(N), np.ones(N), st.Y], axis=-1)
        bot = np.stack([np.zeros(N), -np.ones(N), st.Y], axis=-1)
        path.append(
            (t, measures.ParticleMeasure(pts, wv, divergence_boundary=(top, bot)))
        )
    return field, path, T


def scenario_residuals(name, level, seed=7, n_phi=20):
    """Max |residual| over the test-function family for one scenario level."""
    rng = np.random.default_rng(seed)
    if name == "advected":
        field, path, T = advected_scenario(level)
        phis = make_test_functions_2d(rng, n_phi)
        reports = measures.weak_residual_2d_multi(field, path, phis, T)
    elif name == "slit":
        field, path, T, _ = reversed_slit_scenario(level)
        phis = make_test_functions_2d(rng, n_phi, box=1.2, scale=1.0)
        reports = measures.weak_residual_2d_multi(field, path, phis, T)
    elif name == "ribbon":
        field, path, T = ribbon_scenario(level)
        phis = make_test_functions_3d(rng, n_phi)
        reports = measures.weak_residual_3d_multi(field, path, phis, T)
    else:
        raise ValueError("unknown scenario %r" % name)
    return np.array([abs(r.residual) for r in reports])


def convergence_order(name, levels=(0, 1), seed=7, n_phi=20):
    """log2 ratio of residual maxima between successive levels."""
    res = [np.max(scenario_residuals(name, l, seed, n_phi)) for l in levels]
    orders = [
        np.log2(res[i] / res[i + 1]) for i in range(len(res) - 1)
    ]
    return res, orders
