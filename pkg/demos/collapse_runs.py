"""Run the slit and ribbon marker systems to collapse and print the
envelope they track: max |Y| stays below (1 - t/2)^2 for the slit and
below (1 - t)^2 for the ribbon, hitting machine zero at the finite
collapse time.

Usage: python3 demos/collapse_runs.py
"""

from fractalflow import activescalar


def report(name, hist, picks):
    print("%s: %d sampled states, oddness defect %.1e, slopes in [%.2g, %.4f]"
          % (name, len(hist.states), hist.max_odd,
             hist.min_slope, hist.max_slope))
    print("  bound excess %.2e (negative or tiny means the envelope holds)"
          % hist.bound_excess)
    print("  t        max|Y|")
    times = dict(hist.max_abs)
    keys = sorted(times)
    for tp in picks:
        t = min(keys, key=lambda s: abs(s - tp))
        print("  %.3f  %.3e" % (t, times[t]))


def main():
    print("slit system, N = 200 markers, eps = 5e-3, collapse time 2")
    hist = activescalar.solve_slit(N=200, eps=5e-3, dt=1e-3, T=2.05)
    report("slit", hist, [0.0, 0.5, 1.0, 1.5, 1.9, 2.05])

    print("\nribbon system, N = 200 markers, eps = 5e-3, collapse time 1")
    hist = activescalar.solve_ribbon(N=200, eps=5e-3, dt=1e-3, T=1.05)
    report("ribbon", hist, [0.0, 0.25, 0.5, 0.75, 0.95, 1.05])

    # the induced velocity at a point just off the ribbon sheet; the
    # middle component is structurally zero
    state = hist.states[len(hist.states) // 2]
    u = activescalar.ribbon_velocity(state, [[0.3, 0.0, 0.1]])
    print("\nribbon velocity at (0.3, 0, 0.1), t = %.3f: (%.4f, %.4f, %.4f)"
          % (state.t, u[0, 0], u[0, 1], u[0, 2]))


if __name__ == "__main__":
    main()
