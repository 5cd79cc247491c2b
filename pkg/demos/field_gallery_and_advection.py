"""Sample the main velocity fields on a grid, check they are numerically
divergence-free, and advect a particle cloud through the fractal series
field to watch a word image map onto its parent.

Usage: python3 demos/field_gallery_and_advection.py
"""

import numpy as np

from fractalflow import fields, flow, geometry


def divergence_table(alpha):
    p = geometry.derive_constants(alpha)
    region = geometry.Rect((-0.3, -0.3), (0.3, 0.3))
    handles = [
        ("fundamental u", fields.fundamental_u_handle(alpha)),
        ("series U (depth 4)", fields.series_U_handle(alpha, depth=4)),
        ("collapse W (depth 4)", fields.collapse_W_handle(alpha, depth=4)),
    ]
    print("max |central-difference divergence| on [-0.3, 0.3]^2 at t = 0.5")
    for name, h in handles:
        for step in (2e-3, 1e-3):
            div = fields.grid_divergence(h, region, step, 0.5)
            print("  %-22s h = %.0e : %.4f" % (name, step, np.max(np.abs(div))))
    print("(first-order decay in h; the fundamental field is exact off the")
    print(" cutoff bands, the truncated series varies on scale alpha^depth)")


def advect_word_image(alpha):
    # points in the image of the word (1,) flow back onto the parent copy:
    # integrating the series field conjugates with the word similarity
    p = geometry.derive_constants(alpha)
    g = geometry.word_map((1,), 0.0, alpha)
    rng = np.random.default_rng(3)
    base = rng.uniform(-0.05, 0.05, size=(64, 2))
    cloud = flow.ParticleCloud(g(base))
    cfg = flow.IntegratorConfig(dt=1e-3)

    field = fields.series_U_handle(alpha, depth=24)
    rep = flow.rescaled_trajectory_check(field, g, flow.ParticleCloud(base), cfg)
    print("\nconjugation check for word (1,): max deviation %.3e" % rep)

    out = flow.integrate(field, cloud, 0.0, 1.0, cfg)
    print("advected %d particles for unit time, mean |x| %.4f -> %.4f"
          % (len(base), np.mean(np.hypot(*cloud.positions.T)),
             np.mean(np.hypot(*out.positions.T))))


def main():
    alpha = 0.6
    divergence_table(alpha)
    advect_word_image(alpha)


if __name__ == "__main__":
    main()
