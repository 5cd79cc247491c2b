"""Walk through the two-map quarter-turn IFS: build the attractor,
check separation, and estimate its box-counting dimension.

Usage: python3 demos/attractor_and_dimension.py [alpha]
"""

import sys

import numpy as np

from fractalflow import geometry, measures


def main():
    alpha = float(sys.argv[1]) if len(sys.argv) > 1 else 0.6
    params = geometry.derive_constants(alpha)
    print("alpha = %.4f" % alpha)
    print("  eps   = %.6f" % params.eps)
    print("  delta = %.6f (= alpha * eps)" % params.delta)
    print("  gamma = %.6f" % params.gamma)
    print("  similarity dimension h = %.4f" % params.h)

    # finite-depth segment approximation: one segment per word
    approx = geometry.attractor_approx(params, depth=8)
    print("\ndepth-8 approximation: %d segments" % len(approx))

    rep = geometry.separation_check(params, depth=4)
    print("separation at depth 4: %s" % ("pass" if rep.ok else "FAIL"))
    print("  child half-space edges: %.6f / %.6f (need +-%.6f)"
          % (rep.halfspace_left_edges[0], rep.halfspace_left_edges[1],
             4.0 * params.delta))

    # dimension from random length-10 word samples of the homogeneous system
    pts = measures.attractor_point_sample(alpha, depth=10)
    box = measures.box_dimension(pts, measures.attractor_scales(alpha))
    print("\nbox-counting: slope %.4f, target -log2/log(alpha) = %.4f"
          % (box.slope, -np.log(2.0) / np.log(alpha)))
    for s, c in zip(box.scales, box.counts):
        print("  scale %.5f -> %6d boxes" % (s, c))


if __name__ == "__main__":
    main()
