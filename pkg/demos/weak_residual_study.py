"""Measure how fast the weak-form transport residual shrinks under
refinement for three scenarios: a particle measure advected by the fractal
series field, the reversed slit collapse read backward in time, and the
ribbon sheet in three dimensions.

Each residual pairs a smooth compactly supported test function against the
discrete measure path; an exact weak solution makes every pairing vanish,
so the maximum over a random family measures the discretization error.

Usage: python3 demos/weak_residual_study.py
"""

from fractalflow import scenarios


def main():
    for name, levels in (("advected", (0, 1)), ("slit", (0, 1)),
                         ("ribbon", (0, 1))):
        res, orders = scenarios.convergence_order(name, levels=levels)
        print("%s scenario:" % name)
        for lvl, r in zip(levels, res):
            print("  level %d  max residual %.3e" % (lvl, r))
        for o in orders:
            print("  observed order %.2f" % o)
        print()


if __name__ == "__main__":
    main()
