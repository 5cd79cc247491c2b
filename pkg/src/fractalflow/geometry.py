"""Binary words, quarter-turn affine similarities, and the segment-seeded
inhomogeneous IFS attractor with its separation checks.

The attractor is S = I u F1(S) u F2(S) with I = [-1,1] x {0},
F1(x) = (1,0) + a R x and F2(x) = (-1,0) + a R x, R the counterclockwise
quarter turn.  Every map in play is translation + scale * R^k, which keeps
all rectangle images axis-aligned and makes disjointness checks exact
interval arithmetic.
"""

import json
import numpy as np

SQRT2 = np.sqrt(2.0)
ALPHA_MIN = 0.5
ALPHA_MAX = 1.0 / SQRT2

# enumeration cap: 2^20 word images per call
WORD_CAP = 1 << 20

# absolute slack for closed-interval containment tests
GEOM_SLACK = 1e-12


class IfsParams:
    """Derived constants of the two-map quarter-turn IFS at scale alpha."""

    def __init__(self, alpha):
        alpha = float(alpha)
        if not (ALPHA_MIN < alpha < ALPHA_MAX):
            raise ValueError(
                "alpha must lie in the open interval (1/2, 1/sqrt(2)); got %g" % alpha
            )
        self.alpha = alpha
        self.eps = 1.0 / (4.0 * alpha) - 1.0 / (2.0 * SQRT2)
        self.delta = 0.25 - alpha / (2.0 * SQRT2)
        self.gamma = 1.0 - self.delta
        self.h = -np.log(2.0) / np.log(alpha)

    def __repr__(self):
        return "IfsParams(alpha=%r)" % self.alpha


def derive_constants(alpha):
    return IfsParams(alpha)


def alpha_for_dimension(h):
    """Scale whose similarity dimension -log2/log(alpha) equals h."""
    h = float(h)
    if not (1.0 < h < 2.0):
        raise ValueError("dimension must lie in the open interval (1, 2); got %g" % h)
    return 2.0 ** (-1.0 / h)


# quarter-turn powers as 2x2 matrices, R = [[0,-1],[1,0]]
ROT = [
    np.array([[1.0, 0.0], [0.0, 1.0]]),
    np.array([[0.0, -1.0], [1.0, 0.0]]),
    np.array([[-1.0, 0.0], [0.0, -1.0]]),
    np.array([[0.0, 1.0], [-1.0, 0.0]]),
]


class AffineSimilarity:
    """x -> translation + scale * R^rotation_power * x."""

    def __init__(self, translation, rotation_power=0, scale=1.0):
        self.translation = np.asarray(translation, dtype=float).reshape(2)
        self.rotation_power = int(rotation_power) % 4
        self.scale = float(scale)

    @staticmethod
    def identity():
        return AffineSimilarity((0.0, 0.0), 0, 1.0)

    @property
    def matrix(self):
        return self.scale * ROT[self.rotation_power]

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        return self.translation + x @ self.matrix.T

    def compose(self, other):
        """self o other."""
        return AffineSimilarity(
            self(other.translation),
            self.rotation_power + other.rotation_power,
            self.scale * other.scale,
        )

    def inverse(self):
        inv_scale = 1.0 / self.scale
        inv_rot = (-self.rotation_power) % 4
        inv_tr = -inv_scale * (ROT[inv_rot] @ self.translation)
        return AffineSimilarity(inv_tr, inv_rot, inv_scale)

    def rect_image(self, rect):
        """Image of an axis-aligned rectangle; exact since R^k permutes axes."""
        c = self(rect.center)
        hw = self.scale * np.abs(ROT[self.rotation_power] @ rect.half)
        return Rect(c, hw)

    def __repr__(self):
        return "AffineSimilarity(%s, rot=%d, scale=%g)" % (
            self.translation.tolist(),
            self.rotation_power,
            self.scale,
        )


class Rect:
    """Closed axis-aligned rectangle given by center and positive half-widths."""

    def __init__(self, center, half):
        self.center = np.asarray(center, dtype=float).reshape(2)
        self.half = np.asarray(half, dtype=float).reshape(2)
        if np.any(self.half <= 0.0):
            raise ValueError("half-widths must be positive")

    @staticmethod
    def standard(xi):
        """R_xi = [-2-xi, 2+xi] x [-sqrt2-xi, sqrt2+xi]."""
        return Rect((0.0, 0.0), (2.0 + xi, SQRT2 + xi))

    @property
    def lo(self):
        return self.center - self.half

    @property
    def hi(self):
        return self.center + self.half

    def contains_point(self, x, slack=GEOM_SLACK):
        x = np.asarray(x, dtype=float)
        return np.all((x >= self.lo - slack) & (x <= self.hi + slack), axis=-1)

    def contains_rect(self, other, slack=GEOM_SLACK):
        return bool(
            np.all(other.lo >= self.lo - slack) and np.all(other.hi <= self.hi + slack)
        )

    def overlaps(self, other, slack=GEOM_SLACK):
        """True if the closed rectangles intersect with margin beyond slack."""
        return bool(
            np.all(self.lo <= other.hi - slack) and np.all(other.lo <= self.hi - slack)
        )

    def __repr__(self):
        return "Rect(lo=%s, hi=%s)" % (self.lo.tolist(), self.hi.tolist())


def word_map(word, eta_integral, alpha):
    """Affine similarity for the word at a given elapsed drift.

    With c(t) = 1 - int_0^t eta, the one-letter maps are
    F1: x -> ( c, 0) + alpha R x  and  F2: x -> (-c, 0) + alpha R x.
    Compositions follow the translation rule
    F_w^t(y) = F_w^0(y) - F_w^0(0) * int_0^t eta.
    """
    params = derive_constants(alpha)
    if not (-1e-15 <= eta_integral <= params.delta + 1e-12):
        raise ValueError("eta_integral must lie in [0, delta]")
    c = 1.0 - float(eta_integral)
    m = AffineSimilarity.identity()
    for letter in word:
        if letter == 1 or letter == "1":
            step = AffineSimilarity((c, 0.0), 1, alpha)
        elif letter == 2 or letter == "2":
            step = AffineSimilarity((-c, 0.0), 1, alpha)
        else:
            raise ValueError("word letters must be 1 or 2")
        m = m.compose(step)
    return m


def all_words(depth):
    """All words of length exactly depth, in lexicographic order."""
    if depth == 0:
        return [()]
    out = []
    for w in all_words(depth - 1):
        out.append(w + (1,))
        out.append(w + (2,))
    return out


class FractalApprox:
    """Finite-depth attractor approximation: segments F_w(I), |w| <= depth."""

    def __init__(self, alpha, depth, words, endpoints_a, endpoints_b):
        self.alpha = alpha
        self.depth = depth
        self.words = words
        self.a = np.asarray(endpoints_a, dtype=float)
        self.b = np.asarray(endpoints_b, dtype=float)

    def __len__(self):
        return len(self.words)

    def sample_points(self, per_segment=8):
        """Uniform samples along every segment, concatenated."""
        s = np.linspace(0.0, 1.0, per_segment)[:, None]
        pts = self.a[:, None, :] * (1.0 - s) + self.b[:, None, :] * s
        return pts.reshape(-1, 2)

    def to_json(self):
        return json.dumps(
            {
                "alpha": self.alpha,
                "depth": self.depth,
                "segments": [
                    {
                        "word": "".join(str(l) for l in w),
                        "a": a.tolist(),
                        "b": b.tolist(),
                    }
                    for w, a, b in zip(self.words, self.a, self.b)
                ],
            },
            indent=1,
        )

    def to_csv(self):
        lines = ["word,ax,ay,bx,by"]
        for w, a, b in zip(self.words, self.a, self.b):
            lines.append(
                "%s,%r,%r,%r,%r"
                % ("".join(str(l) for l in w), a[0], a[1], b[0], b[1])
            )
        return "\n".join(lines) + "\n"


def attractor_approx(params, depth):
    """Segments {F_w(I) : |w| <= depth} at the static (t=0) maps."""
    if depth < 0:
        raise ValueError("depth must be >= 0")
    if 1 << (depth + 1) > 2 * WORD_CAP:
        raise ResourceWarning("depth %d exceeds the 2^20 image cap" % depth)
    words = []
    for k in range(depth + 1):
        words.extend(all_words(k))
    e1 = np.array([1.0, 0.0])
    a_pts = np.empty((len(words), 2))
    b_pts = np.empty((len(words), 2))
    for i, w in enumerate(words):
        m = word_map(w, 0.0, params.alpha)
        a_pts[i] = m(-e1)
        b_pts[i] = m(e1)
    return FractalApprox(params.alpha, depth, words, a_pts, b_pts)


def _border_rects(params):
    """The border set closure(R_eps \\ (R_0 n (H+^delta u H-^delta))) as five
    closed axis-aligned rectangles: the middle strip, the two side margins of
    R_eps beyond R_0, and the top and bottom bands."""
    eps, delta = params.eps, params.delta
    x_out = 2.0 + eps
    y_out = SQRT2 + eps
    mid = Rect((0.0, 0.0), (delta, y_out))
    left = Rect((-(2.0 + eps / 2.0), 0.0), (eps / 2.0, y_out))
    right = Rect((2.0 + eps / 2.0, 0.0), (eps / 2.0, y_out))
    top = Rect((0.0, SQRT2 + eps / 2.0), (x_out, eps / 2.0))
    bot = Rect((0.0, -(SQRT2 + eps / 2.0)), (x_out, eps / 2.0))
    return [mid, left, right, top, bot]


class SeparationReport:
    def __init__(self, alpha, depth, violations, halfspace_left_edges):
        self.alpha = alpha
        self.depth = depth
        self.violations = violations
        self.halfspace_left_edges = halfspace_left_edges

    @property
    def ok(self):
        return not self.violations

    def to_json(self):
        return json.dumps(
            {
                "alpha": self.alpha,
                "depth": self.depth,
                "pass": self.ok,
                "violations": self.violations,
                "F1_R0_left_edge": self.halfspace_left_edges,
            },
            indent=1,
        )


def separation_check(params, depth, eta_integral=0.0):
    """Verify the half-space inclusions and pairwise disjointness of the
    word images of the border set, up to the given depth.

    F1(R_0) must sit in {x1 >= 4 delta}, F2(R_0) in {x1 <= -4 delta}; the
    border-set images under distinct words must be pairwise disjoint.  All
    images are finite unions of axis-aligned rectangles, so every check is
    interval arithmetic.
    """
    if depth < 1:
        raise ValueError("depth must be >= 1")
    violations = []
    r0 = Rect.standard(0.0)
    f1 = word_map((1,), eta_integral, params.alpha)
    f2 = word_map((2,), eta_integral, params.alpha)
    img1 = f1.rect_image(r0)
    img2 = f2.rect_image(r0)
    edge = 4.0 * params.delta
    if img1.lo[0] < edge - GEOM_SLACK:
        violations.append(
            {"check": "halfspace", "word": "1", "left_edge": float(img1.lo[0])}
        )
    if img2.hi[0] > -edge + GEOM_SLACK:
        violations.append(
            {"check": "halfspace", "word": "2", "right_edge": float(img2.hi[0])}
        )

    border = _border_rects(params)
    words = []
    for k in range(depth + 1):
        words.extend(all_words(k))
    images = []
    for w in words:
        m = word_map(w, eta_integral, params.alpha)
        images.append([m.rect_image(r) for r in border])
    for i in range(len(words)):
        for j in range(i + 1, len(words)):
            for ra in images[i]:
                for rb in images[j]:
                    if ra.overlaps(rb):
                        violations.append(
                            {
                                "check": "border-disjoint",
                                "pair": [
                                    "".join(str(l) for l in words[i]) or "-",
                                    "".join(str(l) for l in words[j]) or "-",
                                ],
                            }
                        )
                        break
                else:
                    continue
                break
    return SeparationReport(
        params.alpha, depth, violations, [float(img1.lo[0]), float(img2.hi[0])]
    )


def locate_chain(x, eta_integral, params, max_depth):
    """Per level k, the unique word with x in F_w^t(R_eps); tree descent.

    The chain starts with the empty word when x is in R_eps at all and stops
    at the first level with no containing child.  Same-length images of R_eps
    are pairwise disjoint, so at most one branch survives per level.
    """
    x = np.asarray(x, dtype=float)
    r_eps = Rect.standard(params.eps)
    if not r_eps.contains_point(x):
        return []
    chain = [()]
    alpha = params.alpha
    c = 1.0 - float(eta_integral)
    y = x.copy()
    word = ()
    for _ in range(max_depth):
        found = False
        for letter, sign in ((1, 1.0), (2, -1.0)):
            # child-local coordinates: y' = R^-1 (y - (sign*c, 0)) / alpha
            dx = y[0] - sign * c
            dy = y[1]
            yp = np.array([dy, -dx]) / alpha
            if r_eps.contains_point(yp):
                word = word + (letter,)
                chain.append(word)
                y = yp
                found = True
                break
        if not found:
            break
    return chain
