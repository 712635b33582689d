"""Property harness: valuation identity, invariances, homogeneity, simplicity."""

from dataclasses import dataclass, field

import numpy as np

from .convexfn import (Embedded, Polytope, Quadratic, RampQuadratic, SmoothRadial,
                       SupportPlusIndicator, Transformed, epi_mult, lattice_ops)
from .convexfn.ops import Rejected
from .rng import stream_for
from .valuations import KubotaConfig, fiv_direct, fiv_kubota, fiv_measure

LAMBDAS = (0.5, 1.0, 2.0, 3.0)


@dataclass(frozen=True)
class Functional:
    """``u -> Z_{j,zeta}(u)`` along one route, as a callable.

    ``j = None`` means the top degree ``j = n`` of whatever ``u`` is passed.
    ``points`` maps the dimension to the midpoint grid size per axis
    (defaults from :mod:`convval.quadrature` where missing).
    """

    route: str
    j: object
    zeta: object
    sample_count: int = 10_000
    seed: int = 0
    jobs: int = 1
    points: tuple = ()

    def grid(self, u):
        return dict(self.points).get(u.n)

    def degree(self, u):
        return u.n if self.j is None else self.j

    def __call__(self, u, box=None):
        j = self.degree(u)
        if self.route == "direct":
            return fiv_direct(u, j, self.zeta, points=self.grid(u), box=box).value
        if self.route == "measure":
            return fiv_measure(u, j, self.zeta, points=self.grid(u), box=box).value
        if self.route == "kubota":
            cfg = KubotaConfig(j, u.n, self.sample_count, self.seed, jobs=self.jobs)
            return fiv_kubota(u, j, self.zeta, cfg).value
        raise ValueError(f"unknown route {self.route!r}")

    def box_for(self, u):
        return u.gradient_box(self.zeta.support_upper)


@dataclass
class AxiomCheck:
    kind: str
    label: str
    lhs: float
    rhs: float
    error: float
    tolerance: float

    @property
    def passed(self):
        return bool(self.error <= self.tolerance)


@dataclass
class AxiomReport:
    checks: list = field(default_factory=list)
    skipped: list = field(default_factory=list)

    @property
    def passed(self):
        return all(c.passed for c in self.checks)

    def failures(self):
        return [c for c in self.checks if not c.passed]

    def count(self, kind):
        return sum(c.kind == kind for c in self.checks)

    def worst(self, kind):
        errs = [c.error for c in self.checks if c.kind == kind]
        return max(errs) if errs else 0.0


def _rel(a, b):
    return abs(a - b) / max(1.0, abs(a), abs(b))


def _union_box(boxes):
    boxes = [b for b in boxes if b is not None]
    return (np.min([b[0] for b in boxes], axis=0), np.max([b[1] for b in boxes], axis=0))


def random_rotation(g, n):
    q, r = np.linalg.qr(g.standard_normal((n, n)))
    q = q * np.where(np.diag(r) < 0, -1.0, 1.0)
    if np.linalg.det(q) < 0:
        q[:, 0] = -q[:, 0]
    return q


def axiom_suite(Z, corpus, pairs=(), flat=(), Z_top=None, translations=10, rotations=10,
                lambdas=LAMBDAS, tol=1e-6, simple_tol=1e-9, seed=0):
    """Run the property checks and collect them in an :class:`AxiomReport`.

    Parameters
    ----------
    Z : Functional
        The valuation under test; ``Z.j`` is its homogeneity degree.
    corpus : list of ConvexFunction
        Functions for the invariance and homogeneity checks.
    pairs : list
        ``(u, v)`` or ``(u, v, functional)`` lattice pairs.  Pairs whose
        minimum is rejected as non-convex are skipped.  All four terms of a
        pair are integrated on one shared box.
    flat : list of ConvexFunction
        Functions whose domain lies in a hyperplane; ``Z_top`` (the ``j = n``
        functional) must vanish on them.
    """
    report = AxiomReport()
    for idx, pair in enumerate(pairs):
        u, v = pair[:2]
        F = pair[2] if len(pair) > 2 else Z
        mx, mn = lattice_ops(u, v)
        if isinstance(mn, Rejected):
            report.skipped.append((f"pair{idx}", mn.reason))
            continue
        box = None
        if F.route == "direct" and F.degree(u) < u.n:
            box = _union_box([F.box_for(w) for w in (u, v, mx, mn)])
        lhs = F(u, box) + F(v, box)
        rhs = F(mx, box) + F(mn, box)
        report.checks.append(AxiomCheck("valuation", f"pair{idx}:{u.tag}", lhs, rhs,
                                        _rel(lhs, rhs), tol))

    g = stream_for(seed, "axioms")
    smooth = [u for u in corpus if u.smooth]
    for k in range(translations):
        u = smooth[k % len(smooth)]
        tau = g.uniform(-1, 1, u.n)
        c = float(g.uniform(-2, 2))
        a, b = Z(u), Z(Transformed(u, None, tau, None, c))
        report.checks.append(AxiomCheck("translation", f"{u.tag}#{k}", a, b, _rel(a, b), tol))
    for k in range(rotations):
        u = smooth[k % len(smooth)]
        a, b = Z(u), Z(Transformed(u, random_rotation(g, u.n)))
        report.checks.append(AxiomCheck("rotation", f"{u.tag}#{k}", a, b, _rel(a, b), tol))
    for u in smooth:
        base = Z(u)
        for lam in lambdas:
            a, b = Z(epi_mult(lam, u)), lam ** Z.degree(u) * base
            report.checks.append(AxiomCheck("homogeneity", f"{u.tag}@{lam}", a, b,
                                            abs(a - b) / max(abs(b), 1e-300), tol))
    if Z_top is not None:
        for u in flat:
            val = Z_top(u)
            report.checks.append(AxiomCheck("simplicity", u.tag, val, 0.0, abs(val), simple_tol))
    return report


# --------------------------------------------------------------------------
# the shipped corpus
# --------------------------------------------------------------------------

def smooth_corpus():
    """Smooth super-coercive functions in n = 2 and 3.

    The 3-D quartic is left out: its composed density is steep enough that
    the 64^3 midpoint grid only resolves rotations to about 2e-5.
    """
    return [
        Quadratic(np.eye(2)),
        Quadratic(np.array([[2.0, 0.3], [0.3, 0.5]]), b=[0.2, -0.1], c=0.4),
        SmoothRadial.power(2, 0.25, 4.0),
        Quadratic(np.diag([1.5, 1.0, 0.75])),
        Quadratic(np.array([[1.2, 0.2, 0.0], [0.2, 0.9, -0.1], [0.0, -0.1, 1.4]]), b=[0.1, 0.0, -0.2]),
    ]


def lattice_pairs(Z_smooth, Z_top):
    """Twelve polyhedral pairs (for ``Z_top``) and eight smooth ramp pairs."""
    out = []
    P = Polytope.cube(2, 0.5)
    boxes = [((-1, -1), (0.5, 1)), ((-0.5, -1), (1, 1)),
             ((0, 0), (1, 1)), ((0, 0.5), (1, 2)),
             ((-1, -1), (1, 0.2)), ((-1, -0.3), (1, 1)),
             ((-2, -1), (1, 1)), ((-1, -1), (2, 1)),
             ((-1, 0), (1, 1)), ((-1, -1), (1, 0.5)),
             ((0, 0), (2, 1)), ((1, 0), (3, 1))]
    for a, b in zip(boxes[::2], boxes[1::2]):
        out.append((SupportPlusIndicator(P, Polytope.box(*a)),
                    SupportPlusIndicator(P, Polytope.box(*b)), Z_top))
    T = Polytope(np.array([[0.0, 0.0], [0.5, 0.0], [0.0, 0.5]]))
    tri = [((-1, -1), (0.3, 1)), ((-0.2, -1), (1, 1)),
           ((-1, -1), (1, 0.1)), ((-1, -0.4), (1, 1)),
           ((-1, -1), (1, 1)), ((0, -1), (2, 1))]
    for a, b in zip(tri[::2], tri[1::2]):
        out.append((SupportPlusIndicator(T, Polytope.box(*a)),
                    SupportPlusIndicator(T, Polytope.box(*b)), Z_top))
    P3 = Polytope.cube(3, 0.5)
    for a, b in [(((-1,) * 3, (0.5, 1, 1)), ((-0.5, -1, -1), (1,) * 3)),
                 (((-1,) * 3, (1, 1, 0)), ((-1, -1, -0.5), (1,) * 3)),
                 (((0,) * 3, (1,) * 3), ((0.5, 0, 0), (2, 1, 1)))]:
        out.append((SupportPlusIndicator(P3, Polytope.box(*a)),
                    SupportPlusIndicator(P3, Polytope.box(*b)), Z_top))
    g = stream_for(0, "ramps")
    for k in range(8):
        n = 2 + (k % 2)
        A = np.eye(n) + 0.2 * np.diag(g.uniform(0, 1, n))
        w = g.standard_normal(n)
        w /= np.linalg.norm(w)
        shift = float(g.uniform(-0.3, 0.3))
        q = Quadratic(A)
        out.append((RampQuadratic(q, w, shift, 0.5), RampQuadratic(q, -w, -shift, 0.5), Z_smooth))
    return out


def flat_corpus():
    """Functions whose domain lies in a hyperplane."""
    e1 = np.array([[1.0], [0.0]])
    plane = np.array([[1.0, 0.0], [0.0, 1.0], [0.0, 0.0]])
    seg = Polytope(np.array([[-1.0, 0.0], [1.0, 0.0]]))
    tri = Polytope(np.array([[0.0, 0.0, 0.0], [1.0, 0.0, 0.0], [0.0, 1.0, 0.0]]))
    return [
        Embedded(Quadratic(np.eye(1)), e1),
        Embedded(Quadratic(np.eye(2)), plane),
        Embedded(SmoothRadial.power(2, 0.25, 4.0), plane, offset=[0.0, 0.0, 0.3]),
        SupportPlusIndicator(Polytope.cube(2, 0.5), seg),
        SupportPlusIndicator(Polytope.cube(3, 0.5), tri),
    ]
