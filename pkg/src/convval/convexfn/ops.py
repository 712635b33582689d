"""Operations on convex functions: conjugation, epi-sum, epi-multiplication,
projection, lattice operations and polyhedral subdifferentials."""

from dataclasses import dataclass

import numpy as np

from ..errors import DomainError, PreconditionError
from ..rng import stream_for
from .base import vec
from .composite import EpiSumComposite, PointwiseMax, PointwiseMin, Transformed
from .polyhedral import ConeBall, PiecewiseLinearSum, SupportPlusIndicator
from .polytope import Polytope
from .smooth import Quadratic, RampQuadratic

LATTICE_SEGMENTS = 10_000
LATTICE_TOL = 1e-9


def legendre(u):
    """The convex conjugate ``u*``."""
    return u.legendre()


def epi_mult(lam, u):
    """``lam . u = x -> lam u(x / lam)``."""
    if not lam > 0:
        raise DomainError(f"epi-multiplication needs lambda > 0, got {lam}")
    if lam == 1:
        return u
    return u.epi_mult(lam)


def project(u, E):
    """``proj_E u(x_E) = min_{z in E^perp} u(x_E + z)`` in the coordinates of ``E``."""
    return u.project(E)


def _point_indicator(u):
    """The point ``q`` if ``u = I_{q}``, else ``None``."""
    if isinstance(u, SupportPlusIndicator) and u.is_indicator and u.Q is not None \
            and u.Q.vertices.shape[0] == 1:
        return u.Q.vertices[0]
    return None


def epi_sum(u1, u2):
    """Infimal convolution ``u1 box u2``, reduced to a closed form when possible."""
    if u1.n != u2.n:
        raise DomainError("epi-sum operands live in different dimensions")
    for a, b in ((u1, u2), (u2, u1)):
        q = _point_indicator(b)
        if q is not None:
            return a if not np.any(q) else Transformed(a, None, q)
    if isinstance(u1, Quadratic) and isinstance(u2, Quadratic):
        return _add_conj(u1, u2)
    if isinstance(u1, SupportPlusIndicator) and isinstance(u2, SupportPlusIndicator) \
            and u1.is_indicator and u2.is_indicator and u1.Q is not None and u2.Q is not None:
        return SupportPlusIndicator.indicator(u1.Q.minkowski_sum(u2.Q))
    if isinstance(u1, ConeBall) and isinstance(u2, ConeBall) and u1.t == u2.t:
        return ConeBall(u1.t, u1.R + u2.R, center=u1.center + u2.center,
                        offset=u1.offset + u2.offset)
    return EpiSumComposite([u1, u2])


def _add_conj(u1, u2):
    from .composite import add_functions
    return add_functions(u1.legendre(), u2.legendre()).legendre()


# --------------------------------------------------------------------------
# lattice
# --------------------------------------------------------------------------

@dataclass(frozen=True)
class Rejected:
    """Marker returned in place of ``u ^ v`` when the minimum is not convex."""

    reason: str

    def __bool__(self):
        return False


def _sample_box(u, v, box):
    if box is not None:
        return vec(box[0]), vec(box[1])
    bu, bv = u.domain_box(), v.domain_box()
    if bu is None and bv is None:
        return -2.0 * np.ones(u.n), 2.0 * np.ones(u.n)
    if bu is None or bv is None:
        b = bu or bv
        return b
    return np.minimum(bu[0], bv[0]), np.maximum(bu[1], bv[1])


def midpoint_convexity_test(f, box, segments=LATTICE_SEGMENTS, tol=LATTICE_TOL, seed=0):
    """Sampled midpoint test of ``f`` on random segments with finite endpoints.

    Returns ``(passed, worst_violation, tested_segments)``.
    """
    lo, hi = box
    g = stream_for(seed, "lattice")
    a = lo + (hi - lo) * g.random((segments, lo.size))
    b = lo + (hi - lo) * g.random((segments, lo.size))
    fa, fb = f._eval(a), f._eval(b)
    ok = np.isfinite(fa) & np.isfinite(fb)
    if not np.any(ok):
        return True, 0.0, 0
    fm = f._eval(0.5 * (a[ok] + b[ok]))
    excess = fm - 0.5 * (fa[ok] + fb[ok])
    worst = float(np.max(np.where(np.isfinite(excess), excess, np.inf)))
    return worst <= tol, worst, int(ok.sum())


def _complementary_ramps(u, v):
    return (isinstance(u, RampQuadratic) and isinstance(v, RampQuadratic)
            and np.allclose(u.w, -v.w, rtol=0, atol=1e-14) and u.shift == -v.shift
            and u.a == v.a and u.base.key() == v.base.key())


def lattice_ops(u, v, box=None, segments=LATTICE_SEGMENTS, tol=LATTICE_TOL, seed=0):
    """Return ``(u v v, u ^ v)``; the minimum is a :class:`Rejected` marker
    unless it passes the sampled midpoint-convexity test."""
    if u.n != v.n:
        raise DomainError("lattice operands live in different dimensions")
    if u is v or u.key() == v.key():
        return u, u
    if isinstance(u, SupportPlusIndicator) and isinstance(v, SupportPlusIndicator) \
            and u.Q is not None and v.Q is not None and u.P.same_as(v.P) \
            and u.Q.dim == u.n and v.Q.dim == v.n:
        inter = u.Q.intersection(v.Q)
        hull = u.Q.convex_union(v.Q)
        inter_vol = 0.0 if inter is None else inter.volume()
        union_vol = u.Q.volume() + v.Q.volume() - inter_vol
        if inter is None:
            mx = None
        else:
            mx = SupportPlusIndicator(u.P, inter)
        if abs(hull.volume() - union_vol) <= 1e-12 * max(1.0, hull.volume()):
            mn = SupportPlusIndicator(u.P, hull)
        else:
            mn = Rejected("union of the domains is not convex")
        if mx is None:
            # max has a lower-dimensional or empty domain; keep it pointwise
            mx = PointwiseMax(u, v)
        return mx, mn
    if _complementary_ramps(u, v):
        return u.full(), u.base
    mx = PointwiseMax(u, v)
    mn = PointwiseMin(u, v)
    passed, worst, _count = midpoint_convexity_test(mn, _sample_box(u, v, box), segments, tol, seed)
    if not passed:
        return mx, Rejected(f"midpoint convexity violated by {worst:.3g}")
    return mx, mn


# --------------------------------------------------------------------------
# subdifferentials of polyhedral functions
# --------------------------------------------------------------------------

def subdifferential_pl(u, x, tol=1e-12):
    """Vertex description of ``du(x)`` for polyhedral ``u``.

    For ``h_P + I_Q`` the result is the face of ``P`` exposed by ``x`` plus
    the normal cone of ``Q`` at ``x`` (returned as rays).
    """
    x = vec(x, u.n)
    if not np.isfinite(u._eval(x)[0]):
        raise DomainError(f"x={x.tolist()} lies outside dom u")
    if isinstance(u, PiecewiseLinearSum):
        d = x - u.anchors
        lo = np.where(d > tol, 0.5, -0.5)
        hi = np.where(d < -tol, -0.5, 0.5)
        return Polytope.box(lo, hi)
    if isinstance(u, SupportPlusIndicator):
        face = u.P.face(x, tol=tol)
        rays = None
        if u.Q is not None:
            A, b = u.Q.halfspaces()
            slack = b - A @ x
            active = slack <= tol * max(1.0, float(np.abs(b).max()))
            if np.any(active):
                rays = A[active]
        return Polytope(face.vertices, rays)
    raise PreconditionError(f"subdifferential_pl does not handle {u.tag}")
