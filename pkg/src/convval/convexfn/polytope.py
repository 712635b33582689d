"""Polytopes (vertex descriptions) and orthonormal subspace frames."""

from dataclasses import dataclass, field
import itertools

import numpy as np
from scipy.optimize import linprog
from scipy.spatial import ConvexHull, HalfspaceIntersection, QhullError

from ..errors import DomainError, PreconditionError

FRAME_TOL = 1e-12
_RANK_TOL = 1e-10


def _affine_basis(points):
    """Orthonormal basis of the affine hull of ``points`` (rows)."""
    base = points[0]
    diffs = points - base
    if diffs.shape[0] <= 1 or not np.any(diffs):
        return base, np.zeros((points.shape[1], 0))
    _u, sv, vt = np.linalg.svd(diffs, full_matrices=False)
    scale = max(1.0, float(np.abs(points).max()))
    rank = int(np.sum(sv > _RANK_TOL * scale))
    return base, vt[:rank].T


def _hull_vertices_1d(t):
    return np.array([t.argmin(), t.argmax()]) if t.max() > t.min() else np.array([t.argmin()])


@dataclass(frozen=True, eq=False)
class Polytope:
    """Convex hull of finitely many points, optionally plus a cone of rays.

    Only the vertex description is stored; the facet description and the
    volume are derived on demand.  ``rays`` are used for the unbounded
    subdifferentials returned at boundary points of a domain.
    """

    vertices: np.ndarray
    rays: np.ndarray = field(default=None)

    def __post_init__(self):
        v = np.atleast_2d(np.asarray(self.vertices, dtype=float))
        if v.size == 0:
            raise PreconditionError("a polytope needs at least one vertex")
        object.__setattr__(self, "vertices", _extreme_points(v))
        r = np.zeros((0, v.shape[1])) if self.rays is None else np.atleast_2d(
            np.asarray(self.rays, dtype=float)).reshape(-1, v.shape[1])
        object.__setattr__(self, "rays", r)

    @classmethod
    def box(cls, lo, hi):
        lo = np.atleast_1d(np.asarray(lo, dtype=float))
        hi = np.atleast_1d(np.asarray(hi, dtype=float))
        corners = [np.where(bits, hi, lo) for bits in itertools.product((0, 1), repeat=lo.size)]
        return cls(np.array(corners))

    @classmethod
    def cube(cls, n, half=0.5):
        return cls.box(-half * np.ones(n), half * np.ones(n))

    @classmethod
    def point(cls, x):
        return cls(np.atleast_2d(np.asarray(x, dtype=float)))

    @property
    def n(self):
        return self.vertices.shape[1]

    @property
    def bounded(self):
        return self.rays.shape[0] == 0

    @property
    def dim(self):
        _b, basis = _affine_basis(self.vertices)
        return basis.shape[1]

    def support(self, x):
        """``h_P(x) = max_v <x, v>`` for ``x`` of shape (..., n)."""
        return np.max(np.asarray(x, dtype=float) @ self.vertices.T, axis=-1)

    def face(self, direction, tol=1e-12):
        """Face of ``P`` maximising ``<direction, .>``."""
        vals = self.vertices @ np.asarray(direction, dtype=float)
        top = vals.max()
        keep = vals >= top - tol * max(1.0, abs(top))
        return Polytope(self.vertices[keep])

    def halfspaces(self):
        """``(A, b)`` with ``P = {x : A x <= b}``; ``P`` must be full-dimensional."""
        if self.dim < self.n:
            raise PreconditionError("facet description requires a full-dimensional polytope")
        if self.n == 1:
            lo, hi = self.vertices.min(), self.vertices.max()
            return np.array([[1.0], [-1.0]]), np.array([hi, -lo])
        hull = ConvexHull(self.vertices)
        eq = _unique_rows(hull.equations)
        return eq[:, :-1], -eq[:, -1]

    def volume(self):
        """``n``-dimensional volume (0 for lower-dimensional polytopes)."""
        if self.dim < self.n:
            return 0.0
        if self.n == 1:
            return float(self.vertices.max() - self.vertices.min())
        return float(ConvexHull(self.vertices).volume)

    def contains(self, x, tol=1e-9):
        x = np.atleast_2d(np.asarray(x, dtype=float))
        if self.dim == self.n:
            A, b = self.halfspaces()
            return np.all(x @ A.T <= b + tol, axis=-1)
        return np.array([self._contains_lp(xi, tol) for xi in x])

    def _contains_lp(self, x, tol):
        m = self.vertices.shape[0]
        res = linprog(np.zeros(m), A_eq=np.vstack([self.vertices.T, np.ones(m)]),
                      b_eq=np.append(x, 1.0), bounds=[(0, None)] * m, method="highs")
        return res.status == 0

    def translate(self, t):
        return Polytope(self.vertices + np.asarray(t, dtype=float), self.rays)

    def scale(self, lam):
        return Polytope(lam * self.vertices, self.rays)

    def linear_image(self, M):
        """Image under ``x -> M x`` (``M`` of shape m x n)."""
        M = np.asarray(M, dtype=float)
        return Polytope(self.vertices @ M.T, self.rays @ M.T if self.rays.size else None)

    def minkowski_sum(self, other):
        pts = (self.vertices[:, None, :] + other.vertices[None, :, :]).reshape(-1, self.n)
        return Polytope(pts)

    def convex_union(self, other):
        return Polytope(np.vstack([self.vertices, other.vertices]))

    def intersection(self, other):
        """Intersection of two full-dimensional polytopes, or ``None`` if empty."""
        return intersect_halfspaces([self.halfspaces(), other.halfspaces()], self.n)

    def to_dict(self):
        d = {"vertices": self.vertices.tolist()}
        if self.rays.size:
            d["rays"] = self.rays.tolist()
        return d

    @classmethod
    def from_dict(cls, d):
        return cls(np.asarray(d["vertices"], dtype=float), d.get("rays"))

    def same_as(self, other, tol=1e-12):
        if self.vertices.shape != other.vertices.shape:
            return False
        a = self.vertices[np.lexsort(self.vertices.T[::-1])]
        b = other.vertices[np.lexsort(other.vertices.T[::-1])]
        return bool(np.allclose(a, b, atol=tol, rtol=0))


def _unique_rows(eq, tol=1e-12):
    keep = []
    for row in eq:
        if not any(np.allclose(row, k, atol=tol) for k in keep):
            keep.append(row)
    return np.array(keep)


def _extreme_points(v):
    """Remove duplicate and non-extreme points, keeping a stable order."""
    v = np.unique(v, axis=0) if v.shape[0] > 1 else v
    if v.shape[0] <= 2:
        return v
    base, basis = _affine_basis(v)
    k = basis.shape[1]
    if k == 0:
        return v[:1]
    coords = (v - base) @ basis
    if k == 1:
        return v[_hull_vertices_1d(coords[:, 0])]
    try:
        hull = ConvexHull(coords)
    except QhullError:
        return v
    return v[np.sort(hull.vertices)]


def intersect_halfspaces(systems, n):
    """Polytope ``{x : A_i x <= b_i for all i}``; ``None`` when it has no interior."""
    A = np.vstack([s[0] for s in systems])
    b = np.concatenate([s[1] for s in systems])
    norms = np.linalg.norm(A, axis=1)
    # Chebyshev centre: max r s.t. A x + r |a_i| <= b
    res = linprog(np.r_[np.zeros(n), -1.0], A_ub=np.c_[A, norms], b_ub=b,
                  bounds=[(None, None)] * n + [(0, None)], method="highs")
    if res.status != 0 or res.x[-1] <= 1e-12:
        return None
    centre = res.x[:n]
    if n == 1:
        a = A[:, 0]
        hi = min(b[i] / a[i] for i in range(len(a)) if a[i] > 0)
        lo = max(b[i] / a[i] for i in range(len(a)) if a[i] < 0)
        return Polytope(np.array([[lo], [hi]]))
    try:
        hs = HalfspaceIntersection(np.c_[A, -b], centre)
    except QhullError:
        return None
    return Polytope(hs.intersections)


def polyhedron_volume(systems, n):
    p = intersect_halfspaces(systems, n)
    return 0.0 if p is None else p.volume()


@dataclass(frozen=True, eq=False)
class Subspace:
    """A ``k``-dimensional linear subspace given by an orthonormal frame."""

    frame: np.ndarray

    def __post_init__(self):
        F = np.asarray(self.frame, dtype=float)
        if F.ndim == 1:
            F = F[:, None]
        object.__setattr__(self, "frame", F)
        err = np.abs(F.T @ F - np.eye(F.shape[1])).max() if F.size else 0.0
        if err > FRAME_TOL:
            raise PreconditionError(f"frame is not orthonormal (error {err:.3g})")

    @classmethod
    def coordinate(cls, n, axes):
        return cls(np.eye(n)[:, list(axes)])

    @classmethod
    def from_span(cls, vectors):
        """Orthonormalise the columns of ``vectors``."""
        q, r = np.linalg.qr(np.asarray(vectors, dtype=float))
        return cls(q * np.sign(np.where(np.diag(r) == 0, 1.0, np.diag(r))))

    @property
    def n(self):
        return self.frame.shape[0]

    @property
    def k(self):
        return self.frame.shape[1]

    def complement(self):
        """An orthonormal frame of the orthogonal complement."""
        n, k = self.frame.shape
        if k == n:
            return Subspace(np.zeros((n, 0)))
        u, _s, _vt = np.linalg.svd(self.frame, full_matrices=True)
        comp = u[:, k:]
        # Gram-Schmidt once more for exact orthogonality
        comp = comp - self.frame @ (self.frame.T @ comp)
        q, _r = np.linalg.qr(comp)
        return Subspace(q)

    def coords(self, x):
        """Coordinates of the orthogonal projection of ``x`` onto the frame."""
        return np.asarray(x, dtype=float) @ self.frame

    def embed(self, s):
        return np.asarray(s, dtype=float) @ self.frame.T

    def projector(self):
        return self.frame @ self.frame.T

    def to_dict(self):
        return {"frame": self.frame.tolist()}


def check_dimension(n, x):
    x = np.asarray(x, dtype=float)
    if x.shape[-1] != n:
        raise DomainError(f"expected points in R^{n}, got trailing dimension {x.shape[-1]}")
    return x
