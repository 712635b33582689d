"""Non-smooth variants: cones over balls, support functions plus polytope
indicators, and finite-valued piecewise-linear functions."""

import numpy as np
from scipy.optimize import linprog

from ..densities import unit_ball_volume
from ..errors import DomainError, PreconditionError
from .base import ConvexFunction, as_points, radial_values, register, vec
from .polytope import Polytope, polyhedron_volume

KINK_TOL = 1e-9


def _dom_tol(scale):
    return 1e-12 * max(1.0, scale)


# --------------------------------------------------------------------------
# cone over a ball and its conjugate
# --------------------------------------------------------------------------

@register
class ConeBall(ConvexFunction):
    """``u(x) = t |x - center| + offset`` on the ball ``|x - center| <= R``."""

    tag = "cone_ball"

    def __init__(self, t, R, n=None, center=None, offset=0.0):
        if center is None and n is None:
            raise PreconditionError("give n or center")
        self.center = np.zeros(n) if center is None else vec(center)
        self.n = self.center.size
        self.t = float(t)
        self.R = float(R)
        self.offset = float(offset)
        if self.t < 0 or not self.R > 0:
            raise PreconditionError("ConeBall needs t >= 0 and R > 0")

    def _r(self, x):
        x, single = as_points(x, self.n)
        d = x - self.center
        return d, np.linalg.norm(d, axis=1), single

    def evaluate(self, x):
        _d, r, single = self._r(x)
        out = np.where(r <= self.R * (1 + 1e-12), self.t * r + self.offset, np.inf)
        return out[0] if single else out

    def gradient(self, x):
        d, r, _ = self._r(x)
        g = np.full(d.shape, np.nan)
        ok = r > KINK_TOL if self.t > 0 else np.ones(r.shape, bool)
        ok &= r < self.R
        g[ok] = self.t * d[ok] / np.where(r[ok] > 0, r[ok], 1.0)[:, None]
        return g

    def hessian(self, x):
        d, r, _ = self._r(x)
        out = np.full((r.size, self.n, self.n), np.nan)
        ok = (r > KINK_TOL) & (r < self.R)
        u = d[ok] / r[ok, None]
        uu = u[:, :, None] * u[:, None, :]
        out[ok] = (self.t / r[ok])[:, None, None] * (np.eye(self.n) - uu)
        return out

    def domain_box(self):
        return self.center - self.R, self.center + self.R

    def legendre(self):
        return RadialHinge(self.t, self.R, linear=self.center, offset=-self.offset)

    def epi_mult(self, lam):
        if not lam > 0:
            raise DomainError(f"epi-multiplication needs lambda > 0, got {lam}")
        return ConeBall(self.t, lam * self.R, center=lam * self.center, offset=lam * self.offset)

    def project(self, E):
        if E.n != self.n:
            raise DomainError(f"subspace lives in R^{E.n}, function in R^{self.n}")
        # the fibre minimum of t|x_E + z - c| sits at z = c_perp
        return ConeBall(self.t, self.R, center=E.frame.T @ self.center, offset=self.offset)

    def gradient_integral(self, beta, points=None, box=None):
        if box is not None:
            return super().gradient_integral(beta, points, box)
        # |grad u| = t almost everywhere on the ball
        return float(unit_ball_volume(self.n) * self.R ** self.n
                     * radial_values(beta, np.array([self.t]))[0])

    def to_dict(self):
        return {"tag": self.tag, "t": self.t, "R": self.R, "center": self.center.tolist(),
                "offset": self.offset}

    @classmethod
    def from_dict(cls, d):
        return cls(d["t"], d["R"], center=d["center"], offset=d.get("offset", 0.0))


@register
class RadialHinge(ConvexFunction):
    """``y -> R max(0, |y| - t) + <linear, y> + offset``."""

    tag = "radial_hinge"
    super_coercive = False

    def __init__(self, t, R, n=None, linear=None, offset=0.0):
        self.linear = np.zeros(n) if linear is None else vec(linear)
        self.n = self.linear.size
        self.t, self.R, self.offset = float(t), float(R), float(offset)

    def evaluate(self, y):
        y, single = as_points(y, self.n)
        r = np.linalg.norm(y, axis=1)
        out = self.R * np.maximum(r - self.t, 0.0) + y @ self.linear + self.offset
        return out[0] if single else out

    def gradient(self, y):
        y, _ = as_points(y, self.n)
        r = np.linalg.norm(y, axis=1)
        g = np.zeros_like(y)
        out = r > self.t + KINK_TOL
        g[out] = self.R * y[out] / r[out, None]
        g[np.abs(r - self.t) <= KINK_TOL] = np.nan
        return g + self.linear

    def legendre(self):
        return ConeBall(self.t, self.R, center=self.linear, offset=-self.offset)

    def to_dict(self):
        return {"tag": self.tag, "t": self.t, "R": self.R, "linear": self.linear.tolist(),
                "offset": self.offset}

    @classmethod
    def from_dict(cls, d):
        return cls(d["t"], d["R"], linear=d["linear"], offset=d.get("offset", 0.0))


# --------------------------------------------------------------------------
# support function plus indicator
# --------------------------------------------------------------------------

@register
class SupportPlusIndicator(ConvexFunction):
    """``h_P + I_Q``; ``Q = None`` stands for the whole space."""

    tag = "support_plus_indicator"

    def __init__(self, P, Q=None):
        self.P = P if isinstance(P, Polytope) else Polytope(P)
        self.Q = Q if (Q is None or isinstance(Q, Polytope)) else Polytope(Q)
        self.n = self.P.n
        if self.Q is not None and self.Q.n != self.n:
            raise DomainError("P and Q live in different dimensions")
        self.super_coercive = self.Q is not None
        self._hs = self.Q.halfspaces() if self.Q is not None and self.Q.dim == self.n else None

    @classmethod
    def indicator(cls, Q):
        Q = Q if isinstance(Q, Polytope) else Polytope(Q)
        return cls(Polytope.point(np.zeros(Q.n)), Q)

    @property
    def is_indicator(self):
        return self.P.vertices.shape[0] == 1 and not np.any(self.P.vertices)

    def in_domain(self, x):
        if self.Q is None:
            return np.ones(x.shape[0], bool)
        if self._hs is not None:
            A, b = self._hs
            return np.all(x @ A.T <= b + _dom_tol(np.abs(b).max()), axis=1)
        return self.Q.contains(x, tol=1e-12)

    def evaluate(self, x):
        x, single = as_points(x, self.n)
        out = np.where(self.in_domain(x), self.P.support(x), np.inf)
        return out[0] if single else out

    def gradient(self, x):
        x, _ = as_points(x, self.n)
        vals = x @ self.P.vertices.T
        top = vals.max(axis=1)
        ties = np.sum(vals >= top[:, None] - KINK_TOL * np.maximum(1.0, np.abs(top))[:, None],
                      axis=1)
        g = self.P.vertices[np.argmax(vals, axis=1)].copy()
        g[ties > 1] = np.nan
        if self._hs is not None:
            A, b = self._hs
            interior = np.all(x @ A.T < b - KINK_TOL, axis=1)
            g[~interior] = np.nan
        return g

    def hessian(self, x):
        x, _ = as_points(x, self.n)
        return np.zeros((x.shape[0], self.n, self.n))

    def domain_box(self):
        if self.Q is None:
            return None
        return self.Q.vertices.min(axis=0), self.Q.vertices.max(axis=0)

    def normal_cone_cells(self):
        """``[(v, vol(Q cap N_P(v)))]`` over the vertices ``v`` of ``P``."""
        if self.Q is None:
            raise PreconditionError("cells are only bounded when Q is a polytope")
        V = self.P.vertices
        if self.Q.dim < self.n:
            return [(v, 0.0) for v in V]
        if V.shape[0] == 1:
            return [(V[0], self.Q.volume())]
        out = []
        for i, v in enumerate(V):
            others = np.delete(V, i, axis=0)
            cone = (others - v, np.zeros(others.shape[0]))
            out.append((v, polyhedron_volume([cone, self._hs], self.n)))
        return out

    def gradient_integral(self, beta, points=None, box=None):
        if box is not None:
            return super().gradient_integral(beta, points, box)
        total = 0.0
        for v, vol in self.normal_cone_cells():
            if vol > 0:
                total += vol * float(radial_values(beta, np.array([np.linalg.norm(v)]))[0])
        return total

    def legendre(self):
        from .composite import EpiSumComposite, Transformed
        if self.Q is None:
            return SupportPlusIndicator.indicator(self.P)
        if self.P.vertices.shape[0] == 1:
            p = self.P.vertices[0]
            cube = Polytope.cube(self.n)
            if self.Q.same_as(cube):
                return PiecewiseLinearSum(p)
            if not np.any(p):
                return SupportPlusIndicator(self.Q, None)
            # (<p, .> + I_Q)* = h_Q(. - p)
            return Transformed(SupportPlusIndicator(self.Q, None), np.eye(self.n), p)
        # (h_P + I_Q)* = I_P box h_Q
        return EpiSumComposite([SupportPlusIndicator.indicator(self.P),
                                SupportPlusIndicator(self.Q, None)])

    def conjugate_at(self, y):
        """``sup_{x in Q} <x, y> - h_P(x)`` by linear programming."""
        y, single = as_points(y, self.n)
        if self.Q is None or self._hs is None:
            raise PreconditionError("LP conjugate needs a full-dimensional Q")
        A, b = self._hs
        V = self.P.vertices
        out = np.empty(y.shape[0])
        # variables (x, s): maximise <x, y> - s with <x, v> <= s, A x <= b
        A_ub = np.vstack([np.c_[V, -np.ones(V.shape[0])], np.c_[A, np.zeros(A.shape[0])]])
        b_ub = np.r_[np.zeros(V.shape[0]), b]
        for i, yi in enumerate(y):
            res = linprog(np.r_[-yi, 1.0], A_ub=A_ub, b_ub=b_ub,
                          bounds=[(None, None)] * (self.n + 1), method="highs")
            out[i] = -res.fun
        return out[0] if single else out

    def epi_mult(self, lam):
        if not lam > 0:
            raise DomainError(f"epi-multiplication needs lambda > 0, got {lam}")
        return SupportPlusIndicator(self.P, None if self.Q is None else self.Q.scale(lam))

    def project(self, E):
        if E.n != self.n:
            raise DomainError(f"subspace lives in R^{E.n}, function in R^{self.n}")
        F = E.frame
        V = self.P.vertices
        if np.abs(V - (V @ F) @ F.T).max() <= 1e-12:
            # h_P depends on x_E only, so the fibre problem is feasibility in Q
            Q = None if self.Q is None else self.Q.linear_image(F.T)
            return SupportPlusIndicator(Polytope(V @ F), Q)
        from .composite import PolyhedralProjection
        return PolyhedralProjection(self, E)

    def to_dict(self):
        return {"tag": self.tag, "P": self.P.to_dict(),
                "Q": None if self.Q is None else self.Q.to_dict()}

    @classmethod
    def from_dict(cls, d):
        return cls(Polytope.from_dict(d["P"]),
                   None if d.get("Q") is None else Polytope.from_dict(d["Q"]))


# --------------------------------------------------------------------------
# finite-valued piecewise linear
# --------------------------------------------------------------------------

@register
class PiecewiseLinearSum(ConvexFunction):
    """``v(x) = 1/2 sum_i |x_i - anchor_i|``."""

    tag = "piecewise_linear_sum"
    super_coercive = False

    def __init__(self, anchors):
        self.anchors = vec(anchors)
        self.n = self.anchors.size

    def evaluate(self, x):
        x, single = as_points(x, self.n)
        out = 0.5 * np.sum(np.abs(x - self.anchors), axis=1)
        return out[0] if single else out

    def gradient(self, x):
        x, _ = as_points(x, self.n)
        d = x - self.anchors
        g = 0.5 * np.sign(d)
        g[np.any(np.abs(d) <= KINK_TOL, axis=1)] = np.nan
        return g

    def hessian(self, x):
        x, _ = as_points(x, self.n)
        return np.zeros((x.shape[0], self.n, self.n))

    def legendre(self):
        return SupportPlusIndicator(Polytope.point(self.anchors), Polytope.cube(self.n))

    def epi_mult(self, lam):
        if not lam > 0:
            raise DomainError(f"epi-multiplication needs lambda > 0, got {lam}")
        return PiecewiseLinearSum(lam * self.anchors)

    def vertices(self):
        """Points where ``n`` independent kinks meet (here only the anchor)."""
        return self.anchors[None, :]

    def to_dict(self):
        return {"tag": self.tag, "anchors": self.anchors.tolist()}

    @classmethod
    def from_dict(cls, d):
        return cls(d["anchors"])


@register
class MaxAffine(ConvexFunction):
    """``v(x) = max_i <a_i, x> + b_i`` (finite-valued piecewise linear)."""

    tag = "max_affine"
    super_coercive = False

    def __init__(self, slopes, intercepts=None):
        self.slopes = np.atleast_2d(np.asarray(slopes, dtype=float))
        self.n = self.slopes.shape[1]
        m = self.slopes.shape[0]
        self.intercepts = np.zeros(m) if intercepts is None else vec(intercepts, m)

    def _vals(self, x):
        return x @ self.slopes.T + self.intercepts

    def evaluate(self, x):
        x, single = as_points(x, self.n)
        out = self._vals(x).max(axis=1)
        return out[0] if single else out

    def gradient(self, x):
        x, _ = as_points(x, self.n)
        vals = self._vals(x)
        top = vals.max(axis=1, keepdims=True)
        ties = np.sum(vals >= top - KINK_TOL, axis=1)
        g = self.slopes[np.argmax(vals, axis=1)].copy()
        g[ties > 1] = np.nan
        return g

    def hessian(self, x):
        x, _ = as_points(x, self.n)
        return np.zeros((x.shape[0], self.n, self.n))

    def active(self, x, tol=KINK_TOL):
        vals = self._vals(np.atleast_2d(x))[0]
        return np.nonzero(vals >= vals.max() - tol * max(1.0, abs(vals.max())))[0]

    def vertices(self):
        """Points where ``n + 1`` affinely independent pieces are active."""
        import itertools
        m, n = self.slopes.shape
        found = []
        for idx in itertools.combinations(range(m), n + 1):
            a = self.slopes[list(idx)]
            b = self.intercepts[list(idx)]
            # <a_i - a_0, x> = b_0 - b_i
            M = a[1:] - a[0]
            if abs(np.linalg.det(M)) < 1e-12:
                continue
            x = np.linalg.solve(M, b[0] - b[1:])
            val = a[0] @ x + b[0]
            if self.evaluate(x) <= val + 1e-10 * max(1.0, abs(val)):
                if not any(np.allclose(x, y, atol=1e-10) for y in found):
                    found.append(x)
        return np.array(found).reshape(-1, n)

    def legendre(self):
        return MaxAffineConjugate(self)

    def to_dict(self):
        return {"tag": self.tag, "slopes": self.slopes.tolist(),
                "intercepts": self.intercepts.tolist()}

    @classmethod
    def from_dict(cls, d):
        return cls(d["slopes"], d["intercepts"])


@register
class MaxAffineConjugate(ConvexFunction):
    """``v*(y) = min { -sum l_i b_i : sum l_i a_i = y, l in simplex }``."""

    tag = "max_affine_conjugate"

    def __init__(self, base):
        self.base = base if isinstance(base, MaxAffine) else MaxAffine.from_dict(base)
        self.n = self.base.n

    def evaluate(self, y):
        y, single = as_points(y, self.n)
        a, b = self.base.slopes, self.base.intercepts
        m = a.shape[0]
        out = np.empty(y.shape[0])
        for i, yi in enumerate(y):
            res = linprog(-b, A_eq=np.vstack([a.T, np.ones(m)]), b_eq=np.r_[yi, 1.0],
                          bounds=[(0, None)] * m, method="highs")
            out[i] = res.fun if res.status == 0 else np.inf
        return out[0] if single else out

    def domain_box(self):
        a = self.base.slopes
        return a.min(axis=0), a.max(axis=0)

    def legendre(self):
        return self.base

    def to_dict(self):
        return {"tag": self.tag, "base": self.base.to_dict()}

    @classmethod
    def from_dict(cls, d):
        return cls(MaxAffine.from_dict(d["base"]))
