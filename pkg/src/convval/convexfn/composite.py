"""Composite variants: rigid motions, lower-dimensional embeddings, epi-sums,
pointwise combinations and numerically evaluated conjugates/projections."""

import numpy as np
from scipy.optimize import linprog, minimize, minimize_scalar

from ..errors import ConvergenceError, DomainError, PreconditionError
from ..quadrature import box_corners
from .base import ConvexFunction, as_points, from_dict, register, vec
from .polytope import Subspace

FIBER_TOL = 1e-8


def _bbox(points):
    return points.min(axis=0), points.max(axis=0)


# --------------------------------------------------------------------------
# rigid motion, translation, linear term
# --------------------------------------------------------------------------

@register
class Transformed(ConvexFunction):
    """``x -> base(rotation^T (x - translation)) + <linear, x> + constant``.

    ``rotation`` is orthogonal; with ``rotation = I`` and ``linear = 0`` this
    is the epi-translation ``u o tau^-1 + c``.
    """

    tag = "transformed"

    def __init__(self, base, rotation=None, translation=None, linear=None, constant=0.0):
        self.base = base
        self.n = base.n
        self.rotation = np.eye(self.n) if rotation is None else np.asarray(rotation, dtype=float)
        if self.rotation.shape != (self.n, self.n):
            raise DomainError("rotation must be n x n")
        if np.abs(self.rotation.T @ self.rotation - np.eye(self.n)).max() > 1e-10:
            raise PreconditionError("rotation must be orthogonal")
        self.translation = np.zeros(self.n) if translation is None else vec(translation, self.n)
        self.linear = np.zeros(self.n) if linear is None else vec(linear, self.n)
        self.constant = float(constant)
        self.smooth = base.smooth
        self.super_coercive = base.super_coercive

    @classmethod
    def identity(cls, base):
        return cls(base)

    def _inner(self, x):
        return (x - self.translation) @ self.rotation

    def evaluate(self, x):
        x, single = as_points(x, self.n)
        out = self.base._eval(self._inner(x)) + x @ self.linear + self.constant
        return out[0] if single else out

    def gradient(self, x):
        x, _ = as_points(x, self.n)
        return self.base.gradient(self._inner(x)) @ self.rotation.T + self.linear

    def hessian(self, x):
        x, _ = as_points(x, self.n)
        H = self.base.hessian(self._inner(x))
        return np.einsum("ij,mjk,lk->mil", self.rotation, H, self.rotation)

    def _map_box(self, box):
        if box is None:
            return None
        corners = box_corners(*box) @ self.rotation.T + self.translation
        return _bbox(corners)

    def domain_box(self):
        return self._map_box(self.base.domain_box())

    def gradient_box(self, S):
        return self._map_box(self.base.gradient_box(S + np.linalg.norm(self.linear)))

    def legendre(self):
        return Transformed(self.base.legendre(), self.rotation, self.linear, self.translation,
                           -self.constant - self.translation @ self.linear)

    def epi_mult(self, lam):
        if not lam > 0:
            raise DomainError(f"epi-multiplication needs lambda > 0, got {lam}")
        return Transformed(self.base.epi_mult(lam), self.rotation, lam * self.translation,
                           self.linear, lam * self.constant)

    def project(self, E):
        if E.n != self.n:
            raise DomainError(f"subspace lives in R^{E.n}, function in R^{self.n}")
        F = E.frame
        if np.linalg.norm(self.linear - F @ (F.T @ self.linear)) > 1e-12:
            return NumericProjection(self, E)
        inner = Subspace(self.rotation.T @ F)
        p = self.base.project(inner)
        return Transformed(p, None, F.T @ self.translation, F.T @ self.linear, self.constant)

    def gradient_integral(self, beta, points=None, box=None):
        if box is None and not np.any(self.linear):
            # rigid motions preserve |grad u| and Lebesgue measure
            return self.base.gradient_integral(beta, points)
        return super().gradient_integral(beta, points, box)

    def to_dict(self):
        return {"tag": self.tag, "base": self.base.to_dict(),
                "rotation": self.rotation.tolist(), "translation": self.translation.tolist(),
                "linear": self.linear.tolist(), "constant": self.constant}

    @classmethod
    def from_dict(cls, d):
        return cls(from_dict(d["base"]), d.get("rotation"), d.get("translation"),
                   d.get("linear"), d.get("constant", 0.0))


# --------------------------------------------------------------------------
# functions living on a subspace and their conjugates
# --------------------------------------------------------------------------

@register
class Embedded(ConvexFunction):
    """``x -> base(F^T (x - offset)) + constant`` on ``offset + span F``, else ``+inf``."""

    tag = "embedded"

    def __init__(self, base, frame, offset=None, constant=0.0):
        self.base = base
        self.frame = Subspace(frame).frame
        self.n = self.frame.shape[0]
        if self.frame.shape[1] != base.n:
            raise DomainError("frame width must match the base dimension")
        self.offset = np.zeros(self.n) if offset is None else vec(offset, self.n)
        self.constant = float(constant)
        self.super_coercive = base.super_coercive

    def evaluate(self, x):
        x, single = as_points(x, self.n)
        d = x - self.offset
        s = d @ self.frame
        resid = np.linalg.norm(d - s @ self.frame.T, axis=1)
        on = resid <= 1e-12 * np.maximum(1.0, np.linalg.norm(d, axis=1))
        out = np.full(x.shape[0], np.inf)
        if np.any(on):
            out[on] = self.base._eval(s[on]) + self.constant
        return out[0] if single else out

    def gradient(self, x):
        x, _ = as_points(x, self.n)
        return np.full(x.shape, np.nan)

    def domain_box(self):
        box = self.base.domain_box()
        if box is None:
            return None
        return _bbox(box_corners(*box) @ self.frame.T + self.offset)

    def gradient_box(self, S):
        return self.domain_box()

    def gradient_integral(self, beta, points=None, box=None):
        # the domain is Lebesgue-null in R^n
        return 0.0

    def legendre(self):
        return Cylinder(self.base.legendre(), self.frame, self.offset, -self.constant)

    def epi_mult(self, lam):
        if not lam > 0:
            raise DomainError(f"epi-multiplication needs lambda > 0, got {lam}")
        return Embedded(self.base.epi_mult(lam), self.frame, lam * self.offset,
                        lam * self.constant)

    def to_dict(self):
        return {"tag": self.tag, "base": self.base.to_dict(), "frame": self.frame.tolist(),
                "offset": self.offset.tolist(), "constant": self.constant}

    @classmethod
    def from_dict(cls, d):
        return cls(from_dict(d["base"]), d["frame"], d.get("offset"), d.get("constant", 0.0))


@register
class Cylinder(ConvexFunction):
    """``y -> base(F^T y) + <linear, y> + offset``; constant along ``(span F)^perp``."""

    tag = "cylinder"
    super_coercive = False

    def __init__(self, base, frame, linear=None, offset=0.0):
        self.base = base
        self.frame = Subspace(frame).frame
        self.n = self.frame.shape[0]
        self.linear = np.zeros(self.n) if linear is None else vec(linear, self.n)
        self.offset = float(offset)
        self.smooth = base.smooth

    def evaluate(self, y):
        y, single = as_points(y, self.n)
        out = self.base._eval(y @ self.frame) + y @ self.linear + self.offset
        return out[0] if single else out

    def gradient(self, y):
        y, _ = as_points(y, self.n)
        return self.base.gradient(y @ self.frame) @ self.frame.T + self.linear

    def hessian(self, y):
        y, _ = as_points(y, self.n)
        H = self.base.hessian(y @ self.frame)
        return np.einsum("ij,mjk,lk->mil", self.frame, H, self.frame)

    def legendre(self):
        return Embedded(self.base.legendre(), self.frame, self.linear, -self.offset)

    def to_dict(self):
        return {"tag": self.tag, "base": self.base.to_dict(), "frame": self.frame.tolist(),
                "linear": self.linear.tolist(), "offset": self.offset}

    @classmethod
    def from_dict(cls, d):
        return cls(from_dict(d["base"]), d["frame"], d.get("linear"), d.get("offset", 0.0))


# --------------------------------------------------------------------------
# sums, epi-sums, pointwise max and min
# --------------------------------------------------------------------------

def add_functions(f, g):
    """Pointwise sum, closed-form where the variants allow it."""
    from .polyhedral import SupportPlusIndicator
    from .smooth import Quadratic
    if f.n != g.n:
        raise DomainError("summands live in different dimensions")
    if isinstance(f, Quadratic) and isinstance(g, Quadratic):
        return Quadratic(f.A + g.A, f.b + g.b, f.c + g.c)
    if isinstance(f, SupportPlusIndicator) and isinstance(g, SupportPlusIndicator):
        P = f.P.minkowski_sum(g.P)
        if f.Q is None or g.Q is None:
            Q = f.Q if g.Q is None else g.Q
        else:
            Q = f.Q.intersection(g.Q)
            if Q is None:
                raise PreconditionError("sum has an empty or lower-dimensional domain")
        return SupportPlusIndicator(P, Q)
    terms = []
    for h in (f, g):
        terms.extend(h.terms if isinstance(h, PointwiseSum) else [h])
    return PointwiseSum(terms)


@register
class PointwiseSum(ConvexFunction):
    tag = "pointwise_sum"

    def __init__(self, terms):
        self.terms = sorted(terms, key=lambda t: t.key())
        self.n = self.terms[0].n
        self.smooth = all(t.smooth for t in self.terms)
        self.super_coercive = any(t.super_coercive for t in self.terms)

    def evaluate(self, x):
        x, single = as_points(x, self.n)
        out = sum(t._eval(x) for t in self.terms)
        return out[0] if single else out

    def gradient(self, x):
        x, _ = as_points(x, self.n)
        return sum(t.gradient(x) for t in self.terms)

    def hessian(self, x):
        x, _ = as_points(x, self.n)
        return sum(t.hessian(x) for t in self.terms)

    def legendre(self):
        return EpiSumComposite([t.legendre() for t in self.terms])

    def to_dict(self):
        return {"tag": self.tag, "terms": [t.to_dict() for t in self.terms]}

    @classmethod
    def from_dict(cls, d):
        return cls([from_dict(t) for t in d["terms"]])


@register
class EpiSumComposite(ConvexFunction):
    """Infimal convolution of its operands, evaluated through
    ``(u_1 box ... box u_m)* = u_1* + ... + u_m*``."""

    tag = "epi_sum"

    def __init__(self, operands):
        flat = []
        for u in operands:
            flat.extend(u.operands if isinstance(u, EpiSumComposite) else [u])
        if not flat:
            raise PreconditionError("epi-sum needs at least one operand")
        if len({u.n for u in flat}) != 1:
            raise DomainError("operands live in different dimensions")
        self.operands = sorted(flat, key=lambda u: u.key())
        self.n = flat[0].n
        self.super_coercive = all(u.super_coercive for u in flat)
        self._dual = None

    @property
    def dual(self):
        if self._dual is None:
            d = self.operands[0].legendre()
            for u in self.operands[1:]:
                d = add_functions(d, u.legendre())
            self._dual = d
        return self._dual

    def evaluate(self, x):
        x, single = as_points(x, self.n)
        d = self.dual
        out = d.conjugate_at(x) if hasattr(d, "conjugate_at") else NumericConjugate(d).evaluate(x)
        out = np.atleast_1d(out)
        return out[0] if single else out

    def gradient(self, x):
        return NumericConjugate(self.dual).gradient(x)

    def legendre(self):
        return self.dual

    def epi_mult(self, lam):
        if not lam > 0:
            raise DomainError(f"epi-multiplication needs lambda > 0, got {lam}")
        return EpiSumComposite([u.epi_mult(lam) for u in self.operands])

    def project(self, E):
        from .ops import epi_sum
        parts = [u.project(E) for u in self.operands]
        out = parts[0]
        for p in parts[1:]:
            out = epi_sum(out, p)
        return out

    def to_dict(self):
        return {"tag": self.tag, "operands": [u.to_dict() for u in self.operands]}

    @classmethod
    def from_dict(cls, d):
        return cls([from_dict(u) for u in d["operands"]])


class _Pointwise(ConvexFunction):
    pick = None

    def __init__(self, u, v):
        if u.n != v.n:
            raise DomainError("lattice operands live in different dimensions")
        self.u, self.v = u, v
        self.n = u.n
        self.smooth = False

    def evaluate(self, x):
        x, single = as_points(x, self.n)
        out = type(self).pick(self.u._eval(x), self.v._eval(x))
        return out[0] if single else out

    def _choose(self, x, attr):
        x, _ = as_points(x, self.n)
        a, b = self.u._eval(x), self.v._eval(x)
        fa, fb = getattr(self.u, attr)(x), getattr(self.v, attr)(x)
        use_a = type(self).pick(a, b) == a
        out = np.where(use_a.reshape((-1,) + (1,) * (fa.ndim - 1)), fa, fb)
        tie = np.abs(a - b) <= 1e-12 * np.maximum(1.0, np.abs(a))
        if np.any(tie):
            same = np.all(np.isclose(fa, fb, rtol=0, atol=1e-10).reshape(fa.shape[0], -1), axis=1)
            out[tie & ~same] = np.nan
        return out

    def gradient(self, x):
        return self._choose(x, "gradient")

    def hessian(self, x):
        return self._choose(x, "hessian")

    def domain_box(self):
        bu, bv = self.u.domain_box(), self.v.domain_box()
        if bu is None or bv is None:
            return None if type(self) is PointwiseMin else (bu or bv)
        lo = np.minimum(bu[0], bv[0]) if type(self) is PointwiseMin else np.maximum(bu[0], bv[0])
        hi = np.maximum(bu[1], bv[1]) if type(self) is PointwiseMin else np.minimum(bu[1], bv[1])
        return lo, hi

    def to_dict(self):
        return {"tag": self.tag, "u": self.u.to_dict(), "v": self.v.to_dict()}

    @classmethod
    def from_dict(cls, d):
        return cls(from_dict(d["u"]), from_dict(d["v"]))


@register
class PointwiseMax(_Pointwise):
    tag = "pointwise_max"
    pick = staticmethod(np.maximum)


@register
class PointwiseMin(_Pointwise):
    tag = "pointwise_min"
    pick = staticmethod(np.minimum)


# --------------------------------------------------------------------------
# numerically evaluated conjugate and projection
# --------------------------------------------------------------------------

@register
class NumericConjugate(ConvexFunction):
    """``u*(y) = sup_x <x, y> - u(x)`` by smooth unconstrained maximisation."""

    tag = "numeric_conjugate"
    super_coercive = False

    def __init__(self, base):
        self.base = base
        self.n = base.n
        self.smooth = base.smooth

    def argmax(self, y):
        y = vec(y, self.n)
        if hasattr(self.base, "conjugate_at"):
            raise PreconditionError("closed-form LP conjugates have no smooth argmax")
        if not self.base.smooth:
            raise PreconditionError(f"{self.base.tag}: numeric conjugate needs a smooth function")
        x0 = getattr(self.base, "minimizer", None)
        x0 = np.zeros(self.n) if x0 is None else x0
        res = minimize(lambda x: float(self.base._eval(x)[0]) - x @ y, x0,
                       jac=lambda x: self.base.gradient(x[None, :])[0] - y,
                       method="BFGS", options={"gtol": 1e-11, "maxiter": 2000})
        g = self.base.gradient(res.x[None, :])[0] - y
        if not np.linalg.norm(g) <= 1e-8 * max(1.0, np.linalg.norm(y)):
            raise ConvergenceError(f"conjugate maximisation did not converge at y={y.tolist()}",
                                   at=y.tolist())
        return res.x

    def evaluate(self, y):
        y, single = as_points(y, self.n)
        if hasattr(self.base, "conjugate_at"):
            out = np.atleast_1d(self.base.conjugate_at(y))
        else:
            out = np.empty(y.shape[0])
            for i, yi in enumerate(y):
                x = self.argmax(yi)
                out[i] = x @ yi - float(self.base._eval(x)[0])
        return out[0] if single else out

    def gradient(self, y):
        y, _ = as_points(y, self.n)
        return np.array([self.argmax(yi) for yi in y])

    def hessian(self, y):
        y, _ = as_points(y, self.n)
        out = []
        for yi in y:
            x = self.argmax(yi)
            out.append(np.linalg.inv(self.base.hessian(x[None, :])[0]))
        return np.array(out)

    def legendre(self):
        return self.base

    def to_dict(self):
        return {"tag": self.tag, "base": self.base.to_dict()}

    @classmethod
    def from_dict(cls, d):
        return cls(from_dict(d["base"]))


@register
class NumericProjection(ConvexFunction):
    """``s -> min_z u(F s + G z)`` over the orthogonal fibre ``G``."""

    tag = "numeric_projection"

    def __init__(self, base, E):
        self.base = base
        self.E = E if isinstance(E, Subspace) else Subspace(E)
        self.n = self.E.k
        self.G = self.E.complement().frame
        self.smooth = base.smooth
        self.super_coercive = base.super_coercive

    def fiber_minimizer(self, s):
        """A minimiser ``x`` in R^n of the fibre problem over ``F s + span G``."""
        s = vec(s, self.n)
        F, G = self.E.frame, self.G
        x0 = F @ s
        f = lambda z: float(self.base._eval(x0 + G @ np.atleast_1d(z))[0])
        if G.shape[1] == 1:
            box = self.base.domain_box()
            if box is not None:
                span = np.abs(box_corners(*box) @ G[:, 0])
                lim = float(span.max()) + 1.0
                res = minimize_scalar(f, bounds=(-lim, lim), method="bounded",
                                      options={"xatol": FIBER_TOL})
            else:
                res = minimize_scalar(f, method="brent", tol=FIBER_TOL)
            z = np.array([res.x])
            ok = np.isfinite(res.fun)
        else:
            jac = None
            if self.base.smooth:
                jac = lambda z: self.base.gradient((x0 + G @ z)[None, :])[0] @ G
            res = minimize(f, np.zeros(G.shape[1]), jac=jac,
                           method="BFGS" if jac else "Powell",
                           options={"gtol": 1e-11} if jac else {"xtol": FIBER_TOL, "ftol": 1e-14})
            z = res.x
            ok = np.isfinite(res.fun)
        if not ok:
            raise ConvergenceError(f"fibre minimisation failed at x_E={s.tolist()}", at=s.tolist())
        return x0 + G @ z

    def evaluate(self, s):
        s, single = as_points(s, self.n)
        out = np.array([float(self.base._eval(self.fiber_minimizer(si))[0]) for si in s])
        return out[0] if single else out

    def gradient(self, s):
        s, _ = as_points(s, self.n)
        xs = np.array([self.fiber_minimizer(si) for si in s])
        return self.base.gradient(xs) @ self.E.frame

    def hessian(self, s):
        # Schur complement of the fibre block
        s, _ = as_points(s, self.n)
        F, G = self.E.frame, self.G
        out = []
        for si in s:
            H = self.base.hessian(self.fiber_minimizer(si)[None, :])[0]
            Hee, Heg, Hgg = F.T @ H @ F, F.T @ H @ G, G.T @ H @ G
            out.append(Hee - Heg @ np.linalg.solve(Hgg, Heg.T))
        return np.array(out)

    def _map(self, box):
        return None if box is None else _bbox(box_corners(*box) @ self.E.frame)

    def domain_box(self):
        return self._map(self.base.domain_box())

    def gradient_box(self, S):
        # at a fibre minimiser |grad u| = |grad proj_E u|
        return self._map(self.base.gradient_box(S))

    def to_dict(self):
        return {"tag": self.tag, "base": self.base.to_dict(), "frame": self.E.frame.tolist()}

    @classmethod
    def from_dict(cls, d):
        return cls(from_dict(d["base"]), Subspace(d["frame"]))


@register
class PolyhedralProjection(ConvexFunction):
    """Projection of ``h_P + I_Q`` onto a subspace, one linear program per point.

    The gradient is read off the dual variables of the constraint
    ``F^T x = s``.
    """

    tag = "polyhedral_projection"

    def __init__(self, base, E):
        self.base = base
        self.E = E if isinstance(E, Subspace) else Subspace(E)
        self.n = self.E.k
        if base.Q is None or base._hs is None:
            raise PreconditionError("polyhedral projection needs a full-dimensional Q")

    def _solve(self, s):
        A, b = self.base._hs
        V = self.base.P.vertices
        nn = self.base.n
        A_ub = np.vstack([np.c_[V, -np.ones(V.shape[0])], np.c_[A, np.zeros(A.shape[0])]])
        b_ub = np.r_[np.zeros(V.shape[0]), b]
        A_eq = np.c_[self.E.frame.T, np.zeros(self.n)]
        return linprog(np.r_[np.zeros(nn), 1.0], A_ub=A_ub, b_ub=b_ub, A_eq=A_eq, b_eq=s,
                       bounds=[(None, None)] * (nn + 1), method="highs")

    def fiber_minimizer(self, s):
        res = self._solve(vec(s, self.n))
        if res.status != 0:
            raise DomainError(f"x_E={list(s)} lies outside dom proj_E u")
        return res.x[:-1]

    def evaluate(self, s):
        s, single = as_points(s, self.n)
        out = np.empty(s.shape[0])
        for i, si in enumerate(s):
            res = self._solve(si)
            if res.status == 2:
                out[i] = np.inf
            elif res.status == 0:
                out[i] = res.fun
            else:
                raise ConvergenceError(f"fibre LP failed at x_E={si.tolist()}", at=si.tolist())
        return out[0] if single else out

    def gradient(self, s):
        s, _ = as_points(s, self.n)
        g = np.full(s.shape, np.nan)
        for i, si in enumerate(s):
            res = self._solve(si)
            if res.status == 0:
                g[i] = res.eqlin.marginals
        return g

    def hessian(self, s):
        s, _ = as_points(s, self.n)
        return np.zeros((s.shape[0], self.n, self.n))

    def domain_box(self):
        return _bbox(self.base.Q.vertices @ self.E.frame)

    def to_dict(self):
        return {"tag": self.tag, "base": self.base.to_dict(), "frame": self.E.frame.tolist()}

    @classmethod
    def from_dict(cls, d):
        return cls(from_dict(d["base"]), Subspace(d["frame"]))
