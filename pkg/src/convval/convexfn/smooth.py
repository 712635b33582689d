"""Smooth variants: quadratics, radial functions and one-sided ramps."""

from dataclasses import dataclass

import numpy as np

from ..errors import DomainError, PreconditionError
from .base import ConvexFunction, as_points, radial_mass, radial_values, register, vec
from ..densities import unit_ball_volume
from ..quadrature import EPSABS, integrate_unit

_BISECT_STEPS = 200


# --------------------------------------------------------------------------
# radial profiles
# --------------------------------------------------------------------------

class Profile:
    """A convex increasing ``phi`` on [0, inf) with ``phi(0) = phi'(0) = 0``."""

    def value(self, r):
        raise NotImplementedError

    def d1(self, r):
        raise NotImplementedError

    def d2(self, r):
        raise NotImplementedError

    def inv_d1(self, rho):
        """Solve ``phi'(r) = rho`` for ``r >= 0``."""
        raise NotImplementedError

    def d2_at_zero(self):
        """``phi''(0)``; ``inf`` when the Hessian of ``phi(|x|)`` blows up."""
        raise NotImplementedError

    def conjugate(self):
        raise NotImplementedError

    def times(self, lam):
        """The profile ``lam * phi``."""
        raise NotImplementedError

    def epi_scaled(self, lam):
        """The profile ``lam * phi(r / lam)``."""
        raise NotImplementedError


def _bisect_increasing(f, target, hi):
    """Vectorised bisection for ``f(r) = target`` on [0, hi] with ``f`` increasing."""
    target = np.asarray(target, dtype=float)
    lo = np.zeros_like(target)
    hi = np.broadcast_to(np.asarray(hi, dtype=float), target.shape).copy()
    grow = f(hi) < target
    while np.any(grow):
        hi[grow] *= 2.0
        grow = f(hi) < target
    for _ in range(_BISECT_STEPS):
        mid = 0.5 * (lo + hi)
        if np.all((mid == lo) | (mid == hi)):
            break
        up = f(mid) < target
        lo = np.where(up, mid, lo)
        hi = np.where(up, hi, mid)
    return 0.5 * (lo + hi)


@dataclass(frozen=True)
class PowerProfile(Profile):
    """``phi(r) = sum_k a_k r**p_k`` with ``a_k > 0`` and ``p_k > 1``."""

    coeffs: tuple
    powers: tuple

    def __post_init__(self):
        a = tuple(float(c) for c in np.atleast_1d(self.coeffs))
        p = tuple(float(q) for q in np.atleast_1d(self.powers))
        if len(a) != len(p) or not a:
            raise PreconditionError("profile needs matching, non-empty coeffs and powers")
        if any(c <= 0 for c in a) or any(q <= 1 for q in p):
            raise PreconditionError("profile terms need a > 0 and p > 1")
        object.__setattr__(self, "coeffs", a)
        object.__setattr__(self, "powers", p)

    def value(self, r):
        r = np.asarray(r, dtype=float)
        return sum(a * r ** p for a, p in zip(self.coeffs, self.powers))

    def d1(self, r):
        r = np.asarray(r, dtype=float)
        return sum(a * p * r ** (p - 1) for a, p in zip(self.coeffs, self.powers))

    def d2(self, r):
        r = np.asarray(r, dtype=float)
        with np.errstate(divide="ignore"):
            return sum(a * p * (p - 1) * r ** (p - 2) if p != 2 else 2 * a + 0 * r
                       for a, p in zip(self.coeffs, self.powers))

    def d2_at_zero(self):
        if min(self.powers) < 2:
            return np.inf
        return float(sum(2 * a for a, p in zip(self.coeffs, self.powers) if p == 2))

    def inv_d1(self, rho):
        rho = np.asarray(rho, dtype=float)
        if len(self.coeffs) == 1:
            a, p = self.coeffs[0], self.powers[0]
            return np.power(np.maximum(rho, 0.0) / (a * p), 1.0 / (p - 1))
        return _bisect_increasing(self.d1, np.maximum(rho, 0.0), 1.0)

    def conjugate(self):
        if len(self.coeffs) == 1:
            a, p = self.coeffs[0], self.powers[0]
            q = p / (p - 1)
            return PowerProfile(((p - 1) * a * (a * p) ** (-q),), (q,))
        return ConjugateProfile(self)

    def times(self, lam):
        return PowerProfile(tuple(lam * a for a in self.coeffs), self.powers)

    def epi_scaled(self, lam):
        return PowerProfile(tuple(a * lam ** (1 - p) for a, p in zip(self.coeffs, self.powers)),
                            self.powers)

    def to_dict(self):
        return {"kind": "power", "coeffs": list(self.coeffs), "powers": list(self.powers)}


@dataclass(frozen=True)
class ConjugateProfile(Profile):
    """``phi*(rho) = sup_r (rho r - phi(r))`` of another profile."""

    base: Profile

    def _arg(self, rho):
        return self.base.inv_d1(rho)

    def value(self, rho):
        rho = np.asarray(rho, dtype=float)
        r = self._arg(rho)
        return rho * r - self.base.value(r)

    def d1(self, rho):
        return self._arg(rho)

    def d2(self, rho):
        with np.errstate(divide="ignore"):
            return 1.0 / self.base.d2(self._arg(rho))

    def d2_at_zero(self):
        b = self.base.d2_at_zero()
        return np.inf if b == 0 else (0.0 if np.isinf(b) else 1.0 / b)

    def inv_d1(self, r):
        return self.base.d1(r)

    def conjugate(self):
        return self.base

    def times(self, lam):
        # (lam phi*)(rho) = lam phi*(rho) = (lam . phi)*(rho)
        return ConjugateProfile(self.base.epi_scaled(lam))

    def epi_scaled(self, lam):
        return ConjugateProfile(self.base.times(lam))

    def to_dict(self):
        return {"kind": "conjugate", "base": self.base.to_dict()}


def profile_from_dict(d):
    if d["kind"] == "power":
        return PowerProfile(tuple(d["coeffs"]), tuple(d["powers"]))
    if d["kind"] == "conjugate":
        return ConjugateProfile(profile_from_dict(d["base"]))
    raise DomainError(f"unknown profile kind {d['kind']!r}")


# --------------------------------------------------------------------------
# quadratic
# --------------------------------------------------------------------------

@register
class Quadratic(ConvexFunction):
    """``u(x) = 1/2 x^T A x + b^T x + c`` with ``A`` positive definite."""

    tag = "quadratic"
    smooth = True

    def __init__(self, A, b=None, c=0.0):
        A = np.atleast_2d(np.asarray(A, dtype=float))
        if A.shape[0] != A.shape[1]:
            raise PreconditionError("A must be square")
        if not np.allclose(A, A.T, rtol=0, atol=1e-12 * max(1.0, np.abs(A).max())):
            raise PreconditionError("A must be symmetric")
        A = 0.5 * (A + A.T)
        eig = np.linalg.eigvalsh(A)
        if eig.min() <= 0:
            raise PreconditionError(f"A must be positive definite (min eigenvalue {eig.min():.3g})")
        self.n = A.shape[0]
        self.A = A
        self.b = np.zeros(self.n) if b is None else vec(b, self.n)
        self.c = float(c)
        self._Ainv = np.linalg.inv(A)

    @classmethod
    def half_square(cls, n, scale=1.0):
        return cls(scale * np.eye(n))

    def evaluate(self, x):
        x, single = as_points(x, self.n)
        out = 0.5 * np.einsum("ij,jk,ik->i", x, self.A, x) + x @ self.b + self.c
        return out[0] if single else out

    def gradient(self, x):
        x, _ = as_points(x, self.n)
        return x @ self.A + self.b

    def hessian(self, x):
        x, _ = as_points(x, self.n)
        return np.broadcast_to(self.A, (x.shape[0], self.n, self.n)).copy()

    @property
    def minimizer(self):
        return -self._Ainv @ self.b

    def gradient_box(self, S):
        half = S * np.linalg.norm(self._Ainv, axis=1)
        return self.minimizer - half, self.minimizer + half

    def legendre(self):
        Ai = self._Ainv
        return Quadratic(Ai, -Ai @ self.b, 0.5 * self.b @ Ai @ self.b - self.c)

    def epi_mult(self, lam):
        if not lam > 0:
            raise DomainError(f"epi-multiplication needs lambda > 0, got {lam}")
        return Quadratic(self.A / lam, self.b, lam * self.c)

    def project(self, E):
        if E.n != self.n:
            raise DomainError(f"subspace lives in R^{E.n}, function in R^{self.n}")
        F = E.frame
        Ai = self._Ainv
        M = F.T @ Ai @ F
        Mi = np.linalg.inv(M)
        bb = F.T @ Ai @ self.b
        c = 0.5 * bb @ Mi @ bb - 0.5 * self.b @ Ai @ self.b + self.c
        return Quadratic(0.5 * (Mi + Mi.T), Mi @ bb, c)

    def gradient_integral(self, beta, points=None, box=None):
        if box is not None:
            return super().gradient_integral(beta, points, box)
        # y = A x + b maps R^n onto R^n with Jacobian det A
        return radial_mass(beta, self.n) / float(np.linalg.det(self.A))

    def to_dict(self):
        return {"tag": self.tag, "A": self.A.tolist(), "b": self.b.tolist(), "c": self.c}

    @classmethod
    def from_dict(cls, d):
        return cls(d["A"], d.get("b"), d.get("c", 0.0))


# --------------------------------------------------------------------------
# radial
# --------------------------------------------------------------------------

@register
class SmoothRadial(ConvexFunction):
    """``u(x) = phi(|x - center|) + <linear, x> + offset``."""

    tag = "smooth_radial"
    smooth = True

    def __init__(self, profile, n, center=None, linear=None, offset=0.0):
        if isinstance(profile, dict):
            profile = profile_from_dict(profile)
        self.profile = profile
        self.n = int(n)
        self.center = np.zeros(self.n) if center is None else vec(center, self.n)
        self.linear = np.zeros(self.n) if linear is None else vec(linear, self.n)
        self.offset = float(offset)

    @classmethod
    def power(cls, n, a, p, **kw):
        return cls(PowerProfile((a,), (p,)), n, **kw)

    def _polar(self, x):
        x, single = as_points(x, self.n)
        d = x - self.center
        r = np.linalg.norm(d, axis=1)
        return x, d, r, single

    def evaluate(self, x):
        x, _d, r, single = self._polar(x)
        out = self.profile.value(r) + x @ self.linear + self.offset
        return out[0] if single else out

    def gradient(self, x):
        _x, d, r, _ = self._polar(x)
        with np.errstate(invalid="ignore", divide="ignore"):
            unit = np.where(r[:, None] > 0, d / r[:, None], 0.0)
        return self.profile.d1(r)[:, None] * unit + self.linear

    def hessian(self, x):
        _x, d, r, _ = self._polar(x)
        m = r.shape[0]
        out = np.empty((m, self.n, self.n))
        pos = r > 0
        if np.any(pos):
            u = d[pos] / r[pos, None]
            rp = r[pos]
            d2 = self.profile.d2(rp)
            tang = self.profile.d1(rp) / rp
            uu = u[:, :, None] * u[:, None, :]
            out[pos] = d2[:, None, None] * uu + tang[:, None, None] * (np.eye(self.n) - uu)
        if np.any(~pos):
            out[~pos] = self.profile.d2_at_zero() * np.eye(self.n)
            if np.isinf(self.profile.d2_at_zero()):
                out[~pos] = np.nan
        return out

    def radius_for_gradient(self, S):
        return float(self.profile.inv_d1(np.array([S + np.linalg.norm(self.linear)]))[0])

    def gradient_box(self, S):
        r = self.radius_for_gradient(S)
        return self.center - r, self.center + r

    def legendre(self):
        return SmoothRadial(self.profile.conjugate(), self.n, center=self.linear,
                            linear=self.center,
                            offset=-self.offset - self.center @ self.linear)

    def epi_mult(self, lam):
        if not lam > 0:
            raise DomainError(f"epi-multiplication needs lambda > 0, got {lam}")
        return SmoothRadial(self.profile.epi_scaled(lam), self.n, center=lam * self.center,
                            linear=self.linear, offset=lam * self.offset)

    def project(self, E):
        if E.n != self.n:
            raise DomainError(f"subspace lives in R^{E.n}, function in R^{self.n}")
        F = E.frame
        if np.linalg.norm(self.linear - F @ (F.T @ self.linear)) > 1e-12:
            return super().project(E)
        # |x_E + z - c|^2 splits, so the fibre minimum sits at z = c_perp
        return SmoothRadial(self.profile, E.k, center=F.T @ self.center,
                            linear=F.T @ self.linear, offset=self.offset)

    def gradient_integral(self, beta, points=None, box=None):
        if box is not None or np.any(self.linear != 0):
            return super().gradient_integral(beta, points, box)
        return _radial_profile_mass(self.profile, beta, self.n)

    def to_dict(self):
        return {"tag": self.tag, "n": self.n, "profile": self.profile.to_dict(),
                "center": self.center.tolist(), "linear": self.linear.tolist(),
                "offset": self.offset}

    @classmethod
    def from_dict(cls, d):
        return cls(profile_from_dict(d["profile"]), d["n"], d.get("center"),
                   d.get("linear"), d.get("offset", 0.0))


_PROFILE_CACHE = {}


def _radial_profile_mass(profile, beta, n):
    """``n kappa_n int_0^R beta(phi'(r)) r^(n-1) dr`` with ``phi'(R) = S``."""
    key = (profile, id(beta), n)
    hit = _PROFILE_CACHE.get(key)
    if hit is not None and hit[0] is beta:
        return hit[1]
    if beta.support_upper == 0.0:
        return 0.0
    R = float(profile.inv_d1(np.array([beta.support_upper]))[0])

    def f(u):
        r = R * u
        return np.atleast_1d(R * radial_values(beta, profile.d1(r)) * r ** (n - 1))

    val = float(n * unit_ball_volume(n) * integrate_unit(f, epsabs=EPSABS)[0])
    _PROFILE_CACHE[key] = (beta, val)
    return val


# --------------------------------------------------------------------------
# quadratic with a one-sided ramp
# --------------------------------------------------------------------------

@register
class RampQuadratic(ConvexFunction):
    """``q(x) + a * max(0, <w, x> - shift)**2`` for a quadratic ``q``.

    Twice differentiable except on the hyperplane ``<w, x> = shift``, where
    the Hessian jumps; the gradient is continuous.
    """

    tag = "ramp_quadratic"
    smooth = True

    def __init__(self, base, w, shift, a):
        if isinstance(base, dict):
            base = Quadratic.from_dict(base)
        self.base = base
        self.n = base.n
        self.w = vec(w, self.n)
        self.shift = float(shift)
        self.a = float(a)
        if self.a < 0:
            raise PreconditionError("ramp coefficient must be >= 0")

    def _ramp(self, x):
        return np.maximum(x @ self.w - self.shift, 0.0)

    def evaluate(self, x):
        x, single = as_points(x, self.n)
        out = self.base.evaluate(x) + self.a * self._ramp(x) ** 2
        return out[0] if single else out

    def gradient(self, x):
        x, _ = as_points(x, self.n)
        return self.base.gradient(x) + 2 * self.a * self._ramp(x)[:, None] * self.w

    def hessian(self, x):
        x, _ = as_points(x, self.n)
        on = (x @ self.w > self.shift).astype(float)
        return self.base.hessian(x) + 2 * self.a * on[:, None, None] * np.outer(self.w, self.w)

    def full(self):
        """The quadratic that agrees with ``self`` on the ramp side."""
        A = self.base.A + 2 * self.a * np.outer(self.w, self.w)
        b = self.base.b - 2 * self.a * self.shift * self.w
        return Quadratic(A, b, self.base.c + self.a * self.shift ** 2)

    def gradient_box(self, S):
        # u agrees with one of the two quadratics at every point
        lo1, hi1 = self.base.gradient_box(S)
        lo2, hi2 = self.full().gradient_box(S)
        return np.minimum(lo1, lo2), np.maximum(hi1, hi2)

    def epi_mult(self, lam):
        if not lam > 0:
            raise DomainError(f"epi-multiplication needs lambda > 0, got {lam}")
        return RampQuadratic(self.base.epi_mult(lam), self.w, lam * self.shift, self.a / lam)

    def to_dict(self):
        return {"tag": self.tag, "base": self.base.to_dict(), "w": self.w.tolist(),
                "shift": self.shift, "a": self.a}

    @classmethod
    def from_dict(cls, d):
        return cls(Quadratic.from_dict(d["base"]), d["w"], d["shift"], d["a"])
