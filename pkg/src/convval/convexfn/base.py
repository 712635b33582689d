"""The :class:`ConvexFunction` interface and shared numerical helpers."""

from functools import lru_cache
import json

import numpy as np

from ..densities import unit_ball_volume
from ..errors import DomainError, NonDifferentiableError, PreconditionError
from ..quadrature import default_points, midpoint_grid

_REGISTRY = {}


def register(cls):
    _REGISTRY[cls.tag] = cls
    return cls


def from_dict(d):
    """Rebuild a function from its JSON descriptor."""
    try:
        cls = _REGISTRY[d["tag"]]
    except KeyError as exc:
        raise DomainError(f"unknown function tag {d.get('tag')!r}") from exc
    return cls.from_dict(d)


def as_points(x, n):
    """Coerce ``x`` to an ``(m, n)`` array; returns ``(array, was_single)``."""
    x = np.asarray(x, dtype=float)
    single = x.ndim == 0 or (x.ndim == 1 and x.size == n)
    x = np.atleast_2d(x.reshape(-1, n) if x.ndim <= 1 else x)
    if x.shape[-1] != n:
        raise DomainError(f"expected points in R^{n}, got shape {x.shape}")
    return x, single


def vec(v, n=None):
    v = np.atleast_1d(np.asarray(v, dtype=float)).copy()
    if n is not None and v.shape != (n,):
        raise DomainError(f"expected a vector of length {n}, got shape {v.shape}")
    return v


@lru_cache(maxsize=1024)
def radial_mass(beta, k):
    """``int_{R^k} beta(|y|) dy = k kappa_k int_0^S beta(r) r^(k-1) dr``."""
    if beta.support_upper == 0.0:
        return 0.0
    return float(k * unit_ball_volume(k) * beta.moment_tail(np.array([0.0]), k - 1)[0])


def radial_values(beta, s):
    """``beta(s)`` for ``s >= 0`` where ``s = 0`` uses the value at zero."""
    s = np.asarray(s, dtype=float)
    out = beta._raw_support(s)
    zero = s == 0.0
    if np.any(zero):
        if beta.value_at_zero is None:
            raise DomainError(f"density {beta.name or '<anonymous>'} has no value at 0")
        out[zero] = beta.value_at_zero
    return out


class ConvexFunction:
    """A proper, lower semicontinuous convex function on ``R^n``.

    Subclasses are immutable.  ``evaluate``, ``gradient`` and ``hessian``
    are vectorised over a leading axis of points; ``gradient`` returns NaN
    rows at points of non-differentiability.
    """

    tag = "abstract"
    smooth = False        # twice differentiable on the interior of dom u
    super_coercive = True

    n: int

    # ---- evaluation ------------------------------------------------------

    def evaluate(self, x):
        raise NotImplementedError

    def __call__(self, x):
        return self.evaluate(x)

    def _eval(self, x):
        """Vectorised evaluation returning an array even for one point."""
        x, _ = as_points(x, self.n)
        return np.atleast_1d(self.evaluate(x))

    def gradient(self, x):
        raise NonDifferentiableError(f"{self.tag} provides no gradient", variant=self.tag)

    def hessian(self, x):
        raise NonDifferentiableError(f"{self.tag} provides no Hessian", variant=self.tag)

    def gradient_hessian(self, x):
        """Gradient and Hessian at a single interior point ``x``."""
        x = vec(x, self.n)
        if not np.isfinite(self._eval(x)[0]):
            raise DomainError(f"{self.tag}: x={x.tolist()} lies outside dom u")
        g = self.gradient(x[None, :])[0]
        h = self.hessian(x[None, :])[0]
        if not (np.all(np.isfinite(g)) and np.all(np.isfinite(h))):
            raise NonDifferentiableError(
                f"{self.tag} is not twice differentiable at x={x.tolist()}",
                variant=self.tag, at=x.tolist())
        return g, h

    # ---- geometry --------------------------------------------------------

    def domain_box(self):
        """Bounding box ``(lo, hi)`` of dom u, or ``None`` if unbounded."""
        return None

    def gradient_box(self, S):
        """A box containing every ``x`` in dom u with ``|grad u(x)| <= S``."""
        box = self.domain_box()
        if box is None:
            raise PreconditionError(f"{self.tag}: no bound for the sublevel set of |grad u|")
        return box

    # ---- operations ------------------------------------------------------

    def legendre(self):
        from .composite import NumericConjugate
        return NumericConjugate(self)

    def epi_mult(self, lam):
        from .composite import Transformed
        return Transformed.identity(self).epi_mult(lam)

    def project(self, E):
        from .composite import NumericProjection
        if E.n != self.n:
            raise DomainError(f"subspace lives in R^{E.n}, function in R^{self.n}")
        if E.k == self.n:
            # full space: w(s) = u(F s)
            from .composite import Transformed
            return Transformed(self, E.frame.T, np.zeros(self.n))
        return NumericProjection(self, E)

    # ---- integrals -------------------------------------------------------

    def gradient_integral(self, beta, points=None, box=None):
        """``int_{dom u} beta(|grad u(x)|) dx`` for a radial density ``beta``.

        The generic rule is a tensor midpoint rule over ``box`` (default:
        the gradient box); nodes where ``u`` is not differentiable are
        moved by half a cell.
        """
        if beta.support_upper == 0.0:
            return 0.0
        if box is None:
            box = self.gradient_box(beta.support_upper)
        pts = points or default_points(self.n)
        nodes, cell, h = midpoint_grid(box[0], box[1], pts)
        g = self.gradient_on_nodes(nodes, h)
        s = np.linalg.norm(g, axis=1)
        return float(np.sum(radial_values(beta, s[np.isfinite(s)])) * cell)

    def gradient_on_nodes(self, nodes, h):
        """Gradients at finite nodes (NaN rows elsewhere), jittering kinks."""
        vals = self._eval(nodes)
        g = np.full(nodes.shape, np.nan)
        inside = np.isfinite(vals)
        if np.any(inside):
            g[inside] = self.gradient(nodes[inside])
            bad = inside & ~np.all(np.isfinite(g), axis=1)
            if np.any(bad):
                moved = nodes[bad] + 0.5 * h
                mv = self._eval(moved)
                gg = np.full(moved.shape, np.nan)
                ok = np.isfinite(mv)
                if np.any(ok):
                    gg[ok] = self.gradient(moved[ok])
                g[bad] = gg
        return g

    # ---- serialisation ---------------------------------------------------

    def to_dict(self):
        raise NotImplementedError

    @classmethod
    def from_dict(cls, d):
        raise NotImplementedError

    def key(self):
        """Canonical string used for ordering operands and de-duplication."""
        return json.dumps(self.to_dict(), sort_keys=True)

    def __repr__(self):
        return f"{type(self).__name__}(n={self.n})"
