"""Convex functions sampled on a regular grid, with ``+inf`` cells."""

import itertools

import numpy as np

from ..errors import DomainError, PreconditionError
from .base import ConvexFunction, as_points, register, vec

CONVEXITY_TOL = 1e-9
_CHUNK = 1 << 22  # elements per brute-force max-plus block


def _axes(lo, hi, shape):
    return [np.linspace(lo[i], hi[i], shape[i]) for i in range(len(shape))]


def _directions(n):
    """Axis directions and the two diagonals of every coordinate plane."""
    dirs = [tuple(int(i == k) for i in range(n)) for k in range(n)]
    for i, j in itertools.combinations(range(n), 2):
        for sj in (1, -1):
            d = [0] * n
            d[i], d[j] = 1, sj
            dirs.append(tuple(d))
    return dirs


def _shifted(values, d, sign):
    """Views ``values[p + sign*d]`` over the common index range."""
    sl_mid, sl_off = [], []
    for k, dk in enumerate(d):
        N = values.shape[k]
        if dk == 0:
            sl_off.append(slice(None))
            sl_mid.append(slice(None))
        else:
            step = sign * dk
            sl_mid.append(slice(1, N - 1))
            sl_off.append(slice(1 + step, N - 1 + step))
    return values[tuple(sl_off)], tuple(sl_mid)


def maxplus_axis(F, x, y, axis):
    """``out[..., m, ...] = max_i (x_i y_m + F[..., i, ...])`` along ``axis``."""
    F = np.moveaxis(F, axis, -1)
    lead = F.shape[:-1]
    flat = F.reshape(-1, F.shape[-1])
    out = np.empty((flat.shape[0], y.size))
    xy = x[:, None] * y[None, :]
    rows = max(1, _CHUNK // (x.size * y.size))
    with np.errstate(invalid="ignore"):
        for start in range(0, flat.shape[0], rows):
            block = flat[start:start + rows]
            out[start:start + rows] = np.max(block[:, :, None] + xy[None, :, :], axis=1)
    return np.moveaxis(out.reshape(lead + (y.size,)), -1, axis)


@register
class GridSampled(ConvexFunction):
    """Values of a convex function at the nodes of a regular grid on a box.

    Cells outside the effective domain hold ``+inf`` (``numpy.inf`` is the
    sentinel; large finite values are ordinary values).  Between nodes the
    function is multilinear on cells whose corners are all finite.
    """

    tag = "grid_sampled"

    def __init__(self, lo, hi, values, validate=True):
        self.values = np.asarray(values, dtype=float)
        self.n = self.values.ndim
        self.lo = vec(lo, self.n)
        self.hi = vec(hi, self.n)
        if np.any(self.hi <= self.lo) or min(self.values.shape) < 2:
            raise DomainError("grid needs hi > lo and at least 2 nodes per axis")
        if np.any(np.isnan(self.values)) or np.any(self.values == -np.inf):
            raise PreconditionError("grid values must be finite or +inf")
        self.axes = _axes(self.lo, self.hi, self.values.shape)
        self.spacing = (self.hi - self.lo) / (np.array(self.values.shape) - 1)
        if validate and not self.is_convex():
            raise PreconditionError("grid values are not convex along grid lines")

    @classmethod
    def from_function(cls, u, lo, hi, shape, validate=True):
        lo, hi = vec(lo), vec(hi)
        shape = (shape,) * lo.size if np.isscalar(shape) else tuple(shape)
        mesh = np.meshgrid(*_axes(lo, hi, shape), indexing="ij")
        pts = np.stack([m.ravel() for m in mesh], axis=-1)
        return cls(lo, hi, u._eval(pts).reshape(shape), validate=validate)

    def nodes(self):
        mesh = np.meshgrid(*self.axes, indexing="ij")
        return np.stack([m.ravel() for m in mesh], axis=-1)

    # ---- convexity -------------------------------------------------------

    def convexity_defect(self):
        """Largest violation of ``u(p-d) + u(p+d) >= 2 u(p)`` over finite triples."""
        worst = 0.0
        v = self.values
        for d in _directions(self.n):
            fwd, mid = _shifted(v, d, 1)
            bwd, _ = _shifted(v, d, -1)
            c = v[mid]
            ok = np.isfinite(fwd) & np.isfinite(bwd) & np.isfinite(c)
            if np.any(ok):
                worst = max(worst, float(np.max(2 * c[ok] - fwd[ok] - bwd[ok])))
        return worst

    def is_convex(self, tol=CONVEXITY_TOL):
        scale = max(1.0, float(np.max(np.abs(self.values[np.isfinite(self.values)]), initial=0)))
        return self.convexity_defect() <= tol * scale

    # ---- evaluation ------------------------------------------------------

    def evaluate(self, x):
        x, single = as_points(x, self.n)
        out = np.full(x.shape[0], np.inf)
        t = (x - self.lo) / self.spacing
        inside = np.all((t >= -1e-12) & (t <= np.array(self.values.shape) - 1 + 1e-12), axis=1)
        if np.any(inside):
            ti = t[inside]
            base = np.clip(np.floor(ti).astype(int), 0, np.array(self.values.shape) - 2)
            frac = np.clip(ti - base, 0.0, 1.0)
            acc = np.zeros(ti.shape[0])
            for bits in itertools.product((0, 1), repeat=self.n):
                idx = tuple(base[:, k] + bits[k] for k in range(self.n))
                w = np.prod([frac[:, k] if bits[k] else 1 - frac[:, k] for k in range(self.n)],
                            axis=0)
                val = self.values[idx]
                # an infinite corner makes the whole cell infinite, even at weight 0
                acc = acc + np.where(np.isinf(val), np.inf, w * np.where(np.isinf(val), 0, val))
            out[inside] = acc
        return out[0] if single else out

    def gradient(self, x):
        x, _ = as_points(x, self.n)
        g = np.empty_like(x)
        for k in range(self.n):
            e = np.zeros(self.n)
            e[k] = self.spacing[k]
            g[:, k] = (self._eval(x + e) - self._eval(x - e)) / (2 * self.spacing[k])
        g[~np.all(np.isfinite(g), axis=1)] = np.nan
        return g

    def hessian(self, x):
        x, _ = as_points(x, self.n)
        H = np.empty((x.shape[0], self.n, self.n))
        f0 = self._eval(x)
        for i in range(self.n):
            ei = np.zeros(self.n)
            ei[i] = self.spacing[i]
            H[:, i, i] = (self._eval(x + ei) - 2 * f0 + self._eval(x - ei)) / self.spacing[i] ** 2
            for j in range(i + 1, self.n):
                ej = np.zeros(self.n)
                ej[j] = self.spacing[j]
                mixed = (self._eval(x + ei + ej) - self._eval(x + ei - ej)
                         - self._eval(x - ei + ej) + self._eval(x - ei - ej))
                H[:, i, j] = H[:, j, i] = mixed / (4 * self.spacing[i] * self.spacing[j])
        return H

    def domain_box(self):
        fin = np.isfinite(self.values)
        if not np.any(fin):
            raise PreconditionError("grid function is identically +inf")
        idx = np.argwhere(fin)
        return (self.lo + idx.min(axis=0) * self.spacing,
                self.lo + idx.max(axis=0) * self.spacing)

    # ---- operations ------------------------------------------------------

    def default_dual_box(self):
        lo, hi = np.empty(self.n), np.empty(self.n)
        for k in range(self.n):
            d = np.diff(self.values, axis=k) / self.spacing[k]
            d = d[np.isfinite(d)]
            if d.size == 0 or d.max() <= d.min():
                lo[k], hi[k] = -1.0, 1.0
            else:
                lo[k], hi[k] = d.min(), d.max()
        return lo, hi

    def legendre(self, dual_box=None, shape=None):
        """Discrete conjugate on a dual grid, one axis at a time."""
        lo, hi = self.default_dual_box() if dual_box is None else (vec(dual_box[0]), vec(dual_box[1]))
        shape = self.values.shape if shape is None else tuple(shape)
        yaxes = _axes(lo, hi, shape)
        F = -self.values
        for k in range(self.n - 1, -1, -1):
            F = maxplus_axis(F, self.axes[k], yaxes[k], k)
        return GridSampled(lo, hi, F, validate=False)

    def biconjugate(self, dual_box=None, shape=None):
        dual = self.legendre(dual_box, shape)
        return dual.legendre((self.lo, self.hi), self.values.shape)

    def epi_mult(self, lam):
        if not lam > 0:
            raise DomainError(f"epi-multiplication needs lambda > 0, got {lam}")
        return GridSampled(lam * self.lo, lam * self.hi, lam * self.values, validate=False)

    def project(self, E):
        """Minimise over grid fibres; ``E`` must be spanned by coordinate axes."""
        F = E.frame
        if E.n != self.n:
            raise DomainError(f"subspace lives in R^{E.n}, function in R^{self.n}")
        keep = []
        for col in F.T:
            nz = np.nonzero(np.abs(col) > 1e-12)[0]
            if nz.size != 1 or abs(abs(col[nz[0]]) - 1) > 1e-12:
                return super().project(E)
            keep.append((int(nz[0]), float(np.sign(col[nz[0]]))))
        drop = tuple(k for k in range(self.n) if k not in [a for a, _ in keep])
        v = np.min(self.values, axis=drop) if drop else self.values
        # reorder kept axes to the frame order, flipping negated axes
        order = sorted(a for a, _ in keep)
        perm = [order.index(a) for a, _ in keep]
        v = np.transpose(v, perm)
        lo, hi = [], []
        for pos, (a, sgn) in enumerate(keep):
            if sgn < 0:
                v = np.flip(v, axis=pos)
                lo.append(-self.hi[a])
                hi.append(-self.lo[a])
            else:
                lo.append(self.lo[a])
                hi.append(self.hi[a])
        return GridSampled(lo, hi, v, validate=False)

    def to_dict(self):
        vals = np.where(np.isinf(self.values), None, self.values.astype(object))
        return {"tag": self.tag, "lo": self.lo.tolist(), "hi": self.hi.tolist(),
                "values": vals.tolist()}

    @classmethod
    def from_dict(cls, d):
        vals = np.array(d["values"], dtype=object)
        vals = np.where(vals == None, np.inf, vals).astype(float)  # noqa: E711
        return cls(d["lo"], d["hi"], vals, validate=False)
