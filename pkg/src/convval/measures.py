"""Hessian measures as weighted particle lists.

``Psi_j^n(u, .)`` is approximated by pushing the tensor midpoint rule forward
under ``grad u`` with weights ``[D^2 u]_{n-j}``; ``Phi_j^n(v, .)`` is the
conjugate-side measure with density ``[D^2 v]_j`` in ``x``.  For piecewise
linear ``v`` the Monge-Ampere measure ``Phi_n^n`` is a sum of atoms at the
vertices of the linearity complex.
"""

from dataclasses import dataclass, field
import math

import numpy as np

from .convexfn import (ConeBall, Cylinder, Embedded, MaxAffine, PiecewiseLinearSum,
                       PointwiseSum, Polytope, Subspace, SupportPlusIndicator,
                       radial_values, subdifferential_pl)
from .densities import Density
from .errors import DomainError, PreconditionError
from .quadrature import default_points, gauss_legendre, midpoint_grid
from .transforms import abel_k

PANEL_RADIUS = 0.5
PANEL_OFFSETS = (0.0, 0.3, 0.6, 0.9, 1.2)
POLAR_PANELS = 32
POLAR_PANEL_NODES = 16
POLAR_ANGULAR_NODES = 512


@dataclass
class DiscreteMeasure:
    """Non-negative weighted particles in ``R^n``."""

    n: int
    locations: np.ndarray
    weights: np.ndarray
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        self.locations = np.asarray(self.locations, dtype=float).reshape(-1, self.n)
        self.weights = np.asarray(self.weights, dtype=float).reshape(-1)
        if self.locations.shape[0] != self.weights.size:
            raise DomainError("one weight per particle is required")
        if np.any(self.weights < 0):
            raise PreconditionError("measure weights must be non-negative")

    @classmethod
    def zero(cls, n, **meta):
        return cls(n, np.zeros((0, n)), np.zeros(0), dict(meta))

    def __len__(self):
        return self.weights.size

    @property
    def total_mass(self):
        return float(np.sum(self.weights))

    def to_dict(self):
        return {"n": self.n, "locations": self.locations.tolist(),
                "weights": self.weights.tolist(), "meta": self.meta}

    @classmethod
    def from_dict(cls, d):
        return cls(d["n"], np.asarray(d["locations"], dtype=float).reshape(-1, d["n"]),
                   d["weights"], d.get("meta", {}))


@dataclass
class AssertionRecord:
    """Outcome of an identity check between two independently computed sides."""

    name: str
    lhs: list
    rhs: list
    discrepancy: float
    tolerance: float
    meta: dict = field(default_factory=dict)

    @property
    def passed(self):
        return bool(self.discrepancy < self.tolerance)

    def to_dict(self):
        return {"name": self.name, "lhs": list(self.lhs), "rhs": list(self.rhs),
                "discrepancy": self.discrepancy, "tolerance": self.tolerance,
                "passed": self.passed, "meta": self.meta}


def relative_discrepancy(a, b):
    a, b = float(a), float(b)
    scale = max(abs(a), abs(b))
    return 0.0 if scale == 0.0 else abs(a - b) / scale


# --------------------------------------------------------------------------
# elementary symmetric functions
# --------------------------------------------------------------------------

def elementary_symmetric(eigenvalues, k):
    """``e_k`` of the trailing-axis entries (``e_0 = 1``), batched over leading axes."""
    lam = np.asarray(eigenvalues, dtype=float)
    n = lam.shape[-1] if lam.ndim else 0
    if not 0 <= k <= n:
        raise DomainError(f"k must lie in [0, {n}], got {k}")
    e = [np.ones(lam.shape[:-1])] + [np.zeros(lam.shape[:-1]) for _ in range(k)]
    for i in range(n):
        li = lam[..., i]
        for m in range(min(i + 1, k), 0, -1):
            e[m] = e[m] + li * e[m - 1]
    return e[k] if lam.ndim > 1 else float(e[k])


def hessian_symmetric(H, k):
    """``[H]_k`` for a stack of symmetric matrices."""
    if k == 0:
        return np.ones(H.shape[0])
    return elementary_symmetric(np.linalg.eigvalsh(H), k)


# --------------------------------------------------------------------------
# Hessian measures
# --------------------------------------------------------------------------

def _check_j(j, n):
    if not 0 <= j <= n:
        raise DomainError(f"j must lie in [0, {n}], got {j}")


def _default_box(u, gradient_radius):
    box = u.domain_box()
    if box is None:
        box = u.gradient_box(gradient_radius)
    return box


def hessian_measure_smooth(u, j, points=None, box=None, gradient_radius=2.0):
    """Particles ``(grad u(x_i), [D^2 u(x_i)]_{n-j} * cell)`` on a midpoint grid.

    ``box`` defaults to the domain box, or for finite-valued ``u`` to a box
    containing ``{|grad u| <= gradient_radius}``; the measure is exact on
    Borel sets inside that gradient ball.  For ``j = n`` no second
    derivatives are needed and ``ConeBall`` is accepted.
    """
    n = u.n
    _check_j(j, n)
    if j < n and not u.smooth:
        raise PreconditionError(f"{u.tag}: Hessian measures with j < n need a C^2 function")
    if j == n and not (u.smooth or isinstance(u, ConeBall)):
        raise PreconditionError(f"{u.tag}: no pushforward construction for this variant")
    box = _default_box(u, gradient_radius) if box is None else box
    pts = points or default_points(n)
    nodes, cell, h = midpoint_grid(box[0], box[1], pts)
    g = u.gradient_on_nodes(nodes, h)
    keep = np.all(np.isfinite(g), axis=1)
    nodes, g = nodes[keep], g[keep]
    if j == n:
        w = np.full(nodes.shape[0], cell)
    else:
        w = hessian_symmetric(u.hessian(nodes), n - j) * cell
        w = np.where(np.abs(w) < 1e-14 * cell, np.abs(w), w)
        fin = np.isfinite(w)
        g, w = g[fin], w[fin]
    return DiscreteMeasure(n, g, w, {"source": u.tag, "j": j, "points": pts,
                                     "box": [np.asarray(box[0]).tolist(),
                                             np.asarray(box[1]).tolist()]})


def integrate_density(mu, beta):
    """``sum_i w_i beta(y_i)``; a :class:`Density` is read as ``beta(|y|)``."""
    if len(mu) == 0:
        return 0.0
    if isinstance(beta, Density):
        vals = radial_values(beta, np.linalg.norm(mu.locations, axis=1))
    else:
        vals = np.asarray(beta(mu.locations), dtype=float)
    return float(np.sum(mu.weights * vals))


# --------------------------------------------------------------------------
# Monge-Ampere measure of piecewise linear functions
# --------------------------------------------------------------------------

def monge_ampere_pl(v, region):
    """Atoms ``vol(dv(x)) delta_x`` at the vertices of piecewise linear ``v``.

    ``region`` is a box ``(lo, hi)``; vertices outside it are dropped and
    the result is flagged ``incomplete``.
    """
    lo, hi = (np.atleast_1d(np.asarray(b, dtype=float)) for b in region)
    if isinstance(v, PiecewiseLinearSum):
        cands = v.vertices()
        vol = lambda x: subdifferential_pl(v, x).volume()
    elif isinstance(v, MaxAffine):
        cands = v.vertices()
        vol = lambda x: Polytope(v.slopes[v.active(x)]).volume()
    elif isinstance(v, SupportPlusIndicator) and v.Q is None:
        cands = np.zeros((1, v.n))
        vol = lambda x: v.P.volume()
    else:
        raise PreconditionError(f"{v.tag} is not a finite piecewise linear function")
    locs, weights, missed = [], [], 0
    for x in cands:
        if np.all(x >= lo) and np.all(x <= hi):
            w = vol(x)
            if w > 0:
                locs.append(x)
                weights.append(w)
        else:
            missed += 1
    meta = {"source": v.tag, "j": v.n, "incomplete": missed > 0, "missed_vertices": missed}
    return DiscreteMeasure(v.n, np.array(locs).reshape(-1, v.n), np.array(weights), meta)


# --------------------------------------------------------------------------
# identity checks
# --------------------------------------------------------------------------

def _bump(s):
    s = np.asarray(s, dtype=float)
    out = np.zeros_like(s)
    m = s < 1
    out[m] = np.exp(1.0 - 1.0 / (1.0 - s[m] ** 2))
    return out


def density_panel(n, offsets=PANEL_OFFSETS, radius=PANEL_RADIUS):
    """Smooth bumps of radius ``radius`` centred at staggered distances."""
    panel = []
    for k, r in enumerate(offsets):
        direction = np.zeros(n)
        direction[0] = math.cos(0.7 * k)
        if n > 1:
            direction[1] = math.sin(0.7 * k)
        c = r * direction
        panel.append((c, lambda y, c=c: _bump(np.linalg.norm(y - c, axis=-1) / radius)))
    return panel


def _polar_rule(n, R, centre):
    """Graded polar rule ``rho = R sigma^3`` on the disk of radius ``R``.

    Composite Gauss-Legendre panels in ``sigma`` and the periodic
    trapezoid rule in the angle.
    """
    if n != 2:
        raise DomainError("polar rule is two-dimensional")
    parts = [gauss_legendre(POLAR_PANEL_NODES, k / POLAR_PANELS, (k + 1) / POLAR_PANELS)
             for k in range(POLAR_PANELS)]
    sig = np.concatenate([p[0] for p in parts])
    ws = np.concatenate([p[1] for p in parts])
    theta = 2 * np.pi * np.arange(POLAR_ANGULAR_NODES) / POLAR_ANGULAR_NODES
    rho = R * sig ** 3
    jac = 3 * R * sig ** 2 * rho * ws * (2 * np.pi / POLAR_ANGULAR_NODES)
    pts = np.stack([np.outer(rho, np.cos(theta)).ravel(),
                    np.outer(rho, np.sin(theta)).ravel()], axis=-1) + centre
    return pts, np.repeat(jac, POLAR_ANGULAR_NODES)


def conjugate_transport(u, j, tolerance=1e-4, points=None):
    """Compare ``int beta dPsi_j^n(u)`` with ``int beta dPhi_j^n(u*)`` on a panel.

    The left side pushes a midpoint grid forward under ``grad u``; the right
    side integrates ``beta(x) [D^2 u*(x)]_j`` directly in ``x``.
    """
    n = u.n
    _check_j(j, n)
    v = u.legendre()
    if not v.smooth:
        raise PreconditionError(f"conjugate of {u.tag} is not smooth")
    panel = density_panel(n)
    reach = max(np.linalg.norm(c) for c, _ in panel) + PANEL_RADIUS
    mu = hessian_measure_smooth(u, j, points=points, box=u.gradient_box(reach))
    lhs = [integrate_density(mu, beta) for _c, beta in panel]
    if n == 2:
        centre = getattr(v, "center", np.zeros(n))
        nodes, w = _polar_rule(n, reach + np.linalg.norm(centre), centre)
    else:
        nodes, cell, _h = midpoint_grid(-reach * np.ones(n), reach * np.ones(n),
                                        points or default_points(n))
        w = np.full(nodes.shape[0], cell)
    dens = hessian_symmetric(v.hessian(nodes), j) if j else np.ones(nodes.shape[0])
    rhs = [float(np.sum(w * dens * beta(nodes))) for _c, beta in panel]
    disc = max(relative_discrepancy(a, b) for a, b in zip(lhs, rhs))
    return AssertionRecord("conjugate_transport", lhs, rhs, disc, tolerance,
                           {"function": u.tag, "j": j, "n": n})


def _box_phi(w, l, lo, hi, points):
    """``Phi_l(w, box) = int_box [D^2 w]_l dx`` by the midpoint rule."""
    lo, hi = np.atleast_1d(lo), np.atleast_1d(hi)
    if l == 0:
        return float(np.prod(hi - lo))
    nodes, cell, _h = midpoint_grid(lo, hi, points or default_points(lo.size))
    return float(np.sum(hessian_symmetric(w.hessian(nodes), l)) * cell)


def product_decomposition_check(vE, vF, l, B, tolerance=0.01, points=None):
    """Check ``Phi_l^n(vE + vF, B)`` against the sum of products over ``E`` and ``F``.

    ``E`` is spanned by the first ``k = vE.n`` coordinates and ``F`` by the
    rest; ``B = (lo, hi)`` is a box, so ``B cap E`` and ``B cap F`` are its
    coordinate faces.
    """
    k, m = vE.n, vF.n
    n = k + m
    lo, hi = np.atleast_1d(np.asarray(B[0], dtype=float)), np.atleast_1d(np.asarray(B[1], dtype=float))
    if lo.size != n or not 0 <= l <= n:
        raise DomainError("box or index does not match dim E + dim F")
    E = Subspace.coordinate(n, range(k))
    F = Subspace.coordinate(n, range(k, n))
    v = PointwiseSum([Cylinder(vE, E.frame), Cylinder(vF, F.frame)])
    lhs = _box_phi(v, l, lo, hi, points)
    rhs = 0.0
    for i in range(max(0, k + l - n), min(k, l) + 1):
        rhs += (_box_phi(vE, i, lo[:k], hi[:k], None)
                * _box_phi(vF, l - i, lo[k:], hi[k:], None))
    return AssertionRecord("product_decomposition", [lhs], [rhs],
                           relative_discrepancy(lhs, rhs), tolerance,
                           {"k": k, "n": n, "l": l})


def lower_dim_extension_check(u, j, zeta, tolerance=0.01, points=None):
    """Compare ``int xi(|y|) dPsi_j^n(u)`` with ``int_E A^{n-k} xi(|y_E|) dPsi_j^k(u|_E)``.

    ``u`` must be an :class:`Embedded` function, i.e. ``dom u`` lies in the
    subspace spanned by its frame.  The left side integrates
    ``xi(|y|) [D^2 u*(y)]_j`` over ``R^n`` (``u*`` is constant along
    ``E^perp``); the right side is the ``k``-dimensional pushforward.
    """
    if not isinstance(u, Embedded) or np.any(u.offset):
        raise PreconditionError("dom u must lie in a linear subspace (use Embedded)")
    w = u.base
    n, k = u.n, w.n
    if not 1 <= j <= k < n:
        raise DomainError(f"need 1 <= j <= k < n, got j={j}, k={k}, n={n}")
    S = zeta.support_upper
    if S == 0.0:
        return AssertionRecord("lower_dim_extension", [0.0], [0.0], 0.0, tolerance,
                               {"n": n, "k": k, "j": j})
    ustar = u.legendre()
    nodes, cell, _h = midpoint_grid(-S * np.ones(n), S * np.ones(n), points or default_points(n))
    inside = np.linalg.norm(nodes, axis=1) < S
    y = nodes[inside]
    lhs = float(np.sum(radial_values(zeta, np.linalg.norm(y, axis=1))
                       * hessian_symmetric(ustar.hessian(y), j)) * cell)
    A = abel_k(zeta, n - k)
    box = w.gradient_box(S)
    xs, cell_k, hk = midpoint_grid(box[0], box[1], default_points(k))
    g = w.gradient_on_nodes(xs, hk)
    ok = np.all(np.isfinite(g), axis=1)
    s = np.linalg.norm(g[ok], axis=1)
    live = s < S
    vals = np.zeros(s.size)
    vals[live] = A(s[live]) if np.all(s[live] > 0) else radial_values(A, s[live])
    weight = hessian_symmetric(w.hessian(xs[ok]), k - j)
    rhs = float(np.sum(vals * weight) * cell_k)
    return AssertionRecord("lower_dim_extension", [lhs], [rhs],
                           relative_discrepancy(lhs, rhs), tolerance,
                           {"n": n, "k": k, "j": j, "density": zeta.name})
