"""Functional intrinsic volumes.

Three routes compute ``Z_{j,zeta}(u)``:

``direct``
    midpoint quadrature of ``zeta(|grad u|) [D^2 u]_{n-j}`` over ``R^n``;
``kubota``
    Monte Carlo over ``Gr(j, n)`` of the gradient integrals of the
    projection functions, with the transformed density ``alpha``;
``measure``
    integration of ``zeta(|y|)`` against the discrete Hessian measure.
"""

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
import math

import numpy as np

from .convexfn import Subspace, radial_values
from .densities import check_hadwiger_class, unit_ball_volume, zeta_to_alpha
from .errors import DomainError, PreconditionError
from .measures import hessian_measure_smooth, hessian_symmetric, integrate_density
from .quadrature import KUBOTA_POINTS, default_points, midpoint_grid
from .rng import stream

KUBOTA_CHUNK = 500


@dataclass(frozen=True)
class KubotaConfig:
    """Settings of the Grassmannian Monte Carlo route."""

    j: int
    n: int
    sample_count: int = 10_000
    rng_seed: int = 0
    fiber_tol: float = 1e-8
    jobs: int = 1

    def __post_init__(self):
        if not 0 <= self.j <= self.n:
            raise DomainError(f"need 0 <= j <= n, got j={self.j}, n={self.n}")
        if self.sample_count < 1:
            raise DomainError("sample_count must be >= 1")


@dataclass
class ValuationReport:
    value: float
    stderr: float
    route: str
    metadata: dict = field(default_factory=dict)

    def to_dict(self):
        return {"value": self.value, "stderr": self.stderr, "route": self.route,
                "metadata": self.metadata}


def kubota_prefactor(j, n):
    """``kappa_n / (kappa_j kappa_{n-j}) * C(n, j)``."""
    return (unit_ball_volume(n) / (unit_ball_volume(j) * unit_ball_volume(n - j))
            * math.comb(n, j))


def _require_class(zeta, j, n):
    report = check_hadwiger_class(zeta, j, n)
    if not report.member:
        raise PreconditionError(f"density {zeta.name or '<anonymous>'} is not in "
                                f"Had({j},{n}): {report.diagnostics.get('reason', '')}")
    return report


# --------------------------------------------------------------------------
# direct quadrature
# --------------------------------------------------------------------------

def fiv_direct(u, j, zeta, points=None, box=None):
    """``int zeta(|grad u|) [D^2 u]_{n-j} dx`` by the tensor midpoint rule.

    The grid covers ``box``, by default a box containing the set where
    ``|grad u| <= support of zeta``.  For ``j = n`` the variant's own
    gradient integral is used (exact for the closed-form variants).
    """
    n = u.n
    if not 0 <= j <= n:
        raise DomainError(f"need 0 <= j <= n, got j={j}, n={n}")
    _require_class(zeta, j, n)
    meta = {"j": j, "n": n, "density": zeta.name, "function": u.tag}
    S = zeta.support_upper
    if S == 0.0:
        return ValuationReport(0.0, 0.0, "direct", meta)
    if j == n:
        return ValuationReport(float(u.gradient_integral(zeta, points, box)), 0.0, "direct", meta)
    if not u.smooth:
        raise PreconditionError(f"{u.tag}: the direct route for j < n needs a C^2 function")
    box = u.gradient_box(S) if box is None else box
    pts = points or default_points(n)
    nodes, cell, h = midpoint_grid(box[0], box[1], pts)
    g = u.gradient(nodes)
    s = np.linalg.norm(g, axis=1)
    live = s < S
    if zeta.singular_at_zero:
        # nodes where the gradient vanishes sit on a null set; shift them
        tiny = live & (s <= 1e-9)
        if np.any(tiny):
            nodes = nodes.copy()
            nodes[tiny] += 0.5 * h
            g[tiny] = u.gradient(nodes[tiny])
            s[tiny] = np.linalg.norm(g[tiny], axis=1)
    vals = radial_values(zeta, s[live])
    weight = hessian_symmetric(u.hessian(nodes[live]), n - j)
    meta["points"] = pts
    return ValuationReport(float(np.sum(vals * weight) * cell), 0.0, "direct", meta)


def fiv_measure(u, j, zeta, points=None, box=None):
    """``int zeta(|y|) dPsi_j^n(u, y)`` from the discrete Hessian measure."""
    n = u.n
    _require_class(zeta, j, n)
    S = zeta.support_upper
    meta = {"j": j, "n": n, "density": zeta.name, "function": u.tag}
    if S == 0.0:
        return ValuationReport(0.0, 0.0, "measure", meta)
    box = u.gradient_box(S) if box is None else box
    mu = hessian_measure_smooth(u, j, points=points, box=box)
    return ValuationReport(integrate_density(mu, zeta), 0.0, "measure", meta)


# --------------------------------------------------------------------------
# Cauchy-Kubota route
# --------------------------------------------------------------------------

def _haar_frame(seed, index, n, j):
    z = stream(seed, index).standard_normal((n, n))
    q, r = np.linalg.qr(z)
    q = q * np.where(np.diag(r) < 0, -1.0, 1.0)
    return q[:, :j]


def sample_grassmannian(n, j, count, seed):
    """Haar-distributed ``j``-subspaces of ``R^n``.

    Sample ``i`` is the first ``j`` columns of the sign-normalised QR factor
    of a Gaussian matrix drawn from the stream keyed by ``(seed, i)``.
    """
    if not 1 <= j <= n - 1:
        raise DomainError(f"need 1 <= j <= n-1, got j={j}, n={n}")
    return [Subspace(_haar_frame(seed, i, n, j)) for i in range(count)]


def _inner_values(u, alpha, cfg, indices):
    pts = KUBOTA_POINTS.get(cfg.j)
    out = np.empty(len(indices))
    for k, i in enumerate(indices):
        E = Subspace(_haar_frame(cfg.rng_seed, i, cfg.n, cfg.j))
        out[k] = u.project(E).gradient_integral(alpha, points=pts)
    return out


def fiv_kubota(u, j, zeta, cfg=None):
    """Grassmannian Monte Carlo estimate of ``Z_{j,zeta}(u)``.

    Each sample ``E`` contributes ``int alpha(|grad proj_E u|) dx_E``; the
    estimate is the prefactor times the sample mean.  Samples are split in
    fixed chunks and reduced in index order, so the result does not depend
    on ``cfg.jobs``.
    """
    n = u.n
    cfg = cfg or KubotaConfig(j, n)
    if cfg.j != j or cfg.n != n:
        raise DomainError("KubotaConfig does not match (j, n)")
    if j == n:
        rep = fiv_direct(u, j, zeta)
        rep.route = "kubota"
        rep.metadata["note"] = "Gr(n, n) is a point; identical to the direct route"
        return rep
    report = _require_class(zeta, j, n)
    meta = {"j": j, "n": n, "density": zeta.name, "function": u.tag,
            "sample_count": cfg.sample_count, "seed": cfg.rng_seed}
    alpha = zeta_to_alpha(zeta, j, n, report)
    if j == 0:
        # Gr(0, n) = {0}: the projection is the constant min u and its gradient is 0
        val = float(radial_values(alpha, np.array([0.0]))[0])
        return ValuationReport(val, 0.0, "kubota", meta)
    pref = kubota_prefactor(j, n)
    N = cfg.sample_count
    chunks = [list(range(a, min(a + KUBOTA_CHUNK, N))) for a in range(0, N, KUBOTA_CHUNK)]
    if cfg.jobs > 1 and len(chunks) > 1:
        with ThreadPoolExecutor(max_workers=cfg.jobs) as pool:
            parts = list(pool.map(lambda c: _inner_values(u, alpha, cfg, c), chunks))
    else:
        parts = [_inner_values(u, alpha, cfg, c) for c in chunks]
    v = np.concatenate(parts)
    if np.all(v == v[0]):
        return ValuationReport(pref * float(v[0]), 0.0, "kubota", meta)
    mean = math.fsum(v) / N
    stderr = pref * float(np.std(v, ddof=1)) / math.sqrt(N) if N > 1 else 0.0
    return ValuationReport(pref * mean, stderr, "kubota", meta)


def cone_alpha_identity(t, j, alpha):
    """``kappa_j alpha(t)``: the Grassmannian inner integral for ``t|x| + I_{B^n}``."""
    if not t >= 0:
        raise DomainError("t must be >= 0")
    return unit_ball_volume(j) * float(radial_values(alpha, np.array([float(t)]))[0])


def sigma_from_xi(xi, j, z):
    """``C(n, j) xi(z' / |z_{n+1}|) |z_{n+1}|^{n-j+1}`` on the lower half-sphere."""
    z = np.asarray(z, dtype=float)
    n = z.size - 1
    if abs(np.linalg.norm(z) - 1.0) > 1e-10:
        raise DomainError("z must lie on the unit sphere")
    if not z[-1] < 0:
        raise DomainError("z must lie in the open lower half-sphere (z_{n+1} < 0)")
    h = abs(z[-1])
    return math.comb(n, j) * float(xi(z[:-1] / h)) * h ** (n - j + 1)
