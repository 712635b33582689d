"""Densities on (0, inf) with bounded support.

A :class:`Density` wraps a vectorised evaluation handle together with the
metadata the valuation routes need: the support bound, whether the density
blows up at 0, and (when it exists) the limit at 0.

Three kinds are supported:

``piecewise-polynomial``
    Pieces ``[lo, hi]`` carrying generalised polynomials ``sum c * s**p``
    with real exponents (negative exponents allowed, which is how singular
    members of the Hadwiger classes are represented exactly).  Moment
    integrals and the Cauchy-Kubota density map are computed in closed form.
``closed-form``
    An arbitrary vectorised callable, optionally with its derivative.
``sampled-grid``
    Samples interpolated with a monotone cubic (PCHIP).  These cannot carry
    singularities at 0 faithfully; use a closed-form density for those.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import cached_property
from typing import Callable, Optional, Sequence

import numpy as np
from scipy.interpolate import PchipInterpolator

from .errors import DomainError, EvaluationError, PreconditionError
from .quadrature import integrate_intervals

KINDS = ("closed-form", "piecewise-polynomial", "sampled-grid")

LIMIT_STEPS = 21           # s_k = s_0 * 2**-k, k = 0..20
LIMIT_CAUCHY_TOL = 1e-6
LIMIT_CAUCHY_RUN = 3
MEMBERSHIP_TOL = 1e-5

_EXPR_NAMESPACE = {
    name: getattr(np, name)
    for name in ("exp", "log", "sqrt", "cosh", "sinh", "tanh", "cos", "sin",
                 "abs", "maximum", "minimum", "where", "power", "arccosh",
                 "clip", "heaviside")
}
_EXPR_NAMESPACE["pi"] = math.pi


def unit_ball_volume(j):
    """Volume of the ``j``-dimensional unit ball; ``kappa_0 = 1``."""
    if j < 0:
        raise DomainError(f"dimension must be >= 0, got {j}")
    return math.pi ** (j / 2) / math.gamma(j / 2 + 1)


# --------------------------------------------------------------------------
# generalised polynomial pieces
# --------------------------------------------------------------------------

@dataclass(frozen=True)
class Piece:
    """``sum(c * s**p for c, p in terms)`` on ``lo < s <= hi``."""

    lo: float
    hi: float
    terms: tuple

    def __call__(self, s):
        s = np.asarray(s, dtype=float)
        out = np.zeros_like(s)
        for c, p in self.terms:
            out = out + c * np.power(s, p)
        return out

    def derivative(self, s):
        s = np.asarray(s, dtype=float)
        out = np.zeros_like(s)
        for c, p in self.terms:
            if p != 0:
                out = out + c * p * np.power(s, p - 1)
        return out

    def shifted(self, m):
        """The piece multiplied by ``s**m``."""
        return Piece(self.lo, self.hi, tuple((c, p + m) for c, p in self.terms))

    def has_log_antiderivative(self):
        return any(p == -1 for _c, p in self.terms)

    def antiderivative(self, s):
        # valid only when no exponent equals -1
        s = np.asarray(s, dtype=float)
        out = np.zeros_like(s)
        for c, p in self.terms:
            out = out + c * np.power(s, p + 1) / (p + 1)
        return out

    def integral(self, a, b):
        """Exact integral over [a, b] within the piece."""
        a = np.asarray(a, dtype=float)
        b = np.asarray(b, dtype=float)
        out = np.zeros(np.broadcast(a, b).shape)
        for c, p in self.terms:
            if p == -1:
                with np.errstate(divide="ignore"):
                    out = out + c * (np.log(b) - np.log(a))
            else:
                with np.errstate(divide="ignore", invalid="ignore"):
                    out = out + c * (np.power(b, p + 1) - np.power(a, p + 1)) / (p + 1)
        return out


def _clean_terms(terms):
    merged = {}
    for c, p in terms:
        merged[float(p)] = merged.get(float(p), 0.0) + float(c)
    return tuple((c, p) for p, c in sorted(merged.items()) if c != 0.0)


# --------------------------------------------------------------------------
# Density
# --------------------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class Density:
    """A density ``zeta`` on (0, inf) vanishing on (support_upper, inf)."""

    kind: str
    support_upper: float
    singular_at_zero: bool = False
    value_at_zero: Optional[float] = None
    name: str = ""
    fn: Optional[Callable] = field(default=None, repr=False)
    deriv: Optional[Callable] = field(default=None, repr=False)
    pieces: tuple = field(default=(), repr=False)
    samples: Optional[tuple] = field(default=None, repr=False)
    expression: Optional[str] = field(default=None, repr=False)
    derivative_expression: Optional[str] = field(default=None, repr=False)
    c1: bool = False

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"unknown density kind {self.kind!r}")
        if not self.support_upper >= 0:
            raise ValueError("support_upper must be >= 0")

    # ---- constructors ----------------------------------------------------

    @classmethod
    def zero(cls):
        return cls.piecewise([], name="zero")

    @classmethod
    def piecewise(cls, pieces, name=""):
        """Build from ``[(lo, hi, [(coef, power), ...]), ...]``."""
        built = []
        for lo, hi, terms in pieces:
            if not 0 <= lo < hi:
                raise ValueError(f"bad piece bounds [{lo}, {hi}]")
            built.append(Piece(float(lo), float(hi), _clean_terms(terms)))
        built.sort(key=lambda p: p.lo)
        for a, b in zip(built, built[1:]):
            if b.lo < a.hi:
                raise ValueError("pieces overlap")
        built = tuple(p for p in built if p.terms)
        upper = max((p.hi for p in built), default=0.0)
        first = built[0] if built and built[0].lo == 0.0 else None
        singular = bool(first and any(p < 0 for _c, p in first.terms))
        at_zero = None
        if not singular:
            at_zero = 0.0 if first is None else sum(c for c, p in first.terms if p == 0)
        return cls("piecewise-polynomial", upper, singular, at_zero, name,
                   pieces=built)

    @classmethod
    def closed_form(cls, fn, support_upper, *, derivative=None,
                    singular_at_zero=False, value_at_zero=None, name="",
                    c1=False):
        return cls("closed-form", float(support_upper), bool(singular_at_zero),
                   value_at_zero, name, fn=fn, deriv=derivative, c1=c1)

    @classmethod
    def from_expression(cls, expression, support_upper, *, derivative=None,
                        singular_at_zero=False, value_at_zero=None, name=""):
        """Density given by a numpy expression in the variable ``s``."""
        fn = _compile_expression(expression)
        dfn = _compile_expression(derivative) if derivative else None
        return cls("closed-form", float(support_upper), bool(singular_at_zero),
                   value_at_zero, name, fn=fn, deriv=dfn,
                   expression=expression, derivative_expression=derivative)

    @classmethod
    def sampled(cls, s, values, *, support_upper=None, value_at_zero=None,
                name=""):
        s = np.asarray(s, dtype=float)
        values = np.asarray(values, dtype=float)
        if s.ndim != 1 or s.shape != values.shape or s.size < 2:
            raise ValueError("samples must be two 1-D arrays of equal length >= 2")
        if np.any(np.diff(s) <= 0) or s[0] < 0:
            raise ValueError("sample abscissae must be increasing and >= 0")
        if not np.all(np.isfinite(values)):
            raise ValueError("sampled densities must have finite values")
        if support_upper is None:
            nz = np.nonzero(values)[0]
            support_upper = float(s[min(nz[-1] + 1, s.size - 1)]) if nz.size else 0.0
        if value_at_zero is None and s[0] == 0.0:
            value_at_zero = float(values[0])
        return cls("sampled-grid", float(support_upper), False, value_at_zero,
                   name, samples=(s, values))

    # ---- evaluation ------------------------------------------------------

    @cached_property
    def _interp(self):
        s, v = self.samples
        return PchipInterpolator(s, v, extrapolate=False)

    def _raw(self, s):
        if self.kind == "piecewise-polynomial":
            out = np.zeros_like(s)
            for p in self.pieces:
                m = (s > p.lo) & (s <= p.hi)
                if np.any(m):
                    out[m] = p(s[m])
            return out
        if self.kind == "closed-form":
            with np.errstate(all="ignore"):
                return np.broadcast_to(np.asarray(self.fn(s), dtype=float), s.shape).copy()
        lo = self.samples[0][0]
        out = self._interp(np.clip(s, lo, None))
        return np.nan_to_num(out, nan=0.0)

    def _raw_support(self, s):
        """Raw values with the support mask applied, no validation."""
        s = np.asarray(s, dtype=float)
        out = np.zeros(s.shape)
        m = (s > 0) & (s <= self.support_upper)
        if np.any(m):
            out[m] = self._raw(s[m])
        return out

    def __call__(self, s):
        return eval_density(self, s)

    def derivative(self, s):
        """The derivative ``zeta'(s)`` (exact or 5-point differences)."""
        s = np.asarray(s, dtype=float)
        scalar = s.ndim == 0
        s = np.atleast_1d(s)
        out = np.zeros_like(s)
        inside = s <= self.support_upper
        if np.any(inside):
            si = s[inside]
            if self.kind == "piecewise-polynomial":
                d = np.zeros_like(si)
                for p in self.pieces:
                    m = (si > p.lo) & (si <= p.hi)
                    d[m] = p.derivative(si[m])
            elif self.kind == "closed-form":
                if self.deriv is None:
                    raise PreconditionError(
                        f"density {self.name or '<anonymous>'} has no derivative")
                with np.errstate(all="ignore"):
                    d = np.broadcast_to(np.asarray(self.deriv(si), dtype=float),
                                        si.shape).copy()
            else:
                d = _five_point(self, si)
            out[inside] = d
        if not np.all(np.isfinite(out)):
            bad = s[~np.isfinite(out)][0]
            raise EvaluationError(f"non-finite derivative at s={bad!r}", at=float(bad))
        return out[0] if scalar else out

    @property
    def has_derivative(self):
        return self.kind != "closed-form" or self.deriv is not None

    # ---- moments ---------------------------------------------------------

    def moment_tail(self, s, m):
        """``int_s^inf t**m zeta(t) dt`` for each ``s`` (vectorised).

        Exact for piecewise densities; otherwise adaptive quadrature over a
        geometric partition of ``[s, support_upper]`` so integrable
        singularities near ``s`` are resolved.
        """
        s = np.atleast_1d(np.asarray(s, dtype=float))
        S = self.support_upper
        if S == 0.0:
            return np.zeros_like(s)
        if self.kind == "piecewise-polynomial":
            out = np.zeros_like(s)
            for p in self.pieces:
                q = p.shifted(m)
                a = np.clip(s, p.lo, p.hi)
                # a == 0 only when lo == 0 and s == 0
                with np.errstate(divide="ignore", invalid="ignore"):
                    out = out + np.where(a < p.hi, q.integral(a, p.hi), 0.0)
            return out
        return _geometric_tail(self, s, m)

    def to_dict(self):
        return density_to_dict(self)


def _compile_expression(expression):
    code = compile(expression, "<density>", "eval")
    for name in code.co_names:
        if name not in _EXPR_NAMESPACE and name != "s":
            raise ValueError(f"unknown name {name!r} in expression {expression!r}")

    def fn(s):
        return eval(code, {"__builtins__": {}}, dict(_EXPR_NAMESPACE, s=s))

    return fn


def _five_point(zeta, s):
    s = np.asarray(s, dtype=float)
    h = 1e-4 * max(zeta.support_upper, 1.0)
    lo = zeta.samples[0][0] if zeta.samples is not None else 0.0
    f = lambda x: zeta._raw(np.asarray(x, dtype=float))
    central = (f(s - 2 * h) - 8 * f(s - h) + 8 * f(s + h) - f(s + 2 * h)) / (12 * h)
    forward = (-25 * f(s) + 48 * f(s + h) - 36 * f(s + 2 * h)
               + 16 * f(s + 3 * h) - 3 * f(s + 4 * h)) / (12 * h)
    return np.where(s - 2 * h < lo, forward, central)


def _geometric_tail(zeta, s, m):
    S = zeta.support_upper
    out = np.zeros_like(s)
    live = s < S
    if not np.any(live):
        return out
    # breakpoints s, 2s, 4s, ... capped at S, one interval per (s, level)
    lows, highs, owner = [], [], []
    for i in np.nonzero(live)[0]:
        a = s[i]
        levels = max(1, int(math.ceil(math.log2(S / a)))) if a > 0 else 1
        edges = np.minimum(a * 2.0 ** np.arange(levels + 1), S)
        edges[-1] = S
        lows.append(edges[:-1])
        highs.append(edges[1:])
        owner.append(np.full(levels, i))
    lows = np.concatenate(lows)
    highs = np.concatenate(highs)
    owner = np.concatenate(owner)

    def g(t):
        with np.errstate(all="ignore"):
            return np.power(t, m) * zeta._raw(t)

    piece_vals = integrate_intervals(g, lows, highs)
    np.add.at(out, owner, piece_vals)
    return out


def eval_density(zeta, s):
    """Evaluate ``zeta`` at ``s`` (scalar or array).

    Points above ``support_upper`` give exactly 0.  ``s = 0`` is accepted
    only for densities with a known limit at 0.
    """
    arr = np.asarray(s, dtype=float)
    scalar = arr.ndim == 0
    arr = np.atleast_1d(arr)
    if np.any(arr < 0) or np.any(np.isnan(arr)):
        raise DomainError("densities are defined for s > 0")
    out = np.zeros_like(arr)
    zero = arr == 0
    if np.any(zero):
        if zeta.value_at_zero is None:
            raise DomainError(f"density {zeta.name or '<anonymous>'} has no value at 0")
        out[zero] = zeta.value_at_zero
    inside = (arr > 0) & (arr <= zeta.support_upper)
    if np.any(inside):
        vals = zeta._raw(arr[inside])
        if not np.all(np.isfinite(vals)):
            bad = arr[inside][~np.isfinite(vals)][0]
            raise EvaluationError(f"density evaluation is not finite at s={bad!r}",
                                  at=float(bad))
        out[inside] = vals
    return float(out[0]) if scalar else out


# --------------------------------------------------------------------------
# Hadwiger classes
# --------------------------------------------------------------------------

@dataclass
class HadwigerClassReport:
    j: int
    n: int
    limit_moment_zero: float
    tail_integral_limit: float
    member: bool
    diagnostics: dict = field(default_factory=dict)


def _aitken(x):
    """Aitken delta-squared transform (falls back to raw where degenerate)."""
    x = np.asarray(x, dtype=float)
    if x.size < 3:
        return x.copy()
    d1 = x[2:] - x[1:-1]
    d2 = x[2:] - 2 * x[1:-1] + x[:-2]
    scale = np.maximum(1.0, np.abs(x[2:]))
    ok = np.abs(d2) > 1e-13 * scale
    with np.errstate(divide="ignore", invalid="ignore"):
        acc = np.where(ok, x[2:] - d1 * d1 / np.where(ok, d2, 1.0), x[2:])
    # a ratio d1/d_prev outside (-1, 1) means no geometric convergence
    return acc


def _limit(seq, tol=LIMIT_CAUCHY_TOL, run=LIMIT_CAUCHY_RUN):
    acc = _aitken(seq)
    if not np.all(np.isfinite(acc)):
        return float("nan"), False, acc
    diffs = np.abs(np.diff(acc))
    converged = diffs.size >= run and bool(np.all(diffs[-run:] < tol))
    return float(acc[-1]), converged, acc


def default_s_sequence(zeta):
    s0 = zeta.support_upper / 4 if zeta.support_upper > 0 else 0.25
    return s0 * 2.0 ** -np.arange(LIMIT_STEPS)


def check_hadwiger_class(zeta, j, n, s_sequence=None):
    """Numerically test whether ``zeta`` belongs to the class Had(j, n).

    For ``j < n`` both ``lim s^(n-j) zeta(s)`` (must vanish) and
    ``lim int_s^inf t^(n-j-1) zeta(t) dt`` (must exist) are estimated along
    a decreasing sequence, accelerated with Aitken's transform.  For
    ``j = n`` only the existence of ``lim zeta(s)`` is tested.
    """
    if not (0 <= j <= n):
        raise DomainError(f"need 0 <= j <= n, got j={j}, n={n}")
    s = default_s_sequence(zeta) if s_sequence is None else np.asarray(s_sequence, float)
    if np.any(np.diff(s) >= 0) or np.any(s <= 0):
        raise ValueError("s_sequence must be positive and strictly decreasing")
    diag = {"cauchy_tol": LIMIT_CAUCHY_TOL, "cauchy_run": LIMIT_CAUCHY_RUN,
            "membership_tol": MEMBERSHIP_TOL, "s_sequence": s.tolist()}
    m = n - j
    raw_moment = np.power(s, m) * eval_density(zeta, s)
    moment, moment_ok, _ = _limit(raw_moment)
    diag["moment_sequence"] = raw_moment.tolist()
    diag["moment_converged"] = moment_ok
    if m == 0:
        member = moment_ok and math.isfinite(moment)
        if not member:
            diag["reason"] = "lim zeta(s) as s->0+ not established"
        return HadwigerClassReport(j, n, moment, float("nan"), member, diag)

    raw_tail = zeta.moment_tail(s, m - 1)
    tail, tail_ok, _ = _limit(raw_tail)
    diag["tail_sequence"] = raw_tail.tolist()
    diag["tail_converged"] = tail_ok
    vanish = moment_ok and abs(moment) < MEMBERSHIP_TOL
    member = bool(vanish and tail_ok)
    if not tail_ok:
        diag["reason"] = "tail moment integral does not converge (divergent)"
    elif not vanish:
        diag["reason"] = f"s^{m} zeta(s) does not tend to 0 (estimate {moment:.3g})"
    return HadwigerClassReport(j, n, moment, tail, member, diag)


# --------------------------------------------------------------------------
# zeta -> alpha
# --------------------------------------------------------------------------

def zeta_to_alpha(zeta, j, n, report=None):
    """Density ``alpha`` of the Cauchy-Kubota representation of Z_{j,zeta}.

    ``alpha(s) = kappa_{n-j} (s^{n-j} zeta(s) + (n-j) int_s^inf t^{n-j-1} zeta(t) dt)``
    with ``alpha(0)`` the limit of the tail term.
    """
    if not (0 <= j < n):
        raise DomainError(f"need 0 <= j < n, got j={j}, n={n}")
    report = report or check_hadwiger_class(zeta, j, n)
    if not report.member:
        raise PreconditionError(
            f"density {zeta.name or '<anonymous>'} is not in Had({j},{n}): "
            f"{report.diagnostics.get('reason', '')}")
    m = n - j
    kappa = unit_ball_volume(m)
    name = f"alpha[{zeta.name or 'zeta'};{j},{n}]"
    S = zeta.support_upper
    if S == 0.0:
        return Density.piecewise([], name=name)
    if zeta.kind == "piecewise-polynomial" and not any(
            p.shifted(m - 1).has_log_antiderivative() for p in zeta.pieces):
        pieces = []
        later = 0.0
        for p in reversed(zeta.pieces):
            q = p.shifted(m - 1)
            # on this piece: int_s^S = Q(hi) - Q(s) + (integral of later pieces)
            const = later + float(q.antiderivative(p.hi))
            terms = [(kappa * c, e + m) for c, e in p.terms]
            terms += [(-kappa * m * c / (e + 1), e + 1) for c, e in q.terms]
            terms.append((kappa * m * const, 0.0))
            pieces.append((p.lo, p.hi, terms))
            if p.lo > 0:
                later += float(q.integral(p.lo, p.hi))
        # gaps between pieces carry the constant tail of the later pieces
        pieces = _fill_gaps(pieces, zeta.pieces, kappa * m, m)
        alpha = Density.piecewise(pieces, name=name)
        return _with_zero_value(alpha, kappa * m * report.tail_integral_limit)

    grid = np.unique(np.concatenate([
        S * np.geomspace(1e-9, 1e-2, 240, endpoint=False),
        np.linspace(1e-2 * S, S, 2049)]))
    vals = kappa * (np.power(grid, m) * eval_density(zeta, grid)
                    + m * zeta.moment_tail(grid, m - 1))
    vals[-1] = 0.0
    at0 = kappa * m * report.tail_integral_limit
    grid = np.concatenate([[0.0], grid])
    vals = np.concatenate([[at0], vals])
    return Density.sampled(grid, vals, support_upper=S, value_at_zero=at0, name=name)


def _fill_gaps(alpha_pieces, zeta_pieces, factor, m):
    """Insert constant pieces where zeta vanishes between its pieces."""
    out = sorted(alpha_pieces, key=lambda p: p[0])
    filled = []
    prev_hi = 0.0
    for lo, hi, terms in out:
        if lo > prev_hi:
            tail = sum(float(p.shifted(m - 1).integral(p.lo, p.hi))
                       for p in zeta_pieces if p.lo >= lo)
            filled.append((prev_hi, lo, [(factor * tail, 0.0)]))
        filled.append((lo, hi, terms))
        prev_hi = hi
    return filled


def _with_zero_value(alpha, at0):
    if alpha.value_at_zero is not None or not math.isfinite(at0):
        return alpha
    return Density("piecewise-polynomial", alpha.support_upper, False, at0,
                   alpha.name, pieces=alpha.pieces)


def linear_combination(coeffs: Sequence[float], densities: Sequence[Density], name=""):
    """Pointwise ``sum a_i zeta_i`` (piecewise inputs stay piecewise)."""
    if all(d.kind == "piecewise-polynomial" for d in densities):
        cuts = sorted({x for d in densities for p in d.pieces for x in (p.lo, p.hi)})
        pieces = []
        for lo, hi in zip(cuts, cuts[1:]):
            terms = []
            for a, d in zip(coeffs, densities):
                for p in d.pieces:
                    if p.lo <= lo and hi <= p.hi:
                        terms += [(a * c, e) for c, e in p.terms]
            if terms:
                pieces.append((lo, hi, terms))
        return Density.piecewise(pieces, name=name)
    support = max(d.support_upper for d in densities)
    at0 = None
    if all(d.value_at_zero is not None for d in densities):
        at0 = sum(a * d.value_at_zero for a, d in zip(coeffs, densities))

    def fn(s):
        return sum(a * eval_density(d, s) for a, d in zip(coeffs, densities))

    return Density.closed_form(fn, support, value_at_zero=at0, name=name,
                               singular_at_zero=any(d.singular_at_zero for d in densities))


# --------------------------------------------------------------------------
# JSON descriptors
# --------------------------------------------------------------------------

SERIALIZE_POINTS = 512


def density_to_dict(zeta):
    base = {"support_upper": zeta.support_upper,
            "singular_at_zero": zeta.singular_at_zero}
    if zeta.name:
        base["name"] = zeta.name
    if zeta.value_at_zero is not None:
        base["value_at_zero"] = zeta.value_at_zero
    if zeta.kind == "piecewise-polynomial":
        return {"kind": zeta.kind, **base, "pieces": [
            {"lo": p.lo, "hi": p.hi, "terms": [[c, e] for c, e in p.terms]}
            for p in zeta.pieces]}
    if zeta.kind == "closed-form" and zeta.expression is not None:
        d = {"kind": zeta.kind, **base, "expression": zeta.expression}
        if zeta.derivative_expression:
            d["derivative"] = zeta.derivative_expression
        return d
    if zeta.kind == "sampled-grid":
        s, v = zeta.samples
    else:
        S = zeta.support_upper or 1.0
        s = S * np.geomspace(1e-6, 1.0, SERIALIZE_POINTS)
        v = eval_density(zeta, s)
        base["singular_at_zero"] = zeta.singular_at_zero
    return {"kind": "sampled-grid", **base,
            "samples": {"s": np.asarray(s).tolist(), "values": np.asarray(v).tolist()}}


def density_from_dict(d):
    kind = d.get("kind")
    name = d.get("name", "")
    if kind == "piecewise-polynomial":
        zeta = Density.piecewise([(p["lo"], p["hi"], [tuple(t) for t in p["terms"]])
                                  for p in d.get("pieces", [])], name=name)
        return zeta
    if kind == "closed-form":
        if "expression" not in d or "support_upper" not in d:
            raise ValueError("closed-form density needs 'expression' and 'support_upper'")
        return Density.from_expression(
            d["expression"], d["support_upper"], derivative=d.get("derivative"),
            singular_at_zero=d.get("singular_at_zero", False),
            value_at_zero=d.get("value_at_zero"), name=name)
    if kind == "sampled-grid":
        smp = d["samples"]
        return Density.sampled(smp["s"], smp["values"],
                               support_upper=d.get("support_upper"),
                               value_at_zero=d.get("value_at_zero"), name=name)
    raise ValueError(f"unknown density kind {kind!r}")
