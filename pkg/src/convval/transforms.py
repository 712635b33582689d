"""Abel transforms of compactly supported densities.

All integrals are taken in the ``t cosh(r)`` parametrisation, where the
integrand is bounded, and truncated at ``r = acosh(S / t)`` beyond which it
vanishes identically.  Outputs are closed-form densities whose values are
computed on demand by vectorised adaptive quadrature.
"""

import math

import numpy as np

from .densities import Density, unit_ball_volume
from .errors import DomainError, PreconditionError
from .quadrature import integrate_unit


def _support_cut(S, t):
    """``acosh(S/t)`` where ``t < S``, else 0."""
    with np.errstate(divide="ignore"):
        return np.where(t < S, np.arccosh(np.maximum(S / t, 1.0)), 0.0)


def _positive(t):
    t = np.asarray(t, dtype=float)
    if np.any(t <= 0):
        raise DomainError("the Abel transform is evaluated at t > 0 only")
    return t


def abel(zeta):
    """The Abel transform ``t -> 2 t int_0^inf zeta(t cosh r) cosh r dr``."""
    S = zeta.support_upper

    def fn(t):
        t = _positive(t)
        R = _support_cut(S, t)
        live = R > 0
        out = np.zeros_like(t)
        if not np.any(live):
            return out
        tl, Rl = t[live], R[live]

        def f(u):
            c = np.cosh(Rl * u)
            return 2.0 * tl * Rl * zeta._raw_support(tl * c) * c

        out[live] = integrate_unit(f)
        return out

    deriv = None
    if zeta.has_derivative:
        def deriv(t):
            # d/dt A zeta(t) = 2 t int_0^inf zeta'(t cosh r) dr
            t = _positive(t)
            R = _support_cut(S, t)
            live = R > 0
            out = np.zeros_like(t)
            if np.any(live):
                tl, Rl = t[live], R[live]
                out[live] = integrate_unit(
                    lambda u: 2.0 * tl * Rl * zeta.derivative(tl * np.cosh(Rl * u)))
            return out

    return Density.closed_form(fn, S, derivative=deriv,
                               singular_at_zero=zeta.singular_at_zero,
                               name=f"A[{zeta.name}]", c1=zeta.c1)


def abel_k(zeta, k):
    """The ``k``-fold Abel transform.

    For ``k >= 2`` this uses the radial form
    ``k kappa_k int_0^inf zeta(sqrt(r^2 + t^2)) r^(k-1) dr``, which is also
    defined at ``t = 0``.
    """
    if k < 1:
        raise DomainError(f"k must be >= 1, got {k}")
    if k == 1:
        return abel(zeta)
    S = zeta.support_upper
    c = k * unit_ball_volume(k)

    def fn(t):
        t = np.asarray(t, dtype=float)
        if np.any(t < 0):
            raise DomainError("the Abel transform is evaluated at t >= 0 only")
        rho = np.sqrt(np.maximum(S * S - t * t, 0.0))
        live = rho > 0
        out = np.zeros_like(t)
        if np.any(live):
            tl, rl = t[live], rho[live]

            def f(u):
                r = rl * u
                return c * rl * np.power(r, k - 1) * zeta._raw_support(np.sqrt(r * r + tl * tl))

            out[live] = integrate_unit(f)
        return out

    deriv = None
    if zeta.has_derivative:
        def deriv(t):
            t = np.asarray(t, dtype=float)
            rho = np.sqrt(np.maximum(S * S - t * t, 0.0))
            live = (rho > 0) & (t > 0)
            out = np.zeros_like(t)
            if np.any(live):
                tl, rl = t[live], rho[live]

                def f(u):
                    r = rl * u
                    s = np.sqrt(r * r + tl * tl)
                    return c * rl * np.power(r, k - 1) * zeta.derivative(s) * tl / s

                out[live] = integrate_unit(f)
            return out

    at0 = None
    if not zeta.singular_at_zero:
        at0 = float(fn(np.array([0.0]))[0])
    return Density.closed_form(fn, S, derivative=deriv, value_at_zero=at0,
                               singular_at_zero=zeta.singular_at_zero and at0 is None,
                               name=f"A^{k}[{zeta.name}]", c1=zeta.c1 or k >= 2)


def abel2_closed_form(zeta):
    """``t -> 2 pi int_t^inf zeta(s) s ds``, the double Abel transform."""
    S = zeta.support_upper

    def fn(t):
        t = np.asarray(t, dtype=float)
        return 2.0 * math.pi * zeta.moment_tail(t, 1)

    def deriv(t):
        t = np.asarray(t, dtype=float)
        return -2.0 * math.pi * t * zeta(t)

    at0 = float(fn(np.array([0.0]))[0])
    return Density.closed_form(fn, S, derivative=deriv, value_at_zero=at0,
                               name=f"A2[{zeta.name}]", c1=True)


def inverse_abel(zeta):
    """``s -> -(1/pi) int_0^inf zeta'(s cosh r) dr``.

    Requires a derivative: exact for closed-form densities that carry one,
    exact for piecewise densities, 5-point differences for sampled grids.
    """
    if not zeta.has_derivative:
        raise PreconditionError(
            f"inverse Abel transform needs a derivative of {zeta.name or 'the density'}")
    S = zeta.support_upper

    def fn(s):
        s = _positive(s)
        R = _support_cut(S, s)
        live = R > 0
        out = np.zeros_like(s)
        if np.any(live):
            sl, Rl = s[live], R[live]
            out[live] = integrate_unit(
                lambda u: -Rl / math.pi * zeta.derivative(sl * np.cosh(Rl * u)))
        return out

    return Density.closed_form(fn, S, name=f"A^-1[{zeta.name}]")
