"""Built-in densities and function families used by the checks and the CLI."""

import numpy as np

from .convexfn import ConeBall, Polytope, Quadratic, SmoothRadial, SupportPlusIndicator
from .densities import Density


def _bump(s):
    s = np.asarray(s, dtype=float)
    out = np.zeros_like(s)
    m = np.abs(s) < 1
    out[m] = np.exp(1.0 - 1.0 / (1.0 - s[m] ** 2))
    return out


def _bump_d(s):
    s = np.asarray(s, dtype=float)
    out = np.zeros_like(s)
    m = np.abs(s) < 1
    q = 1.0 - s[m] ** 2
    # combine the exponent first so the edge gives 0 rather than inf * 0
    out[m] = -2 * s[m] * np.exp(1.0 - 1.0 / q - 2 * np.log(q))
    return out


def tent():
    """``max(0, 1 - s)``."""
    return Density.piecewise([(0, 1, [(1, 0), (-1, 1)])], name="tent")


def bump():
    """``exp(1 - 1/(1 - s^2))`` on ``[0, 1)``, smooth with value 1 at 0."""
    return Density.closed_form(_bump, 1.0, derivative=_bump_d, value_at_zero=1.0,
                               name="bump", c1=True)


def bump_wide():
    """The bump stretched to support ``[0, 2)``."""
    return Density.closed_form(lambda s: _bump(np.asarray(s) / 2), 2.0,
                               derivative=lambda s: 0.5 * _bump_d(np.asarray(s) / 2),
                               value_at_zero=1.0, name="bump_wide", c1=True)


def bump_shifted():
    """A bump centred at ``s = 0.6`` with radius ``0.3``; vanishes near 0."""
    return Density.closed_form(lambda s: _bump((np.asarray(s) - 0.6) / 0.3), 0.9,
                               derivative=lambda s: _bump_d((np.asarray(s) - 0.6) / 0.3) / 0.3,
                               value_at_zero=0.0, name="bump_shifted", c1=True)


def sqrt_tent():
    """``s^(-1/2) (1 - s)``: singular at 0, in Had(1, 3) but not Had(j, j)."""
    return Density.piecewise([(0, 1, [(1, -0.5), (-1, 0.5)])], name="sqrt_tent")


def inv_tent():
    """``s^(-1) (1 - s)^2``: singular at 0, in Had(0, 3)."""
    return Density.piecewise([(0, 1, [(1, -1), (-2, 0), (1, 1)])], name="inv_tent")


def poly():
    """``(1 - s^2)^2`` on ``[0, 1]``."""
    return Density.piecewise([(0, 1, [(1, 0), (-2, 2), (1, 4)])], name="poly")


def cubic_bump():
    """``(1 - s^2)^3`` on ``[0, 1]``, twice continuously differentiable."""
    return Density.piecewise([(0, 1, [(1, 0), (-3, 2), (3, 4), (-1, 6)])], name="cubic_bump")


def zero():
    return Density.zero()


DENSITIES = {
    "bump": (bump, "exp(1 - 1/(1 - s^2)) on [0,1), value 1 at 0"),
    "bump_shifted": (bump_shifted, "smooth bump on (0.3, 0.9), zero near 0"),
    "bump_wide": (bump_wide, "smooth bump on [0,2), value 1 at 0"),
    "cubic_bump": (cubic_bump, "(1 - s^2)^3 on [0,1]"),
    "inv_tent": (inv_tent, "s^-1 (1-s)^2 on (0,1], singular at 0"),
    "poly": (poly, "(1 - s^2)^2 on [0,1]"),
    "sqrt_tent": (sqrt_tent, "s^-1/2 (1-s) on (0,1], singular at 0"),
    "tent": (tent, "max(0, 1 - s)"),
    "zero": (zero, "identically zero"),
}


def half_sq(n):
    """``|x|^2 / 2``."""
    return Quadratic(np.eye(n))


def quartic(n):
    """``|x|^4 / 4`` (super-coercive, Hessian degenerate at 0)."""
    return SmoothRadial.power(n, 0.25, 4.0)


def aniso_quad(n):
    """``x^T diag(2, 1/2, 1, ...) x / 2``."""
    d = np.ones(n)
    d[0] = 2.0
    if n > 1:
        d[1] = 0.5
    return Quadratic(np.diag(d))


def cone_t(n, t=0.5):
    """``t |x| + I_{B^n}``."""
    return ConeBall(t, 1.0, n=n)


def delta_pl(n, anchor=None):
    """``sum_i |x_i - a_i| / 2``; its Monge-Ampere measure is a unit point mass."""
    from .convexfn import PiecewiseLinearSum
    return PiecewiseLinearSum(np.zeros(n) if anchor is None else anchor)


def cube_spi(n):
    """``h_[-1/2,1/2]^n + I_[-1,1]^n``."""
    return SupportPlusIndicator(Polytope.cube(n, 0.5), Polytope.cube(n, 1.0))


FAMILIES = {
    "aniso_quad": (aniso_quad, "x^T diag(2, 1/2, 1, ...) x / 2"),
    "cone_t": (cone_t, "t|x| + indicator of the unit ball"),
    "cube_spi": (cube_spi, "support function of [-1/2,1/2]^n plus indicator of [-1,1]^n"),
    "delta_pl": (delta_pl, "sum |x_i - a_i| / 2 (unit Monge-Ampere point mass)"),
    "half_sq": (half_sq, "|x|^2 / 2"),
    "quartic": (quartic, "|x|^4 / 4"),
}


def density(name):
    try:
        return DENSITIES[name][0]()
    except KeyError:
        raise KeyError(f"unknown corpus density {name!r}") from None


def family(name, n, **params):
    try:
        return FAMILIES[name][0](n, **params)
    except KeyError:
        raise KeyError(f"unknown corpus family {name!r}") from None


def listing():
    """Sorted ``(kind, id, description)`` rows."""
    rows = [("density", k, v[1]) for k, v in DENSITIES.items()]
    rows += [("function", k, v[1]) for k, v in FAMILIES.items()]
    return sorted(rows)
