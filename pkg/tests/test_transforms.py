import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy.integrate import quad

from convval import corpus
from convval.densities import Density, check_hadwiger_class, linear_combination
from convval.transforms import abel, abel2_closed_form, abel_k, inverse_abel


def _abel_s_form(f, t, S):
    # naive form 2 int_0^sqrt(S^2-t^2) f(sqrt(s^2+t^2)) ds
    return 2 * quad(lambda s: f(math.hypot(s, t)), 0, math.sqrt(S * S - t * t),
                    epsabs=1e-13, epsrel=1e-13)[0]


def test_abel_tent_half(tent):
    # closed form sqrt(3)/2 - asinh(sqrt(3))/4
    assert abel(tent)(0.5) == pytest.approx(0.5367859295532338, abs=1e-12)
    assert abel(tent)(0.5) == pytest.approx(_abel_s_form(lambda r: 1 - r, 0.5, 1.0), abs=1e-10)


def test_abel_zero():
    assert np.all(abel(Density.zero())(np.linspace(0.1, 2, 5)) == 0)


def test_abel_vanishes_past_support(bump):
    A = abel(bump)
    assert np.all(A(np.linspace(1.0, 3.0, 9)) == 0)
    assert A.support_upper == bump.support_upper


def test_abel_rejects_nonpositive(tent):
    with pytest.raises(Exception):
        abel(tent)(0.0)


@settings(max_examples=20, deadline=None)
@given(t=st.floats(0.02, 0.98))
def test_abel_bump_matches_s_form(t):
    f = lambda r: float(corpus._bump(r))
    assert abel(corpus.bump())(t) == pytest.approx(_abel_s_form(f, t, 1.0), abs=1e-9)


def test_abel_k1_is_abel(tent):
    t = np.linspace(0.05, 0.95, 10)
    np.testing.assert_allclose(abel_k(tent, 1)(t), abel(tent)(t), atol=1e-14)


def test_abel_k2_tent_values(tent):
    assert abel_k(tent, 2)(0.5) == pytest.approx(2 * math.pi * (1 / 6 - 1 / 8 + 1 / 24), abs=1e-10)
    assert abel2_closed_form(tent)(0.0) == pytest.approx(math.pi / 3, abs=1e-12)


def test_abel2_matches_composition(tent):
    t = np.linspace(0.1, 0.9, 9)
    once = abel(tent)
    twice = abel(once)
    np.testing.assert_allclose(twice(t), abel2_closed_form(tent)(t), atol=1e-6)
    np.testing.assert_allclose(abel_k(tent, 2)(t), abel2_closed_form(tent)(t), atol=1e-9)


def test_abel_k3_radial_integral(tent):
    # int_{R^3} zeta(sqrt(|x|^2+t^2)) dx = 4 pi int r^2 zeta(sqrt(r^2+t^2)) dr
    t = 0.3
    expect = 4 * math.pi * quad(lambda r: r * r * (1 - math.hypot(r, t)), 0,
                                math.sqrt(1 - t * t), epsabs=1e-13)[0]
    assert abel_k(tent, 3)(t) == pytest.approx(expect, abs=1e-10)


def test_abel2_of_zero():
    assert abel2_closed_form(Density.zero())(0.3) == 0.0


@pytest.mark.parametrize("name", ["bump", "bump_wide", "cubic_bump"])
def test_inverse_undoes_abel(name):
    psi = corpus.density(name)
    S = psi.support_upper
    s = np.linspace(0.05 * S, 0.95 * S, 40)
    np.testing.assert_allclose(inverse_abel(abel(psi))(s), psi(s), atol=1e-4)


def test_abel_undoes_inverse_on_abel2(tent):
    zeta = abel2_closed_form(tent)
    s = np.linspace(0.05, 0.95, 20)
    np.testing.assert_allclose(abel(inverse_abel(zeta))(s), zeta(s), atol=1e-4)


def test_inverse_of_zero():
    assert inverse_abel(Density.zero())(0.4) == 0.0


def test_inverse_needs_derivative():
    rough = Density.closed_form(lambda s: np.maximum(0, 1 - np.asarray(s)), 1.0)
    with pytest.raises(Exception):
        inverse_abel(rough)(0.5)


@pytest.mark.parametrize("name,j,n", [("tent", 0, 3), ("tent", 1, 3), ("sqrt_tent", 1, 3),
                                      ("inv_tent", 0, 3), ("bump", 2, 3)])
def test_abel_keeps_class(name, j, n):
    zeta = corpus.density(name)
    assert check_hadwiger_class(zeta, j, n).member
    assert check_hadwiger_class(abel(zeta), j, n - 1).member


@settings(max_examples=10, deadline=None)
@given(a=st.floats(-2, 2), b=st.floats(-2, 2))
def test_abel_is_linear(a, b):
    z1, z2 = corpus.tent(), corpus.poly()
    t = np.linspace(0.05, 0.95, 8)
    lhs = abel(linear_combination([a, b], [z1, z2]))(t)
    np.testing.assert_allclose(lhs, a * abel(z1)(t) + b * abel(z2)(t), atol=1e-9)
