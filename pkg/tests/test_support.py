import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from convval import corpus
from convval.densities import check_hadwiger_class
from convval.quadrature import integrate_intervals, integrate_unit, midpoint_grid
from convval.rng import stream, stream_for


@settings(max_examples=25, deadline=None)
@given(seed=st.integers(0, 2 ** 64 - 1), index=st.integers(0, 10 ** 9))
def test_stream_is_reproducible(seed, index):
    a = stream(seed, index).standard_normal(4)
    b = stream(seed, index).standard_normal(4)
    np.testing.assert_array_equal(a, b)


def test_streams_differ_by_index_and_tag():
    assert stream(1, 0).random() != stream(1, 1).random()
    assert stream_for(1, "a").random() != stream_for(1, "b").random()


def test_integrate_unit_polynomial_and_vector():
    val = integrate_unit(lambda u: np.stack(np.broadcast_arrays(u ** 3, np.cos(u)), axis=-1))
    np.testing.assert_allclose(val, [0.25, np.sin(1.0)], atol=1e-13)


def test_integrate_unit_endpoint_singularity():
    # falls back to adaptive quadrature for u^(-1/2)
    val = integrate_unit(lambda u: u ** -0.5)
    assert val[0] == pytest.approx(2.0, abs=1e-8)


def test_integrate_intervals_empty_and_mixed():
    lo = np.array([0.0, 1.0, 2.0])
    hi = np.array([1.0, 1.0, 1.5])
    np.testing.assert_allclose(integrate_intervals(lambda t: t, lo, hi), [0.5, 0.0, 0.0])


def test_midpoint_grid_volume():
    nodes, cell, h = midpoint_grid(np.zeros(3), np.array([1.0, 2.0, 3.0]), 8)
    assert nodes.shape == (512, 3)
    assert cell * 512 == pytest.approx(6.0)


def test_corpus_lookup():
    assert corpus.density("tent")(0.5) == 0.5
    assert corpus.family("cone_t", 2, t=0.3).t == 0.3
    with pytest.raises(KeyError):
        corpus.density("nope")
    with pytest.raises(KeyError):
        corpus.family("nope", 2)


@pytest.mark.parametrize("name", sorted(corpus.DENSITIES))
def test_corpus_densities_vanish_past_support(name):
    z = corpus.density(name)
    S = z.support_upper
    assert np.all(z(np.linspace(S, S + 2, 20)[1:] + 1e-12) == 0)


@pytest.mark.parametrize("name", ["bump", "bump_wide", "bump_shifted", "cubic_bump"])
def test_smooth_corpus_derivative_matches_differences(name):
    z = corpus.density(name)
    s = np.linspace(0.05, 0.95, 19) * z.support_upper
    h = 1e-6
    fd = (z(s + h) - z(s - h)) / (2 * h)
    np.testing.assert_allclose(z.derivative(s), fd, atol=1e-6)


def test_bump_shifted_vanishes_near_zero():
    z = corpus.bump_shifted()
    assert np.all(z(np.linspace(1e-6, 0.3, 30)) == 0)
    assert check_hadwiger_class(z, 0, 3).member
