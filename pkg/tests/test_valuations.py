import math

import numpy as np
import pytest

from convval import corpus
from convval.axioms import Functional, axiom_suite, flat_corpus
from convval.convexfn import ConeBall, Quadratic
from convval.densities import Density, unit_ball_volume, zeta_to_alpha
from convval.errors import DomainError, PreconditionError
from convval.valuations import (KubotaConfig, cone_alpha_identity, fiv_direct, fiv_kubota,
                                fiv_measure, kubota_prefactor, sample_grassmannian,
                                sigma_from_xi)


def test_direct_half_square_tent(tent):
    rep = fiv_direct(Quadratic(np.eye(2)), 1, tent)
    assert rep.route == "direct" and rep.stderr == 0.0
    assert rep.value == pytest.approx(2 * math.pi / 3, rel=1e-5)


@pytest.mark.parametrize("n,t", [(2, 0.3), (3, 0.7)])
def test_direct_cone_top_degree(tent, n, t):
    rep = fiv_direct(ConeBall(t, 1.0, n=n), n, tent)
    assert rep.value == pytest.approx(unit_ball_volume(n) * (1 - t), rel=1e-12)


def test_direct_zero_density():
    assert fiv_direct(Quadratic(np.eye(2)), 1, Density.zero()).value == 0.0


def test_direct_checks_class():
    with pytest.raises(PreconditionError):
        fiv_direct(Quadratic(np.eye(2)), 2, corpus.sqrt_tent())


def test_direct_needs_smooth_function(tent):
    with pytest.raises(PreconditionError):
        fiv_direct(ConeBall(0.5, 1.0, n=2), 1, tent)


def test_measure_route_matches_direct(tent):
    u = corpus.aniso_quad(2)
    a = fiv_direct(u, 1, tent).value
    b = fiv_measure(u, 1, tent).value
    assert b == pytest.approx(a, rel=1e-12)


def test_grassmannian_basics():
    assert sample_grassmannian(3, 1, 0, seed=1) == []
    for E in sample_grassmannian(4, 2, 50, seed=3):
        np.testing.assert_allclose(E.frame.T @ E.frame, np.eye(2), atol=1e-12)
    with pytest.raises(DomainError):
        sample_grassmannian(3, 3, 1, seed=0)


def test_grassmannian_is_counter_based():
    a = sample_grassmannian(3, 2, 20, seed=9)
    b = sample_grassmannian(3, 2, 5, seed=9)
    for x, y in zip(a, b):
        np.testing.assert_array_equal(x.frame, y.frame)


@pytest.mark.parametrize("n", [2, 3, 5])
def test_grassmannian_mean_square_coordinate(n):
    lines = sample_grassmannian(n, 1, 10_000, seed=17)
    v = np.array([E.frame[0, 0] ** 2 for E in lines])
    stderr = v.std(ddof=1) / math.sqrt(v.size)
    assert abs(v.mean() - 1 / n) <= 3 * stderr


def test_kubota_prefactor_values():
    assert kubota_prefactor(1, 2) == pytest.approx(math.pi / (2 * 2) * 2)
    assert kubota_prefactor(0, 3) == pytest.approx(1.0)


@pytest.mark.parametrize("j,n,t", [(1, 2, 0.5), (1, 3, 0.3), (2, 3, 0.6)])
def test_kubota_cone_is_deterministic_identity(tent, j, n, t):
    cfg = KubotaConfig(j, n, sample_count=64, rng_seed=4)
    rep = fiv_kubota(ConeBall(t, 1.0, n=n), j, tent, cfg)
    alpha = zeta_to_alpha(tent, j, n)
    expect = kubota_prefactor(j, n) * cone_alpha_identity(t, j, alpha)
    assert rep.stderr == 0.0
    assert rep.value == pytest.approx(expect, rel=1e-9)


def test_kubota_zero_density():
    rep = fiv_kubota(Quadratic(np.eye(2)), 1, Density.zero(), KubotaConfig(1, 2, 10))
    assert rep.value == 0.0 and rep.stderr == 0.0


def test_kubota_matches_direct_half_square(tent):
    u = Quadratic(np.eye(2))
    d = fiv_direct(u, 1, tent).value
    k = fiv_kubota(u, 1, tent, KubotaConfig(1, 2, 2000, 1))
    assert abs(k.value - d) <= max(3 * k.stderr, 0.02 * abs(d))


def test_kubota_matches_direct_anisotropic(tent):
    u = corpus.aniso_quad(3)
    d = fiv_direct(u, 2, tent).value
    k = fiv_kubota(u, 2, tent, KubotaConfig(2, 3, 1000, 2))
    assert k.stderr > 0
    assert abs(k.value - d) <= max(3 * k.stderr, 0.02 * abs(d))


def test_kubota_stderr_scaling(tent):
    u = corpus.aniso_quad(2)
    small = fiv_kubota(u, 1, tent, KubotaConfig(1, 2, 500, 7))
    large = fiv_kubota(u, 1, tent, KubotaConfig(1, 2, 2000, 7))
    assert small.stderr / large.stderr == pytest.approx(2.0, rel=0.3)


def test_kubota_independent_of_jobs(tent):
    u = corpus.aniso_quad(2)
    a = fiv_kubota(u, 1, tent, KubotaConfig(1, 2, 1200, 5, jobs=1))
    b = fiv_kubota(u, 1, tent, KubotaConfig(1, 2, 1200, 5, jobs=4))
    assert a.value == b.value and a.stderr == b.stderr


def test_kubota_degree_zero_is_alpha_at_zero(tent):
    rep = fiv_kubota(Quadratic(np.eye(2)), 0, tent, KubotaConfig(0, 2, 10))
    # alpha(0) = kappa_2 / 3 for the tent with n - j = 2
    assert rep.value == pytest.approx(math.pi / 3, rel=1e-10)
    assert fiv_direct(Quadratic(np.eye(2)), 0, tent).value == pytest.approx(math.pi / 3, rel=1e-4)


def test_config_validation():
    with pytest.raises(DomainError):
        KubotaConfig(3, 2)
    with pytest.raises(DomainError):
        KubotaConfig(1, 2, sample_count=0)


def test_cone_alpha_identity_examples(tent):
    assert cone_alpha_identity(0.5, 1, Density.zero()) == 0.0
    alpha = zeta_to_alpha(tent, 1, 2)
    assert cone_alpha_identity(0.5, 1, alpha) == pytest.approx(1.5, abs=1e-12)
    alpha3 = zeta_to_alpha(tent, 2, 3)
    assert cone_alpha_identity(0.4, 2, alpha3) == pytest.approx(math.pi * alpha3(0.4), rel=1e-14)


def test_sigma_from_xi_examples():
    xi = lambda x: math.exp(-float(np.dot(x, x)))
    assert sigma_from_xi(xi, 1, np.array([0.0, 0.0, -1.0])) == pytest.approx(2 * xi(np.zeros(2)))
    one = lambda x: 1.0
    for th in (0.1, 0.7, 1.3):
        z = np.array([math.sin(th), 0.0, -math.cos(th)])
        assert sigma_from_xi(one, 1, z) == pytest.approx(2 * math.cos(th) ** 2, rel=1e-12)
    assert sigma_from_xi(lambda x: 0.0, 1, np.array([0.6, 0.0, -0.8])) == 0.0
    with pytest.raises(DomainError):
        sigma_from_xi(one, 1, np.array([0.6, 0.0, 0.8]))
    with pytest.raises(DomainError):
        sigma_from_xi(one, 1, np.array([0.6, 0.0, -0.9]))


def test_axioms_trivial_pair(bump):
    # smooth density: the tent's kink limits rotation accuracy to about 1e-6
    u = Quadratic(np.eye(2))
    Z = Functional("direct", 1, bump)
    rep = axiom_suite(Z, [u], pairs=[(u, u)], translations=2, rotations=2, lambdas=(2.0,))
    assert rep.passed
    assert rep.count("valuation") == 1 and rep.worst("valuation") == 0.0


def test_axioms_simplicity_probe(tent):
    rep = axiom_suite(Functional("direct", None, tent), [Quadratic(np.eye(2))],
                      flat=flat_corpus(), Z_top=Functional("direct", None, tent),
                      translations=0, rotations=0, lambdas=())
    assert rep.count("simplicity") == len(flat_corpus()) and rep.passed


@pytest.mark.parametrize("j", [0, 1, 2])
def test_epi_homogeneity_half_square(tent, j):
    u = Quadratic(np.eye(2))
    Z = Functional("direct", j, tent)
    rep = axiom_suite(Z, [u], translations=0, rotations=0, lambdas=(2.0,))
    assert rep.passed, rep.failures()
