import itertools
import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from convval import corpus
from convval.convexfn import (ConeBall, Embedded, MaxAffine, PiecewiseLinearSum, Quadratic,
                              SmoothRadial)
from convval.densities import Density, unit_ball_volume
from convval.errors import PreconditionError
from convval.measures import (DiscreteMeasure, conjugate_transport, elementary_symmetric,
                              hessian_measure_smooth, hessian_symmetric, integrate_density,
                              lower_dim_extension_check, monge_ampere_pl,
                              product_decomposition_check)


def test_elementary_symmetric_examples():
    assert elementary_symmetric([1, 2, 3], 2) == 11
    assert elementary_symmetric([4.0, -2.0, 7.5], 0) == 1
    for n in range(1, 6):
        for k in range(n + 1):
            assert elementary_symmetric(np.ones(n), k) == math.comb(n, k)


@settings(max_examples=30, deadline=None)
@given(seed=st.integers(0, 10 ** 6), n=st.integers(1, 4), data=st.data())
def test_hessian_symmetric_is_sum_of_principal_minors(seed, n, data):
    k = data.draw(st.integers(0, n))
    M = np.random.default_rng(seed).standard_normal((n, n))
    H = M + M.T
    minors = sum(np.linalg.det(H[np.ix_(c, c)]) for c in itertools.combinations(range(n), k)) if k else 1.0
    assert hessian_symmetric(H[None], k)[0] == pytest.approx(minors, abs=1e-9)


def test_half_square_mass_on_disk():
    u = Quadratic(np.eye(2))
    mu = hessian_measure_smooth(u, 1, points=512, gradient_radius=1.2)
    disk = lambda y: (np.linalg.norm(y, axis=1) <= 1.0).astype(float)
    assert integrate_density(mu, disk) == pytest.approx(2 * math.pi, rel=1e-2)


def test_half_square_particles_are_nodes():
    mu = hessian_measure_smooth(Quadratic(np.eye(2)), 2, points=16, box=((-1, -1), (1, 1)))
    x = (np.arange(16) + 0.5) / 8 - 1
    grid = {(a, b) for a in np.round(x, 12) for b in np.round(x, 12)}
    assert {tuple(p) for p in np.round(mu.locations, 12)} == grid


def test_cone_top_degree_integral(tent):
    mu = hessian_measure_smooth(ConeBall(0.4, 1.0, n=2), 2, points=512)
    assert integrate_density(mu, tent) == pytest.approx(unit_ball_volume(2) * 0.6, rel=1e-2)


def test_half_square_top_degree_tent(tent):
    mu = hessian_measure_smooth(Quadratic(np.eye(2)), 2, points=400, gradient_radius=1.0)
    assert integrate_density(mu, tent) == pytest.approx(math.pi / 3, rel=1e-3)


def test_integrate_zero_and_dirac(tent):
    assert integrate_density(DiscreteMeasure.zero(2), tent) == 0.0
    xbar = np.array([0.3, -0.1])
    dirac = DiscreteMeasure(2, xbar[None], [1.0])
    beta = lambda y: np.exp(y[:, 0]) * np.cos(y[:, 1])
    assert integrate_density(dirac, beta) == pytest.approx(math.exp(0.3) * math.cos(0.1))


def test_measure_validation_and_round_trip():
    with pytest.raises(PreconditionError):
        DiscreteMeasure(1, [[0.0]], [-1.0])
    mu = DiscreteMeasure(2, [[0.0, 1.0], [2.0, 3.0]], [0.5, 1.5], {"source": "x"})
    back = DiscreteMeasure.from_dict(mu.to_dict())
    np.testing.assert_array_equal(back.locations, mu.locations)
    assert back.total_mass == 2.0


@pytest.mark.parametrize("anchor", [(0.3, -0.2), (1.0, 2.0, -0.5), (0.0, 0.0)])
def test_piecewise_linear_sum_is_unit_dirac(anchor):
    a = np.array(anchor)
    mu = monge_ampere_pl(PiecewiseLinearSum(a), (a - 1, a + 1))
    assert len(mu) == 1
    np.testing.assert_allclose(mu.locations[0], a)
    assert mu.weights[0] == pytest.approx(1.0, abs=1e-12)
    assert not mu.meta["incomplete"]


def test_piecewise_linear_outside_region_flagged():
    mu = monge_ampere_pl(PiecewiseLinearSum(np.array([3.0, 0.0])), ((-1, -1), (1, 1)))
    assert len(mu) == 0 and mu.meta["incomplete"]


def test_linear_function_has_no_atoms():
    mu = monge_ampere_pl(MaxAffine(np.array([[0.4, -1.0]]), [0.2]), ((-5, -5), (5, 5)))
    assert mu.total_mass == 0.0


def test_max_affine_vertex_mass():
    # max(x, y, -x-y) has one vertex; its subgradient triangle has area 3/2
    v = MaxAffine(np.array([[1.0, 0.0], [0.0, 1.0], [-1.0, -1.0]]))
    mu = monge_ampere_pl(v, ((-1, -1), (1, 1)))
    assert mu.total_mass == pytest.approx(1.5, abs=1e-12)
    np.testing.assert_allclose(mu.locations[0], [0.0, 0.0], atol=1e-12)


def test_monge_ampere_rejects_smooth():
    with pytest.raises(PreconditionError):
        monge_ampere_pl(Quadratic(np.eye(2)), ((-1, -1), (1, 1)))


def test_transport_self_dual():
    rec = conjugate_transport(Quadratic(np.eye(2)), 1)
    assert rec.passed and rec.discrepancy < 1e-6


def test_transport_anisotropic_bumps():
    rec = conjugate_transport(Quadratic(np.diag([2.0, 0.5])), 1, tolerance=1e-6)
    assert rec.passed, rec.discrepancy


def test_transport_quartic_top_degree():
    rec = conjugate_transport(SmoothRadial.power(2, 0.25, 4.0), 2, tolerance=1e-4)
    assert rec.passed, rec.discrepancy


def test_product_examples():
    vE, vF = Quadratic(np.eye(1)), Quadratic(np.eye(1))
    B = ((-1, -1), (1, 1))
    rec = product_decomposition_check(vE, vF, 1, B)
    assert rec.lhs[0] == pytest.approx(8.0, rel=1e-10) and rec.rhs[0] == pytest.approx(8.0, rel=1e-10)
    rec = product_decomposition_check(vE, vF, 0, B)
    assert rec.lhs[0] == pytest.approx(4.0) and rec.rhs[0] == pytest.approx(4.0)
    rec = product_decomposition_check(vE, vF, 2, B)
    assert rec.lhs[0] == pytest.approx(4.0, rel=1e-10) and rec.passed


def test_product_mixed_dimensions():
    vE = Quadratic(np.array([[1.0, 0.3], [0.3, 2.0]]))
    vF = SmoothRadial.power(1, 0.25, 4.0)
    rec = product_decomposition_check(vE, vF, 2, ((-1, -0.5, 0.1), (0.5, 1, 1.2)))
    assert rec.passed, rec.discrepancy


def test_extension_line_in_plane(bump):
    u = Embedded(Quadratic(np.eye(1)), np.array([[1.0], [0.0]]))
    rec = lower_dim_extension_check(u, 1, bump, points=256)
    assert rec.passed, rec.discrepancy


def test_extension_zero_density():
    u = Embedded(Quadratic(np.eye(1)), np.array([[1.0], [0.0]]))
    rec = lower_dim_extension_check(u, 1, Density.zero())
    assert rec.lhs == [0.0] and rec.rhs == [0.0]


def test_extension_plane_in_space(bump):
    plane = np.array([[1.0, 0.0], [0.0, 1.0], [0.0, 0.0]])
    u = Embedded(Quadratic(np.eye(2)), plane)
    rec = lower_dim_extension_check(u, 1, bump)
    assert rec.passed, rec.discrepancy


def test_extension_needs_embedded(bump):
    with pytest.raises(PreconditionError):
        lower_dim_extension_check(Quadratic(np.eye(2)), 1, bump)
