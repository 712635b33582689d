import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from convval.convexfn import (ConeBall, GridSampled, PiecewiseLinearSum, Polytope, Quadratic,
                              Rejected, SmoothRadial, Subspace, SupportPlusIndicator,
                              epi_mult, epi_sum, evaluate, gradient_hessian, lattice_ops,
                              legendre, project, subdifferential_pl)
from convval.errors import DomainError, NonDifferentiableError

rng = np.random.default_rng(5)
PTS2 = rng.uniform(-1.5, 1.5, (200, 2))


def _vertex_set(P):
    return {tuple(np.round(v, 12)) for v in np.asarray(P.vertices)}


def test_evaluate_examples():
    assert evaluate(Quadratic(np.eye(2)), np.array([1.0, 1.0])) == 1.0
    c = ConeBall(2, 1, n=2)
    assert evaluate(c, np.array([0.0, 0.5])) == 1.0
    assert evaluate(c, np.array([0.0, 2.0])) == np.inf
    assert evaluate(PiecewiseLinearSum(np.array([1.0, 1.0])), np.zeros(2)) == 1.0


def test_support_function_is_vertex_max():
    P = Polytope(rng.standard_normal((7, 3)))
    h = SupportPlusIndicator(P)
    x = rng.standard_normal((50, 3))
    np.testing.assert_allclose(h.evaluate(x), np.max(x @ P.vertices.T, axis=1), atol=1e-14)


def test_quadratic_gradient_hessian():
    A = np.array([[2.0, 0.3], [0.3, 1.0]])
    b = np.array([0.1, -0.4])
    x = np.array([0.7, -0.2])
    g, H = gradient_hessian(Quadratic(A, b), x)
    np.testing.assert_allclose(g, A @ x + b)
    np.testing.assert_allclose(H, A)


def test_radial_gradient_direction():
    u = SmoothRadial.power(3, 0.25, 4.0)
    x = np.array([0.3, -0.4, 1.2])
    r = np.linalg.norm(x)
    g, _ = gradient_hessian(u, x)
    np.testing.assert_allclose(g, r ** 3 * x / r, rtol=1e-12)


@settings(max_examples=25, deadline=None)
@given(x=st.tuples(st.floats(-0.69, 0.69), st.floats(-0.69, 0.69)).filter(
    lambda p: 1e-3 < np.hypot(*p)))
def test_cone_gradient_norm_is_slope(x):
    g, _ = gradient_hessian(ConeBall(0.8, 1.0, n=2), np.array(x))
    assert np.linalg.norm(g) == pytest.approx(0.8, rel=1e-12)


def test_cone_apex_not_differentiable():
    with pytest.raises(NonDifferentiableError):
        gradient_hessian(ConeBall(1.0, 1.0, n=2), np.zeros(2))


def test_quadratic_conjugates():
    L = legendre(Quadratic(np.eye(2)))
    np.testing.assert_allclose(L.evaluate(PTS2), 0.5 * np.sum(PTS2 ** 2, axis=1))
    L = legendre(Quadratic(np.diag([2.0, 0.5])))
    np.testing.assert_allclose(L.evaluate(PTS2), 0.5 * (0.5 * PTS2[:, 0] ** 2 + 2 * PTS2[:, 1] ** 2))


def test_ball_indicator_conjugate_is_norm():
    L = legendre(ConeBall(0.0, 1.0, n=2))
    # sup over a dense sample of the disk
    th = np.linspace(0, 2 * np.pi, 4001)
    disk = np.stack([np.cos(th), np.sin(th)], axis=1)
    brute = np.max(PTS2 @ disk.T, axis=1)
    np.testing.assert_allclose(L.evaluate(PTS2), brute, atol=1e-6)


def test_cone_conjugate_formula():
    L = legendre(ConeBall(0.5, 2.0, n=2))
    r = np.linalg.norm(PTS2, axis=1)
    np.testing.assert_allclose(L.evaluate(PTS2), 2.0 * np.maximum(0, r - 0.5), atol=1e-13)


def test_closed_form_double_conjugate():
    for u in (Quadratic(np.array([[1.5, 0.2], [0.2, 0.7]]), b=[0.1, 0.3], c=-0.2),
              ConeBall(0.5, 1.0, n=2)):
        x = PTS2[np.linalg.norm(PTS2, axis=1) < 0.95]
        np.testing.assert_allclose(legendre(legendre(u)).evaluate(x), u.evaluate(x), atol=1e-12)


def test_grid_double_conjugate():
    q = Quadratic(np.diag([1.0, 2.0]))
    G = GridSampled.from_function(q, (-1, -1), (1, 1), (81, 81))
    h = 2 / 80
    back = G.biconjugate()
    x = rng.uniform(-0.8, 0.8, (100, 2))
    assert np.max(np.abs(back.evaluate(x) - G.evaluate(x))) < 2 * h


def test_conjugate_reverses_order():
    u, v = Quadratic(np.eye(2)), Quadratic(2 * np.eye(2))
    assert np.all(u.evaluate(PTS2) <= v.evaluate(PTS2))
    assert np.all(legendre(u).evaluate(PTS2) >= legendre(v).evaluate(PTS2))


def test_epi_sum_examples():
    q = Quadratic(np.eye(2))
    np.testing.assert_allclose(epi_sum(q, q).evaluate(PTS2), 0.25 * np.sum(PTS2 ** 2, axis=1))
    point = SupportPlusIndicator(Polytope(np.zeros((1, 2))), Polytope(np.zeros((1, 2))))
    np.testing.assert_allclose(epi_sum(q, point).evaluate(PTS2), q.evaluate(PTS2), atol=1e-12)
    B = ConeBall(0.0, 1.0, n=2)
    s = epi_sum(B, B)
    r = np.linalg.norm(PTS2, axis=1)
    assert np.all(s.evaluate(PTS2[r < 1.99]) == 0)
    assert np.all(np.isinf(s.evaluate(PTS2[r > 2.01])))


def test_epi_sum_commutative_associative():
    a = Quadratic(np.array([[1.0, 0.2], [0.2, 2.0]]))
    b = Quadratic(np.diag([0.5, 1.5]), b=[0.1, 0.0])
    c = Quadratic(np.eye(2), c=0.3)
    np.testing.assert_allclose(epi_sum(a, b).evaluate(PTS2), epi_sum(b, a).evaluate(PTS2), atol=1e-9)
    np.testing.assert_allclose(epi_sum(epi_sum(a, b), c).evaluate(PTS2),
                               epi_sum(a, epi_sum(b, c)).evaluate(PTS2), atol=1e-9)


def test_epi_sum_epigraph_slice():
    # (1/2|.|^2 box 1/2|.|^2)(x) = min_y 1/2|y|^2 + 1/2|x-y|^2 on a 1-D slice
    q = Quadratic(np.eye(2))
    s = epi_sum(q, q)
    ys = np.linspace(-3, 3, 6001)
    for x in np.linspace(-1, 1, 7):
        brute = np.min(0.5 * ys ** 2 + 0.5 * (x - ys) ** 2)
        assert s.evaluate(np.array([x, 0.0])) == pytest.approx(brute, abs=1e-6)


def test_epi_mult_examples():
    q = Quadratic(np.eye(2))
    np.testing.assert_allclose(epi_mult(1.0, q).evaluate(PTS2), q.evaluate(PTS2))
    np.testing.assert_allclose(epi_mult(2.0, q).evaluate(PTS2), 0.25 * np.sum(PTS2 ** 2, axis=1))
    c = epi_mult(2.0, ConeBall(0.5, 1.0, n=2))
    assert isinstance(c, ConeBall) and c.R == 2.0 and c.t == 0.5
    with pytest.raises(DomainError):
        epi_mult(0.0, q)


@settings(max_examples=20, deadline=None)
@given(lam=st.floats(0.2, 4), mu=st.floats(0.2, 4))
def test_epi_mult_composes(lam, mu):
    u = SmoothRadial.power(2, 0.25, 4.0)
    np.testing.assert_allclose(epi_mult(lam, epi_mult(mu, u)).evaluate(PTS2),
                               epi_mult(lam * mu, u).evaluate(PTS2), rtol=1e-12)


def test_project_radial_keeps_profile():
    u = SmoothRadial.power(3, 0.25, 4.0)
    E = Subspace(np.linalg.qr(rng.standard_normal((3, 2)))[0])
    x = rng.uniform(-1, 1, (30, 2))
    np.testing.assert_allclose(project(u, E).evaluate(x), 0.25 * np.sum(x ** 2, axis=1) ** 2,
                               rtol=1e-12)


def test_project_cone():
    E = Subspace(np.linalg.qr(rng.standard_normal((3, 2)))[0])
    p = project(ConeBall(0.7, 1.0, n=3), E)
    x = rng.uniform(-1.2, 1.2, (200, 2))
    r = np.linalg.norm(x, axis=1)
    expect = np.where(r <= 1, 0.7 * r, np.inf)
    np.testing.assert_allclose(p.evaluate(x), expect)


def test_project_cube_indicator_to_axis():
    Q = SupportPlusIndicator(Polytope(np.zeros((1, 2))), Polytope.box((-1, 0), (2, 3)))
    p = project(Q, Subspace(np.array([[1.0], [0.0]])))
    vals = p.evaluate(np.array([[-1.5], [-0.9], [1.9], [2.1]]))
    np.testing.assert_allclose(vals, [np.inf, 0, 0, np.inf])


def test_project_commutes_with_epi_mult():
    u = Quadratic(np.array([[2.0, 0.4, 0.0], [0.4, 1.0, 0.2], [0.0, 0.2, 1.5]]))
    E = Subspace(np.linalg.qr(rng.standard_normal((3, 2)))[0])
    x = rng.uniform(-1, 1, (40, 2))
    np.testing.assert_allclose(project(epi_mult(1.7, u), E).evaluate(x),
                               epi_mult(1.7, project(u, E)).evaluate(x), rtol=1e-10)


def test_projection_subgradient_lifts():
    # proj onto e1 of h_P + I_Q, P=[-1/2,1/2]^2, Q=[-1,1]^2, is |x1|/2 on [-1,1]
    P, Q = Polytope.cube(2, 0.5), Polytope.cube(2, 1.0)
    u = SupportPlusIndicator(P, Q)
    p = project(u, Subspace(np.array([[1.0], [0.0]])))
    g = np.random.default_rng(11)
    for xe in (-0.6, 0.3, 0.8):
        ye = 0.5 * np.sign(xe)
        assert p.evaluate(np.array([xe])) == pytest.approx(0.5 * abs(xe), abs=1e-12)
        fiber = np.stack([np.full(2001, xe), np.linspace(-1, 1, 2001)], axis=1)
        x = fiber[np.argmin(u.evaluate(fiber))]
        z = g.uniform(-1, 1, (1000, 2))
        y = np.array([ye, 0.0])
        assert np.all(u.evaluate(z) >= u.evaluate(x) + (z - x) @ y - 1e-12)


def test_lattice_identical():
    q = Quadratic(np.eye(2))
    mx, mn = lattice_ops(q, q)
    np.testing.assert_allclose(mx.evaluate(PTS2), q.evaluate(PTS2))
    np.testing.assert_allclose(mn.evaluate(PTS2), q.evaluate(PTS2))


def test_lattice_tangent_radial_profiles():
    # r^2 and 2r^2 - r + 1/4 touch at r = 1/2; their minimum is convex in r
    r = np.linspace(0, 3, 3001)
    m = np.minimum(r ** 2, 2 * r ** 2 - r + 0.25)
    assert np.min(m[:-2] - 2 * m[1:-1] + m[2:]) >= -1e-12


def test_lattice_accepts_tangent_ramp_pair():
    from convval.convexfn import RampQuadratic
    q = Quadratic(np.eye(2))
    w = np.array([0.6, 0.8])
    u, v = RampQuadratic(q, w, 0.1, 0.5), RampQuadratic(q, -w, -0.1, 0.5)
    mx, mn = lattice_ops(u, v)
    assert not isinstance(mn, Rejected)
    np.testing.assert_allclose(mx.evaluate(PTS2) + mn.evaluate(PTS2),
                               u.evaluate(PTS2) + v.evaluate(PTS2), atol=1e-12)


def test_lattice_rejects_nonconvex_min():
    u = Quadratic(np.diag([1.0, 1e-3]))
    v = Quadratic(np.diag([1e-3, 1.0]))
    _, mn = lattice_ops(u, v, box=((-2, -2), (2, 2)))
    assert isinstance(mn, Rejected)


def test_subdifferential_examples():
    S = subdifferential_pl(PiecewiseLinearSum(np.zeros(2)), np.zeros(2))
    assert _vertex_set(S) == {(-0.5, -0.5), (-0.5, 0.5), (0.5, -0.5), (0.5, 0.5)}
    S = subdifferential_pl(PiecewiseLinearSum(np.zeros(3)), np.array([1.0, 2.0, 0.5]))
    assert _vertex_set(S) == {(0.5, 0.5, 0.5)}
    S = subdifferential_pl(SupportPlusIndicator(Polytope.cube(2, 1.0)), np.array([1.0, 0.0]))
    assert _vertex_set(S) == {(1.0, -1.0), (1.0, 1.0)}


def test_subdifferential_outside_domain():
    u = SupportPlusIndicator(Polytope.cube(2, 0.5), Polytope.cube(2, 1.0))
    with pytest.raises(DomainError):
        subdifferential_pl(u, np.array([2.0, 0.0]))


def test_grid_convexity_flag():
    x = np.linspace(-1, 1, 21)
    X, Y = np.meshgrid(x, x, indexing="ij")
    G = GridSampled((-1, -1), (1, 1), X ** 2 + Y ** 2)
    assert G.is_convex()
    with pytest.raises(Exception):
        GridSampled((-1, -1), (1, 1), -(X ** 2))
