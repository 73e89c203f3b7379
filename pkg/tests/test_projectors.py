import numpy as np
import pytest

from e2vem.geometry import build_polygon, polygon_quadrature
from e2vem.meshgen import PolygonFamilySpec, make_polygon, regular_polygon
from e2vem.polyspace import ScaledMonomialBasis, space_dimension
from e2vem.projectors import (
    build_projectors,
    compute_pinabla,
    compute_pione,
    compute_pizero,
    local_load,
    local_reaction,
    local_stiffness,
    project_gradient_from_data,
)

from oracles import monte_carlo_integral

UNIT_SQUARE = [(0.0, 0.0), (1.0, 0.0), (1.0, 1.0), (0.0, 1.0)]
UNIT_RIGHT_TRIANGLE = [(0.0, 0.0), (1.0, 0.0), (0.0, 1.0)]


def evaluate_linear(poly, coeffs, pts):
    basis = ScaledMonomialBasis.from_polygon(poly, 1)
    return basis.evaluate(pts) @ coeffs


def test_pinabla_constant_and_linear_dofs():
    for poly in (build_polygon(UNIT_SQUARE), regular_polygon(7),
                 make_polygon(PolygonFamilySpec("concave_octagon", n=8, alpha=0.4))):
        pina = compute_pinabla(poly)
        pts, _ = polygon_quadrature(poly, 2)
        ones = np.ones(poly.n_vertices)
        assert np.allclose(evaluate_linear(poly, pina @ ones, pts), 1.0, atol=1e-13)
        xs = poly.vertices[:, 0]
        assert np.allclose(evaluate_linear(poly, pina @ xs, pts), pts[:, 0], atol=1e-12)


def test_pinabla_unit_square_hand_case():
    poly = build_polygon(UNIT_SQUARE)
    pina = compute_pinabla(poly)
    dofs = np.array([0.0, 1.0, 1.0, 0.0])  # trace of x at the corners
    pts, _ = polygon_quadrature(poly, 2)
    assert np.allclose(evaluate_linear(poly, pina @ dofs, pts), pts[:, 0], atol=1e-13)


@pytest.mark.parametrize("l", [0, 1, 2, 3])
def test_pigrad_exact_on_linears_any_l(l):
    poly = regular_polygon(9)
    projs = build_projectors(poly, l)
    dofs = 0.25 - 1.5 * poly.vertices[:, 0] + 0.75 * poly.vertices[:, 1]
    coeffs = projs.pigrad @ dofs
    nl = space_dimension(l)
    basis = ScaledMonomialBasis.from_polygon(poly, l)
    pts, _ = polygon_quadrature(poly, 2 * l + 1)
    gx = basis.evaluate(pts) @ coeffs[:nl]
    gy = basis.evaluate(pts) @ coeffs[nl:]
    assert np.allclose(gx, -1.5, atol=1e-11)
    assert np.allclose(gy, 0.75, atol=1e-11)


@pytest.mark.parametrize("l", [0, 1, 2])
def test_pigrad_triangle_exact_for_all_dofs(l):
    poly = build_polygon([(0.1, 0.0), (1.2, 0.3), (0.4, 1.1)])
    projs = build_projectors(poly, l)
    rng = np.random.default_rng(11)
    v = poly.vertices
    # P1 interpolation through arbitrary vertex data; its gradient
    grad_basis = np.linalg.solve(
        np.column_stack([np.ones(3), v]), np.eye(3))[1:]
    for _ in range(4):
        dofs = rng.standard_normal(3)
        gexact = grad_basis @ dofs
        coeffs = projs.pigrad @ dofs
        nl = space_dimension(l)
        basis = ScaledMonomialBasis.from_polygon(poly, l)
        pts, _ = polygon_quadrature(poly, max(1, 2 * l))
        assert np.allclose(basis.evaluate(pts) @ coeffs[:nl], gexact[0], atol=1e-11)
        assert np.allclose(basis.evaluate(pts) @ coeffs[nl:], gexact[1], atol=1e-11)


def test_pigrad_unit_square_hand_case():
    projs = build_projectors(build_polygon(UNIT_SQUARE), 1)
    coeffs = projs.pigrad @ np.array([0.0, 1.0, 1.0, 0.0])
    nl = space_dimension(1)
    # constant field (1, 0): only the constant monomial contributes
    assert coeffs[0] == pytest.approx(1.0, abs=1e-12)
    assert np.allclose(coeffs[1:nl], 0.0, atol=1e-12)
    assert np.allclose(coeffs[nl:], 0.0, atol=1e-12)


def test_pizero_and_pione():
    poly = build_polygon(UNIT_SQUARE)
    pz = compute_pizero(poly)
    assert pz @ np.ones(4) == pytest.approx(1.0, abs=1e-13)
    assert pz @ np.array([1.0, 0.0, 1.0, 0.0]) == pytest.approx(0.5, abs=1e-13)
    pione = compute_pione(poly)
    dofs = 0.2 + 0.9 * poly.vertices[:, 0] - 0.4 * poly.vertices[:, 1]
    pts, _ = polygon_quadrature(poly, 2)
    exact = 0.2 + 0.9 * pts[:, 0] - 0.4 * pts[:, 1]
    assert np.allclose(evaluate_linear(poly, pione @ dofs, pts), exact, atol=1e-12)


def test_local_stiffness_unit_right_triangle():
    K = local_stiffness(build_polygon(UNIT_RIGHT_TRIANGLE), 0)
    expected = 0.5 * np.array([[2.0, -1.0, -1.0],
                               [-1.0, 1.0, 0.0],
                               [-1.0, 0.0, 1.0]])
    assert np.allclose(K, expected, atol=1e-14)


def test_local_stiffness_hexagon_ranks():
    poly = regular_polygon(6)
    K2 = local_stiffness(poly, 2)
    ev2 = np.linalg.eigvalsh(K2)
    assert int(np.sum(ev2 > 1e-10 * ev2[-1])) == 5
    K1 = local_stiffness(poly, 1)
    ev1 = np.linalg.eigvalsh(K1)
    assert int(np.sum(ev1 > 1e-10 * ev1[-1])) < 5


def test_local_stiffness_symmetric_psd_kernel():
    for poly in (regular_polygon(5), regular_polygon(8),
                 make_polygon(PolygonFamilySpec("random_convex", n=10, seed=2))):
        from e2vem.degree import min_admissible_l

        l = min_admissible_l(poly).l
        K = local_stiffness(poly, l)
        assert np.allclose(K, K.T, atol=1e-13)
        assert np.linalg.eigvalsh(K)[0] > -1e-12
        assert np.max(np.abs(K @ np.ones(poly.n_vertices))) < 1e-12


def test_local_reaction_rank_one_psd():
    poly = regular_polygon(6)
    pz = compute_pizero(poly)
    M = local_reaction(poly, pz)
    assert np.linalg.matrix_rank(M, tol=1e-12) == 1
    assert np.linalg.eigvalsh(M)[0] > -1e-14


def test_local_load_cases():
    poly = build_polygon(UNIT_SQUARE)
    projs = build_projectors(poly, 1)
    f_one = local_load(poly, projs, lambda x, y: np.ones_like(x), mode="mean")
    assert np.allclose(f_one, 0.25, atol=1e-13)
    f_zero = local_load(poly, projs, lambda x, y: np.zeros_like(x), mode="mean")
    assert not f_zero.any()

    def f(x, y):
        return 8 * np.pi ** 2 * np.sin(2 * np.pi * x) * np.sin(2 * np.pi * y)

    f_mean = local_load(poly, projs, f, mode="mean", quadrature_degree=20)
    est, se = monte_carlo_integral(poly.vertices, f)
    # mean mode distributes (integral of f) by the cell-mean row
    assert f_mean.sum() == pytest.approx(est, abs=5 * se + 1e-6)


def test_project_gradient_from_data_quartic():
    poly = make_polygon(PolygonFamilySpec("random_convex", n=8, seed=5))
    l = 3

    def p(x, y):
        return x ** 4 - 2.0 * x ** 2 * y ** 2 + 0.5 * y ** 3

    def grad_p(x, y):
        return 4 * x ** 3 - 4 * x * y ** 2, -4 * x ** 2 * y + 1.5 * y ** 2

    basis_lm1 = ScaledMonomialBasis.from_polygon(poly, l - 1)
    qpts, qw = polygon_quadrature(poly, 2 * l + 2)
    vm = basis_lm1.evaluate(qpts).T @ (p(qpts[:, 0], qpts[:, 1]) * qw)
    coeffs = project_gradient_from_data(
        poly, l, lambda pts: p(pts[:, 0], pts[:, 1]), vm)
    nl = space_dimension(l)
    basis = ScaledMonomialBasis.from_polygon(poly, l)
    pts, _ = polygon_quadrature(poly, 2 * l)
    gx, gy = grad_p(pts[:, 0], pts[:, 1])
    assert np.allclose(basis.evaluate(pts) @ coeffs[:nl], gx, atol=1e-11)
    assert np.allclose(basis.evaluate(pts) @ coeffs[nl:], gy, atol=1e-11)


def test_gram_condition_reported():
    projs = build_projectors(regular_polygon(6), 2)
    assert projs.gram_condition >= 1.0
