import numpy as np
import pytest

from e2vem.degree import (
    assign_degrees,
    dim_badpoly,
    ell_check,
    ell_hat,
    min_admissible_l,
    parse_strategy,
)
from e2vem.errors import AdmissibilityNotReached
from e2vem.geometry import build_polygon
from e2vem.meshgen import (
    MeshFamilySpec,
    PolygonFamilySpec,
    make_mesh,
    make_polygon,
    regular_polygon,
)

from oracles import badpoly_dim_symbolic, ell_check_formula, ell_hat_formula

UNIT_SQUARE = [(0.0, 0.0), (1.0, 0.0), (1.0, 1.0), (0.0, 1.0)]


def test_ell_hat_check_examples():
    assert ell_hat(6) == 2
    assert ell_hat(20) == 9
    assert ell_check(8) == 2
    assert ell_check(16) == 3
    assert ell_hat(3) == 0 and ell_check(3) == 0


@pytest.mark.parametrize("n", range(3, 40))
def test_ell_formulas_match_definitions(n):
    assert ell_hat(n) == ell_hat_formula(n)
    assert ell_check(n) == ell_check_formula(n)
    assert ell_check(n) <= ell_hat(n)


def test_dim_badpoly_known_polygons():
    assert dim_badpoly(regular_polygon(6), 1).dimension == 2
    for tri in ([(0, 0), (1, 0), (0, 1)], [(0.3, 0.1), (2.1, 0.4), (0.9, 1.8)]):
        assert dim_badpoly(build_polygon(tri), 0).dimension == 0


def test_dim_badpoly_unit_square_symbolic_oracle():
    got = dim_badpoly(build_polygon(UNIT_SQUARE), 1).dimension
    assert got == badpoly_dim_symbolic(UNIT_SQUARE, 1) == 3


def test_dim_badpoly_hexagon_matches_symbolic():
    import sympy as sp

    hexv = [(sp.cos(sp.pi * sp.Rational(i, 3)), sp.sin(sp.pi * sp.Rational(i, 3)))
            for i in range(6)]
    assert badpoly_dim_symbolic(hexv, 1) == 2


def test_min_admissible_examples():
    assert min_admissible_l(regular_polygon(12)).l == 5
    split12 = make_polygon(PolygonFamilySpec("split_triangle", step=9))
    assert min_admissible_l(split12).l == 4
    concave = make_polygon(PolygonFamilySpec("concave_octagon", n=8, alpha=0.2))
    assert min_admissible_l(concave).l == 2


def test_evidence_consistency():
    # rank certificate and bad-polynomial dimension tell the same story
    for poly in (regular_polygon(6), regular_polygon(9),
                 make_polygon(PolygonFamilySpec("random_convex", n=11, seed=6))):
        ev = min_admissible_l(poly)
        nv = poly.n_vertices
        assert ell_check(nv) <= ev.l <= ell_hat(nv)
        assert ev.admissible and ev.rank == nv - 1
        bp = dim_badpoly(poly, ev.l).dimension
        assert (ev.l + 1) * (ev.l + 2) - bp == ev.rank


def test_admissibility_monotone_in_l():
    for poly in (regular_polygon(8), make_polygon(
            PolygonFamilySpec("random_convex", n=12, seed=3))):
        ev = min_admissible_l(poly)
        from e2vem.projectors import local_stiffness

        for l in range(ev.l, ev.l + 3):
            K = local_stiffness(poly, l)
            evals = np.linalg.eigvalsh(K)
            assert int(np.sum(evals > 1e-10 * evals[-1])) == poly.n_vertices - 1


def test_minimal_l_invariant_under_rigid_motion_and_scaling():
    poly = make_polygon(PolygonFamilySpec("random_convex", n=9, seed=8))
    base = min_admissible_l(poly).l
    theta = 0.6
    R = np.array([[np.cos(theta), -np.sin(theta)],
                  [np.sin(theta), np.cos(theta)]])
    for transform in (
        lambda v: v + np.array([3.0, -7.0]),
        lambda v: v @ R.T,
        lambda v: 0.01 * v,
        lambda v: 40.0 * (v @ R.T) + np.array([-2.0, 5.0]),
    ):
        moved = build_polygon(transform(poly.vertices))
        assert min_admissible_l(moved).l == base


def test_parse_strategy():
    assert parse_strategy("minimal") == ("minimal", None)
    assert parse_strategy("ell-hat") == ("ell_hat", None)
    assert parse_strategy("ell_check") == ("ell_check", None)
    assert parse_strategy("fixed:3") == ("fixed", 3)
    with pytest.raises(ValueError):
        parse_strategy("nope")


def test_assign_degrees_examples():
    tri_mesh = make_mesh(MeshFamilySpec("triangulation", level=0))
    for strat in ("minimal", "ell_hat", "ell_check"):
        assert not assign_degrees(tri_mesh, strat).levels.any()

    honey = make_mesh(MeshFamilySpec("honeycomb", level=0))
    degs = assign_degrees(honey, "ell_hat")
    sizes = np.array([len(c) for c in honey.cells])
    assert np.all(degs.levels[sizes == 6] == 2)

    cut = make_mesh(MeshFamilySpec("cut_corner_octagon", level=0))
    degs = assign_degrees(cut, "minimal")
    sizes = np.array([len(c) for c in cut.cells])
    assert np.all(degs.levels[sizes == 3] == 0)
    assert np.all(degs.levels[sizes == 4] == 1)
    assert np.all(degs.levels[sizes == 8] == 2)


def test_assign_degrees_fixed_below_minimal_raises():
    honey = make_mesh(MeshFamilySpec("honeycomb", level=0))
    with pytest.raises(AdmissibilityNotReached):
        assign_degrees(honey, "fixed:1")
    with pytest.raises(AdmissibilityNotReached):
        assign_degrees(honey, "ell_check")


def test_assign_degrees_memoizes_congruent_cells():
    mesh = make_mesh(MeshFamilySpec("honeycomb", level=1))
    import time

    t0 = time.perf_counter()
    assign_degrees(mesh, "minimal")
    assert time.perf_counter() - t0 < 2.0  # 1166 cells, a handful of classes
