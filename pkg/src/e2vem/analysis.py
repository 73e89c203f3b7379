"""Error norms, empirical convergence rates, and coercivity-scan tables.

Errors compare the elementwise linear elliptic projection of the discrete
solution (values and gradient) against the exact solution; this is the
metric the method is designed around, since the shape functions
themselves are never evaluated.
"""
from __future__ import annotations

import datetime
import json
from dataclasses import dataclass

import numpy as np

from .degree import dim_badpoly, ell_check, ell_hat, min_admissible_l
from .errors import DegenerateData, MissingExactSolution
from .geometry import PolygonalMesh, build_polygon, polygon_quadrature
from .meshgen import (PolygonFamilySpec, MeshFamilySpec, make_mesh,
                      make_polygon)
from .polyspace import ScaledMonomialBasis
from .projectors import compute_pinabla

_ERROR_QUADRATURE_DEGREE = 8


def _p1_projection_classes(mesh: PolygonalMesh, quadrature_degree: int):
    """Group cells into translation classes and compute, per class: the
    member index array, anchor offsets, the linear elliptic projector,
    quadrature (points, weights) and P1 basis values on the class
    representative. Translated copies share all of these."""
    groups: dict = {}
    verts = mesh.vertices
    for ci, cell in enumerate(mesh.cells):
        idx = np.fromiter(cell, dtype=np.int64, count=len(cell))
        pts = verts[idx]
        rel = np.round((pts - pts[0]) * 1e12).astype(np.int64)
        key = (len(cell), rel.tobytes())
        entry = groups.get(key)
        if entry is None:
            groups[key] = entry = ([], [], pts.copy())
        entry[0].append(idx)
        entry[1].append(pts[0])
    out = []
    for indices, anchors, rep_pts in groups.values():
        poly = build_polygon(rep_pts, normalize_orientation=False)
        pinabla = compute_pinabla(poly)
        qpts, qw = polygon_quadrature(poly, quadrature_degree)
        basis = ScaledMonomialBasis.from_polygon(poly, 1)
        out.append((np.asarray(indices),
                    np.asarray(anchors) - rep_pts[0],
                    pinabla, qpts, qw, basis.evaluate(qpts), basis.scale))
    return out


def l2_error(mesh: PolygonalMesh, degrees, vertex_values, exact,
             quadrature_degree: int = _ERROR_QUADRATURE_DEGREE) -> float:
    """sqrt of the summed squared L2 distance between the per-cell
    linear projection of the vertex data and ``exact``."""
    if exact is None:
        raise MissingExactSolution("l2_error needs an exact solution")
    u = np.asarray(vertex_values, dtype=float)
    total = 0.0
    for idx, offs, pinabla, qpts, qw, bvals, _ in \
            _p1_projection_classes(mesh, quadrature_degree):
        coeffs = u[idx] @ pinabla.T                     # (m, 3)
        vals = coeffs @ bvals.T                         # (m, P)
        pts = qpts[None, :, :] + offs[:, None, :]
        ex = np.asarray(exact(pts[..., 0].ravel(), pts[..., 1].ravel()),
                        dtype=float).reshape(vals.shape)
        total += float(((vals - ex) ** 2 @ qw).sum())
    return float(np.sqrt(total))


def h1_error(mesh: PolygonalMesh, degrees, vertex_values, exact_gradient,
             quadrature_degree: int = _ERROR_QUADRATURE_DEGREE) -> float:
    """Gradient analogue of :func:`l2_error` (H1 seminorm distance)."""
    if exact_gradient is None:
        raise MissingExactSolution("h1_error needs an exact gradient")
    u = np.asarray(vertex_values, dtype=float)
    total = 0.0
    for idx, offs, pinabla, qpts, qw, _, scale in \
            _p1_projection_classes(mesh, quadrature_degree):
        coeffs = u[idx] @ pinabla.T
        gx_h = coeffs[:, 1] / scale                     # constant per cell
        gy_h = coeffs[:, 2] / scale
        pts = qpts[None, :, :] + offs[:, None, :]
        gx, gy = exact_gradient(pts[..., 0].ravel(), pts[..., 1].ravel())
        shape = (len(idx), len(qw))
        dx = gx_h[:, None] - np.asarray(gx, dtype=float).reshape(shape)
        dy = gy_h[:, None] - np.asarray(gy, dtype=float).reshape(shape)
        total += float(((dx ** 2 + dy ** 2) @ qw).sum())
    return float(np.sqrt(total))


def solution_errors(result, quadrature_degree: int =
                    _ERROR_QUADRATURE_DEGREE):
    """(l2, h1) errors of a :class:`SolutionResult` against the declared
    exact solution."""
    problem = result.problem
    return (l2_error(result.mesh, result.degrees, result.vertex_values,
                     problem.exact_solution, quadrature_degree),
            h1_error(result.mesh, result.degrees, result.vertex_values,
                     problem.exact_gradient, quadrature_degree))


def eoc_rates(hs, errs):
    """Least-squares convergence rate and per-step rates.

    Returns ``(fitted, steps)`` where ``fitted`` is the slope of
    log(err) against log(h) and ``steps[i]`` compares rows i, i+1.
    """
    h = np.asarray(hs, dtype=float)
    e = np.asarray(errs, dtype=float)
    if len(h) != len(e):
        raise DegenerateData("mesh sizes and errors differ in length")
    if len(h) < 2:
        raise DegenerateData("need at least two levels to fit a rate")
    if (h <= 0.0).any() or (e <= 0.0).any():
        raise DegenerateData("non-positive mesh size or error")
    if len(np.unique(h)) != len(h):
        raise DegenerateData("repeated mesh size")
    lh, le = np.log(h), np.log(e)
    fitted = float(np.polyfit(lh, le, 1)[0])
    steps = [float((le[i] - le[i + 1]) / (lh[i] - lh[i + 1]))
             for i in range(len(h) - 1)]
    return fitted, steps


# -- coercivity scans --------------------------------------------------

@dataclass(frozen=True)
class ScanRow:
    n_vertices: int
    ell_hat: int
    ell_check: int
    minimal_l: int
    dim_badpoly_at_minimal: int


_DEFAULT_ALPHAS = (0.0, 0.2, 0.4, 0.6)


def _scan_specs(family: str, n_range, seeds, alphas):
    if family == "regular":
        return [PolygonFamilySpec("regular", n=n) for n in n_range]
    if family == "random_convex":
        return [PolygonFamilySpec("random_convex", n=n, seed=s)
                for n in n_range for s in seeds]
    if family == "split_triangle":
        return [PolygonFamilySpec("split_triangle", step=n - 3)
                for n in n_range]
    if family == "split_hexagon":
        return [PolygonFamilySpec("split_hexagon", step=n - 6)
                for n in n_range]
    if family == "concave_octagon":
        return [PolygonFamilySpec("concave_octagon", alpha=a)
                for a in alphas]
    raise ValueError(f"unknown polygon family {family!r}")


def scan_polygon(poly) -> ScanRow:
    n = poly.n_vertices
    evidence = min_admissible_l(poly)
    bad = dim_badpoly(poly, evidence.l)
    return ScanRow(n, ell_hat(n), ell_check(n), evidence.l, bad.dimension)


def coercivity_scan(family: str, n_range=None, seeds=(0,),
                    alphas=_DEFAULT_ALPHAS):
    """Per-polygon degree table over a named family.

    ``n_range`` holds vertex counts (ignored for concave_octagon, which
    sweeps ``alphas``); ``seeds`` only matters for random_convex.
    Deterministic given the arguments.
    """
    rows = []
    for spec in _scan_specs(family, n_range or (), seeds, alphas):
        rows.append(scan_polygon(make_polygon(spec)))
    return rows


_SCAN_HEADER = "n_vertices,ell_hat,ell_check,minimal_l,dim_badpoly_at_minimal"


def _preamble(config) -> str:
    lines = []
    if config is not None:
        lines.append("# config: " + json.dumps(config, sort_keys=True))
    stamp = datetime.datetime.now(datetime.timezone.utc).isoformat()
    lines.append("# generated: " + stamp)
    return "\n".join(lines) + "\n"


def scan_to_csv(rows, path, config=None) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(_preamble(config))
        fh.write(_SCAN_HEADER + "\n")
        for r in rows:
            fh.write(f"{r.n_vertices},{r.ell_hat},{r.ell_check},"
                     f"{r.minimal_l},{r.dim_badpoly_at_minimal}\n")


# -- convergence studies -----------------------------------------------

@dataclass(frozen=True)
class StudyRow:
    h: float
    ncells: int
    dofs: int
    err_l2: float
    err_h1: float
    solve_iters: int


_STUDY_HEADER = "h,ncells,dofs,err_l2,err_h1,rate_l2,rate_h1"


@dataclass(frozen=True)
class StudyReport:
    """Per-level errors plus fitted and per-step convergence rates."""

    rows: tuple
    rate_l2: float
    rate_h1: float
    steps_l2: tuple
    steps_h1: tuple
    config: dict = None

    def __post_init__(self):
        hs = [r.h for r in self.rows]
        if any(b >= a for a, b in zip(hs, hs[1:])):
            raise DegenerateData("mesh sizes must decrease across rows")
        if any(r.err_l2 <= 0.0 or r.err_h1 <= 0.0 for r in self.rows):
            raise DegenerateData("non-positive error in study rows")

    def to_csv(self, path) -> None:
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(_preamble(self.config))
            fh.write(_STUDY_HEADER + "\n")
            for i, r in enumerate(self.rows):
                rl2 = "" if i == 0 else format(self.steps_l2[i - 1], ".6g")
                rh1 = "" if i == 0 else format(self.steps_h1[i - 1], ".6g")
                fh.write(f"{format(r.h, '.12g')},{r.ncells},{r.dofs},"
                         f"{format(r.err_l2, '.12e')},"
                         f"{format(r.err_h1, '.12e')},{rl2},{rh1}\n")
            fh.write(f"# fitted: rate_l2={format(self.rate_l2, '.6g')} "
                     f"rate_h1={format(self.rate_h1, '.6g')}\n")


def build_report(rows, config=None) -> StudyReport:
    rate_l2, steps_l2 = eoc_rates([r.h for r in rows],
                                  [r.err_l2 for r in rows])
    rate_h1, steps_h1 = eoc_rates([r.h for r in rows],
                                  [r.err_h1 for r in rows])
    return StudyReport(tuple(rows), rate_l2, rate_h1, tuple(steps_l2),
                       tuple(steps_h1), config)


def run_convergence_study(mesh_family: str, levels, problem,
                          strategy="minimal", load_mode: str = "mean",
                          solver: str = "auto", tol: float = 1e-12,
                          config: dict = None) -> StudyReport:
    """Solve on a refinement sequence and fit convergence rates.

    ``levels`` is an int (levels 0..levels-1) or an explicit iterable.
    """
    from .assembly import solve_problem

    if isinstance(levels, int):
        levels = range(levels)
    levels = list(levels)
    if len(levels) < 2:
        raise DegenerateData("need at least two levels to fit a rate")
    rows = []
    for level in levels:
        mesh = make_mesh(MeshFamilySpec(mesh_family, level=level))
        result = solve_problem(mesh, strategy, problem,
                               load_mode=load_mode, solver=solver, tol=tol)
        el2, eh1 = solution_errors(result)
        rows.append(StudyRow(mesh.h, mesh.n_cells, result.n_dofs,
                             el2, eh1, result.stats.iterations))
    return build_report(rows, config)
