"""Polygons, polygonal meshes, quadrature over cells and edges, and
validation of the mesh assumptions (star-shapedness, edge lengths,
conforming tessellation).

Polygons are simple counter-clockwise vertex chains. Every polygon carries
a star center: the area centroid when it lies strictly inside the kernel,
otherwise the Chebyshev center of the kernel obtained from the half-plane
intersection linear program.
"""
from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property, lru_cache

import numpy as np
from scipy.optimize import linprog

from .errors import (ClockwiseOrientation, NotSimple, NotStarShaped,
                     StructuralDefect)
from .quadrature import segment_rule, triangle_rule


@dataclass(frozen=True, eq=False)
class Polygon:
    """Simple CCW polygon, star-shaped with respect to ``star_center``.

    Attributes
    ----------
    vertices : (n, 2) array
        Counter-clockwise vertex coordinates.
    area, diameter : float
        Enclosed area and largest vertex-to-vertex distance ``h_E``.
    star_center : (2,) array
        Point strictly inside the kernel used for fan sub-triangulation
        and as the scaled-monomial center ``x_C``.
    edge_lengths : (n,) array
        ``edge_lengths[i]`` is the length of edge ``(v_i, v_{i+1})``.
    edge_normals : (n, 2) array
        Outward unit normals, one per edge.
    kernel_inradius : float
        Radius of the largest ball about ``star_center`` contained in the
        kernel (``rho`` in the shape-regularity ratio ``rho / h_E``).
    """

    vertices: np.ndarray
    area: float
    diameter: float
    star_center: np.ndarray
    edge_lengths: np.ndarray
    edge_normals: np.ndarray
    kernel_inradius: float

    @property
    def n_vertices(self) -> int:
        return len(self.vertices)

    @property
    def perimeter(self) -> float:
        return float(self.edge_lengths.sum())


@dataclass(frozen=True, eq=False)
class SubTriangulation:
    """Fan of triangles (star_center, v_i, v_{i+1}), positively oriented."""

    triangles: np.ndarray  # (n, 3, 2)
    areas: np.ndarray      # (n,)


def _signed_area(pts):
    x, y = pts[:, 0], pts[:, 1]
    return 0.5 * float(np.dot(x, np.roll(y, -1)) - np.dot(np.roll(x, -1), y))


def _area_centroid(pts):
    nxt = np.roll(pts, -1, axis=0)
    cross = pts[:, 0] * nxt[:, 1] - nxt[:, 0] * pts[:, 1]
    area = 0.5 * cross.sum()
    return ((pts + nxt) * cross[:, None]).sum(axis=0) / (6.0 * area)


def _diameter(pts):
    diff = pts[:, None, :] - pts[None, :, :]
    return float(np.sqrt((diff ** 2).sum(axis=2)).max())


@lru_cache(maxsize=None)
def _nonadjacent_pairs(n):
    pairs = [(i, j) for i in range(n) for j in range(i + 1, n)
             if j != i + 1 and not (i == 0 and j == n - 1)]
    return np.array(pairs, dtype=int).reshape(-1, 2)


def _orient(a, b, c):
    return ((b[:, 0] - a[:, 0]) * (c[:, 1] - a[:, 1])
            - (b[:, 1] - a[:, 1]) * (c[:, 0] - a[:, 0]))


def _check_simple(pts, diameter):
    n = len(pts)
    d = np.roll(pts, -1, axis=0) - pts
    lens = np.hypot(d[:, 0], d[:, 1])
    if lens.min() <= 1e-14 * diameter:
        raise NotSimple("zero-length edge (repeated consecutive vertices)")
    # straight angles (collinear vertices) are allowed; folds back are not
    nxt = np.roll(d, -1, axis=0)
    cross = d[:, 0] * nxt[:, 1] - d[:, 1] * nxt[:, 0]
    dot = (d * nxt).sum(axis=1)
    tol = 1e-12 * diameter ** 2
    if np.any((np.abs(cross) <= tol) & (dot < 0.0)):
        raise NotSimple("boundary folds back on itself")
    pairs = _nonadjacent_pairs(n)
    if len(pairs) == 0:
        return
    a = pts[pairs[:, 0]]
    b = pts[pairs[:, 0] + 1]
    c = pts[pairs[:, 1]]
    e = pts[(pairs[:, 1] + 1) % n]
    o1 = _orient(a, b, c)
    o2 = _orient(a, b, e)
    o3 = _orient(c, e, a)
    o4 = _orient(c, e, b)
    proper = (o1 * o2 < -tol * tol) & (o3 * o4 < -tol * tol)
    if proper.any():
        raise NotSimple("non-adjacent edges intersect")
    # touching or collinear-overlap: some orientation ~0 with overlapping boxes
    near = (np.abs(o1) <= tol) | (np.abs(o2) <= tol) | (np.abs(o3) <= tol) | (np.abs(o4) <= tol)
    if near.any():
        idx = np.where(near)[0]
        for k in idx:
            lo1 = np.minimum(a[k], b[k]) - tol
            hi1 = np.maximum(a[k], b[k]) + tol
            lo2 = np.minimum(c[k], e[k]) - tol
            hi2 = np.maximum(c[k], e[k]) + tol
            boxes_overlap = np.all(hi1 >= lo2) and np.all(hi2 >= lo1)
            crossing = (o1[k] * o2[k] <= tol * tol) and (o3[k] * o4[k] <= tol * tol)
            if boxes_overlap and crossing:
                raise NotSimple("non-adjacent edges touch or overlap")


def _inward_clearance(pts, point):
    d = np.roll(pts, -1, axis=0) - pts
    lens = np.hypot(d[:, 0], d[:, 1])
    n_in = np.column_stack([-d[:, 1], d[:, 0]]) / lens[:, None]
    return float((n_in * (point[None, :] - pts)).sum(axis=1).min())


def _chebyshev_kernel_point(pts):
    d = np.roll(pts, -1, axis=0) - pts
    lens = np.hypot(d[:, 0], d[:, 1])
    n_in = np.column_stack([-d[:, 1], d[:, 0]]) / lens[:, None]
    a_ub = np.column_stack([-n_in, np.ones(len(pts))])
    b_ub = -(n_in * pts).sum(axis=1)
    res = linprog([0.0, 0.0, -1.0], A_ub=a_ub, b_ub=b_ub,
                  bounds=[(None, None), (None, None), (0, None)],
                  method="highs")
    if not res.success:
        raise NotStarShaped("kernel half-plane intersection is empty")
    return np.array(res.x[:2]), float(res.x[2])


def _star_center(pts, diameter):
    center = _area_centroid(pts)
    clearance = _inward_clearance(pts, center)
    if clearance > 1e-9 * diameter:
        return center, clearance
    center, radius = _chebyshev_kernel_point(pts)
    if not np.isfinite(radius) or radius <= 1e-12 * diameter:
        raise NotStarShaped("kernel is empty or degenerate")
    return center, _inward_clearance(pts, center)


def build_polygon(points, *, normalize_orientation=True) -> Polygon:
    """Build a validated :class:`Polygon` from an ordered vertex list.

    Clockwise input is reversed when ``normalize_orientation`` is true
    (the default), otherwise it raises :class:`ClockwiseOrientation`.
    Raises :class:`NotSimple` for degenerate or self-intersecting chains
    and :class:`NotStarShaped` when the kernel is empty.
    """
    pts = np.array(points, dtype=float)
    if pts.ndim != 2 or pts.shape[1] != 2 or len(pts) < 3:
        raise NotSimple("a polygon needs at least 3 planar vertices")
    if not np.all(np.isfinite(pts)):
        raise NotSimple("non-finite vertex coordinates")
    diameter = _diameter(pts)
    if diameter == 0.0:
        raise NotSimple("all vertices coincide")
    area = _signed_area(pts)
    if abs(area) <= 1e-14 * diameter ** 2:
        raise NotSimple("degenerate polygon (zero area)")
    if area < 0.0:
        if not normalize_orientation:
            raise ClockwiseOrientation("vertices are ordered clockwise")
        pts = pts[::-1].copy()
        area = -area
    _check_simple(pts, diameter)
    d = np.roll(pts, -1, axis=0) - pts
    lens = np.hypot(d[:, 0], d[:, 1])
    normals = np.column_stack([d[:, 1], -d[:, 0]]) / lens[:, None]
    center, inradius = _star_center(pts, diameter)
    for arr in (pts, center, lens, normals):
        arr.setflags(write=False)
    return Polygon(pts, float(area), diameter, center, lens, normals,
                   float(inradius))


def sub_triangulate(poly: Polygon) -> SubTriangulation:
    """Fan sub-triangulation of ``poly`` around its star center."""
    v = poly.vertices
    w = np.roll(v, -1, axis=0)
    c = np.broadcast_to(poly.star_center, v.shape)
    tris = np.stack([c, v, w], axis=1)
    rel_v = v - poly.star_center
    rel_w = w - poly.star_center
    areas = 0.5 * (rel_v[:, 0] * rel_w[:, 1] - rel_v[:, 1] * rel_w[:, 0])
    if areas.min() <= 0.0:
        raise NotStarShaped("star center does not see the whole boundary")
    return SubTriangulation(tris, areas)


def polygon_quadrature(poly: Polygon, degree: int):
    """Quadrature points/weights over ``poly`` exact to ``degree``."""
    rule = triangle_rule(degree)
    sub = sub_triangulate(poly)
    tris = sub.triangles
    e1 = tris[:, 1] - tris[:, 0]
    e2 = tris[:, 2] - tris[:, 0]
    x = rule.nodes[None, :, 0, None]
    y = rule.nodes[None, :, 1, None]
    pts = tris[:, None, 0, :] + x * e1[:, None, :] + y * e2[:, None, :]
    w = 2.0 * sub.areas[:, None] * rule.weights[None, :]
    return pts.reshape(-1, 2), w.ravel()


def polygon_integrate(poly: Polygon, f, degree: int) -> float:
    """Integrate ``f(x, y)`` over the polygon, exactly for total degree
    <= ``degree``."""
    pts, w = polygon_quadrature(poly, degree)
    return float(w @ np.asarray(f(pts[:, 0], pts[:, 1]), dtype=float))


def edge_integrate(edge, f, degree: int) -> float:
    """Integrate ``f(x, y)`` along a segment ``edge = (p0, p1)``."""
    p0 = np.asarray(edge[0], dtype=float)
    p1 = np.asarray(edge[1], dtype=float)
    rule = segment_rule(degree)
    pts = p0[None, :] + rule.nodes[:, None] * (p1 - p0)[None, :]
    length = float(np.hypot(*(p1 - p0)))
    vals = np.asarray(f(pts[:, 0], pts[:, 1]), dtype=float)
    return float((rule.weights * length) @ vals)


class PolygonalMesh:
    """Conforming polygonal tessellation described by shared vertices.

    Parameters
    ----------
    vertices : (N, 2) array_like
        Vertex coordinates.
    cells : sequence of sequences of int
        Per-cell CCW chains of 0-based vertex indices.
    name : str, optional
        Label carried through JSON round trips.

    Boundary vertices are inferred: an edge used by exactly one cell is a
    boundary edge and its endpoints are boundary vertices.
    """

    def __init__(self, vertices, cells, name=None):
        self.vertices = np.array(vertices, dtype=float)
        if self.vertices.ndim != 2 or self.vertices.shape[1] != 2:
            raise StructuralDefect("vertices must be an (N, 2) array")
        self.vertices.setflags(write=False)
        self.cells = tuple(tuple(int(i) for i in cell) for cell in cells)
        self.name = name

    @property
    def n_vertices(self) -> int:
        return len(self.vertices)

    @property
    def n_cells(self) -> int:
        return len(self.cells)

    @cached_property
    def _undirected_edge_counts(self):
        counts = {}
        for cell in self.cells:
            m = len(cell)
            for k in range(m):
                a, b = cell[k], cell[(k + 1) % m]
                key = (a, b) if a < b else (b, a)
                counts[key] = counts.get(key, 0) + 1
        return counts

    @cached_property
    def boundary_vertex_flags(self):
        flags = np.zeros(self.n_vertices, dtype=bool)
        for (a, b), count in self._undirected_edge_counts.items():
            if count == 1:
                flags[a] = True
                flags[b] = True
        flags.setflags(write=False)
        return flags

    @cached_property
    def polygons(self):
        return [build_polygon(self.vertices[list(cell)],
                              normalize_orientation=False)
                for cell in self.cells]

    def polygon(self, i: int) -> Polygon:
        return self.polygons[i]

    @cached_property
    def h(self) -> float:
        # max pairwise vertex distance per cell; cheaper than building
        # every Polygon when only the mesh size is needed
        if "polygons" in self.__dict__:
            return max(p.diameter for p in self.polygons)
        sq = 0.0
        for cell in self.cells:
            pts = self.vertices[list(cell)]
            diff = pts[:, None, :] - pts[None, :, :]
            sq = max(sq, float((diff * diff).sum(-1).max()))
        return float(np.sqrt(sq))


@dataclass(frozen=True)
class MeshQuality:
    """Shape-regularity report produced by :func:`validate_mesh`."""

    kappa: float
    max_vertices: int
    cell_kernel_ratios: np.ndarray  # rho / h_E per cell
    cell_edge_ratios: np.ndarray    # min |e| / h_E per cell
    kappa_min: float
    passed: bool
    n_cells: int
    total_area: float


def validate_mesh(mesh: PolygonalMesh, kappa_min: float = 0.0) -> MeshQuality:
    """Check structural validity and report shape-regularity numbers.

    Raises :class:`StructuralDefect` (naming the offending cell) when the
    tessellation is broken: bad indices, repeated vertices inside a cell,
    an edge used twice with the same orientation, an edge shared by more
    than two cells, non-CCW or invalid cell polygons, or cell areas that
    do not tile the region enclosed by the boundary edges.
    """
    n = mesh.n_vertices
    directed = {}
    for ci, cell in enumerate(mesh.cells):
        if len(cell) < 3:
            raise StructuralDefect("fewer than 3 vertices", cell=ci)
        if any(i < 0 or i >= n for i in cell):
            raise StructuralDefect("vertex index out of range", cell=ci)
        if len(set(cell)) != len(cell):
            raise StructuralDefect("repeated vertex inside cell", cell=ci)
        m = len(cell)
        for k in range(m):
            key = (cell[k], cell[(k + 1) % m])
            if key in directed:
                raise StructuralDefect(
                    f"edge {key} already used with the same orientation by "
                    f"cell {directed[key]}", cell=ci)
            directed[key] = ci
    for (a, b), count in mesh._undirected_edge_counts.items():
        if count > 2:
            raise StructuralDefect(f"edge ({a}, {b}) shared by {count} cells")
    polygons = []
    for ci, cell in enumerate(mesh.cells):
        try:
            polygons.append(build_polygon(mesh.vertices[list(cell)],
                                          normalize_orientation=False))
        except (NotSimple, NotStarShaped, ClockwiseOrientation) as exc:
            raise StructuralDefect(str(exc), cell=ci) from exc
    total_area = sum(p.area for p in polygons)
    boundary_area = 0.0
    for (a, b), ci in directed.items():
        if (b, a) not in directed:
            va, vb = mesh.vertices[a], mesh.vertices[b]
            boundary_area += 0.5 * (va[0] * vb[1] - vb[0] * va[1])
    if abs(total_area - boundary_area) > 1e-12 * abs(total_area):
        raise StructuralDefect(
            f"cells do not tile the enclosed region: sum of areas "
            f"{total_area!r} vs boundary loop area {boundary_area!r}")
    kernel_ratios = np.array([p.kernel_inradius / p.diameter for p in polygons])
    edge_ratios = np.array([p.edge_lengths.min() / p.diameter for p in polygons])
    kappa = float(min(kernel_ratios.min(), edge_ratios.min()))
    return MeshQuality(
        kappa=kappa,
        max_vertices=max(len(c) for c in mesh.cells),
        cell_kernel_ratios=kernel_ratios,
        cell_edge_ratios=edge_ratios,
        kappa_min=kappa_min,
        passed=bool(kappa >= kappa_min),
        n_cells=mesh.n_cells,
        total_area=float(total_area),
    )
