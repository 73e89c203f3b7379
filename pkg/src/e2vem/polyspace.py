"""Scaled monomial bases on polygons and their moment matrices.

A basis of degree ``k`` consists of ``m_a(x) = ((x - x_C) / h_E)**a`` for
all multi-indices ``a`` with ``|a| <= k``, ordered by total degree and then
by decreasing first exponent: ``1, x, y, x^2, xy, y^2, ...``. The ordering
of any degree ``k`` basis is a prefix of every higher-degree ordering.
"""
from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .geometry import Polygon, polygon_quadrature


def space_dimension(k: int) -> int:
    """dim P_k in two variables; 0 for negative ``k``."""
    return (k + 1) * (k + 2) // 2 if k >= 0 else 0


@lru_cache(maxsize=None)
def monomial_exponents(k: int) -> np.ndarray:
    exps = np.array([(d - j, j) for d in range(k + 1) for j in range(d + 1)],
                    dtype=int).reshape(-1, 2)
    exps.setflags(write=False)
    return exps


def exponent_index(p: int, q: int) -> int:
    d = p + q
    return d * (d + 1) // 2 + q


class ScaledMonomialBasis:
    """Monomials of the local coordinates ``(x - center) / scale``."""

    __slots__ = ("center", "scale", "degree", "exponents", "dim")

    def __init__(self, center, scale, degree):
        self.center = np.asarray(center, dtype=float)
        self.scale = float(scale)
        self.degree = int(degree)
        self.exponents = monomial_exponents(self.degree)
        self.dim = len(self.exponents)

    @classmethod
    def from_polygon(cls, poly: Polygon, degree: int):
        return cls(poly.star_center, poly.diameter, degree)

    def evaluate(self, points) -> np.ndarray:
        """Vandermonde matrix of shape (n_points, dim)."""
        pts = np.asarray(points, dtype=float).reshape(-1, 2)
        local = (pts - self.center) / self.scale
        k = self.degree
        xs = np.ones((len(pts), k + 1))
        ys = np.ones((len(pts), k + 1))
        for d in range(1, k + 1):
            xs[:, d] = xs[:, d - 1] * local[:, 0]
            ys[:, d] = ys[:, d - 1] * local[:, 1]
        return xs[:, self.exponents[:, 0]] * ys[:, self.exponents[:, 1]]


def gradient_coefficients(basis: ScaledMonomialBasis, a: int):
    """Coefficients of ``grad m_a`` in the degree ``k-1`` basis.

    Returns a pair of vectors of length ``dim P_{k-1}`` (empty for a
    degree-0 basis, where the gradient of the only monomial vanishes).
    """
    p, q = basis.exponents[a]
    dim_lower = space_dimension(basis.degree - 1)
    gx = np.zeros(dim_lower)
    gy = np.zeros(dim_lower)
    if p > 0:
        gx[exponent_index(p - 1, q)] = p / basis.scale
    if q > 0:
        gy[exponent_index(p, q - 1)] = q / basis.scale
    return gx, gy


@dataclass(frozen=True, eq=False)
class VectorMonomialBasis:
    """[P_l]^2 basis: all ``(m_a, 0)`` followed by all ``(0, m_a)``."""

    scalar: ScaledMonomialBasis

    @classmethod
    def from_polygon(cls, poly: Polygon, degree: int):
        return cls(ScaledMonomialBasis.from_polygon(poly, degree))

    @property
    def degree(self) -> int:
        return self.scalar.degree

    @property
    def dim(self) -> int:
        return 2 * self.scalar.dim


def divergence_coefficients(vbasis: VectorMonomialBasis, a: int) -> np.ndarray:
    """Coefficients of ``div p_a`` in the degree ``l-1`` scalar basis."""
    n = vbasis.scalar.dim
    component, idx = divmod(a, n)
    return gradient_coefficients(vbasis.scalar, idx)[component]


def divergence_matrix(vbasis: VectorMonomialBasis) -> np.ndarray:
    """Rows stack ``divergence_coefficients`` for every vector monomial."""
    rows = [divergence_coefficients(vbasis, a) for a in range(vbasis.dim)]
    return np.array(rows).reshape(vbasis.dim, space_dimension(vbasis.degree - 1))


@dataclass(frozen=True, eq=False)
class MomentTable:
    """Gram matrix ``H[a, b] = (m_a, m_b)_E`` of a scaled monomial basis."""

    matrix: np.ndarray
    basis: ScaledMonomialBasis

    @property
    def degree(self) -> int:
        return self.basis.degree


def build_moment_table(poly: Polygon, degree: int, *,
                       check_spd: bool = True) -> MomentTable:
    """Moment matrix via sub-triangulation quadrature exact to ``2*degree``."""
    basis = ScaledMonomialBasis.from_polygon(poly, degree)
    pts, w = polygon_quadrature(poly, 2 * degree)
    v = basis.evaluate(pts)
    h = (v * w[:, None]).T @ v
    h = 0.5 * (h + h.T)
    if check_spd:
        np.linalg.cholesky(h)
    h.setflags(write=False)
    return MomentTable(h, basis)
