"""Quadrature rules and polygon helpers shared by assembly and error norms.

All volume integrals in the package go through the degree-4 triangle rule
below so that quadrature never becomes a variable when comparing runs; it is
exact for the piecewise-affine integrands of the method itself and overkill
for the smooth data terms.
"""

from __future__ import annotations

import numpy as np

# Symmetric 6-point rule on the triangle, exact for polynomials of degree 4.
# Barycentric coordinates; weights sum to one (scale by the triangle area).
_TRI6_BARY = np.array(
    [
        [0.108103018168070, 0.445948490915965, 0.445948490915965],
        [0.445948490915965, 0.108103018168070, 0.445948490915965],
        [0.445948490915965, 0.445948490915965, 0.108103018168070],
        [0.816847572980459, 0.091576213509771, 0.091576213509771],
        [0.091576213509771, 0.816847572980459, 0.091576213509771],
        [0.091576213509771, 0.091576213509771, 0.816847572980459],
    ]
)
_TRI6_W = np.array(
    [
        0.223381589678011,
        0.223381589678011,
        0.223381589678011,
        0.109951743655322,
        0.109951743655322,
        0.109951743655322,
    ]
)

# 3-point Gauss-Legendre rule on [0, 1], exact for polynomials of degree 5.
_SQRT15 = np.sqrt(15.0)
GAUSS3_NODES = np.array([0.5 - _SQRT15 / 10.0, 0.5, 0.5 + _SQRT15 / 10.0])
GAUSS3_WEIGHTS = np.array([5.0 / 18.0, 8.0 / 18.0, 5.0 / 18.0])


def triangle_area(tri):
    """Signed area of a triangle given as a (3, 2) vertex array."""
    (x0, y0), (x1, y1), (x2, y2) = tri
    return 0.5 * ((x1 - x0) * (y2 - y0) - (x2 - x0) * (y1 - y0))


def triangle_rule(tri):
    """Degree-4 quadrature rule mapped to a physical triangle.

    Parameters
    ----------
    tri : (3, 2) array
        Triangle vertices.

    Returns
    -------
    points : (6, 2) ndarray
    weights : (6,) ndarray
        Weights include the triangle area, so ``sum(w * f(points))``
        approximates the integral of ``f`` over the triangle.
    """
    tri = np.asarray(tri, dtype=float)
    points = _TRI6_BARY @ tri
    weights = _TRI6_W * abs(triangle_area(tri))
    return points, weights


def polygon_area(poly):
    """Signed (positive = counter-clockwise) shoelace area of a polygon."""
    p = np.asarray(poly, dtype=float)
    x, y = p[:, 0], p[:, 1]
    return 0.5 * np.sum(x * np.roll(y, -1) - np.roll(x, -1) * y)


def polygon_centroid(poly):
    """Area centroid of a simple polygon (shoelace formula)."""
    p = np.asarray(poly, dtype=float)
    x, y = p[:, 0], p[:, 1]
    xn, yn = np.roll(x, -1), np.roll(y, -1)
    cross = x * yn - xn * y
    area = 0.5 * np.sum(cross)
    if abs(area) < 1e-300:
        return p.mean(axis=0)
    cx = np.sum((x + xn) * cross) / (6.0 * area)
    cy = np.sum((y + yn) * cross) / (6.0 * area)
    return np.array([cx, cy])


def fan_triangles(poly):
    """Triangulate a convex polygon by the fan rooted at its first vertex."""
    p = np.asarray(poly, dtype=float)
    return [np.array([p[0], p[i], p[i + 1]]) for i in range(1, len(p) - 1)]


def segment_average(p0, p1, fn):
    """Average of ``fn`` along the segment p0-p1 by 3-point Gauss."""
    p0 = np.asarray(p0, dtype=float)
    p1 = np.asarray(p1, dtype=float)
    pts = p0[None, :] + GAUSS3_NODES[:, None] * (p1 - p0)[None, :]
    vals = np.asarray(fn(pts[:, 0], pts[:, 1]), dtype=float)
    return float(np.dot(GAUSS3_WEIGHTS, np.broadcast_to(vals, (3,))))


def integrate_subcells(subcells, fn):
    """Integrate ``fn(x, y)`` over a list of (triangle, side) sub-cells."""
    total = 0.0
    for tri, _side in subcells:
        pts, w = triangle_rule(tri)
        vals = np.asarray(fn(pts[:, 0], pts[:, 1]), dtype=float)
        total += float(np.dot(w, np.broadcast_to(vals, w.shape)))
    return total
