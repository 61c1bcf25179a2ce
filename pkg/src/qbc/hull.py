"""Planar geometry for rate regions: polytopes, hulls, inclusion, Hausdorff distance."""
from __future__ import annotations

from itertools import combinations
from typing import Iterable, Sequence

import numpy as np
from shapely.geometry import MultiPoint, Point, Polygon
from shapely.geometry.base import BaseGeometry
from shapely.geometry.polygon import orient

Halfplane = tuple[float, float, float]  # c0 * x + c1 * y <= rhs


def polytope_vertices(halfplanes: Sequence[Halfplane], tol: float = 1e-12) -> np.ndarray:
    """Vertices of ``{x, y >= 0} intersected with the half-planes`` (CCW)."""
    hp = list(halfplanes) + [(-1.0, 0.0, 0.0), (0.0, -1.0, 0.0)]
    pts = []
    for (a1, b1, c1), (a2, b2, c2) in combinations(hp, 2):
        det = a1 * b2 - a2 * b1
        if abs(det) < 1e-15:
            continue
        x = (c1 * b2 - c2 * b1) / det
        y = (a1 * c2 - a2 * c1) / det
        if all(a * x + b * y <= c + tol for a, b, c in hp):
            pts.append((x, y))
    if not pts:
        return np.zeros((0, 2))
    return ccw_hull(np.array(pts))


def triangle_polytope(a: float, b: float, c: float) -> np.ndarray:
    """``{x <= a, y <= b, x + y <= c}`` in the positive quadrant (bounds clipped at 0)."""
    a, b, c = max(a, 0.0), max(b, 0.0), max(c, 0.0)
    return polytope_vertices([(1.0, 0.0, a), (0.0, 1.0, b), (1.0, 1.0, c)])


def geometry(points: np.ndarray) -> BaseGeometry:
    return MultiPoint([tuple(p) for p in np.asarray(points, dtype=float)]).convex_hull


def ccw_hull(points: np.ndarray) -> np.ndarray:
    """Convex-hull vertices sorted counterclockwise (no repeated closing vertex)."""
    pts = np.asarray(points, dtype=float).reshape(-1, 2)
    if len(pts) == 0:
        return np.zeros((0, 2))
    g = geometry(pts)
    if isinstance(g, Polygon):
        coords = np.array(orient(g, sign=1.0).exterior.coords)[:-1]
    elif isinstance(g, Point):
        coords = np.array([g.coords[0]])
    else:
        coords = np.array(g.coords)
    return coords


def support(vertices: np.ndarray, direction: Sequence[float]) -> float:
    return float(np.max(np.asarray(vertices) @ np.asarray(direction, dtype=float)))


def excess(inner: np.ndarray, outer: np.ndarray) -> float:
    """``max_{v in inner} dist(v, conv(outer))`` -- zero iff inner is contained."""
    go = geometry(outer)
    return max((go.distance(Point(*v)) for v in np.asarray(inner)), default=0.0)


def contains(outer: np.ndarray, inner: np.ndarray, slack: float = 1e-6) -> bool:
    return excess(inner, outer) <= slack


def hausdorff(a: np.ndarray, b: np.ndarray) -> float:
    """Hausdorff distance between the convex polygons spanned by ``a`` and ``b``."""
    return max(excess(a, b), excess(b, a))


def union_hull(polys: Iterable[np.ndarray]) -> np.ndarray:
    pts = [p for p in polys if len(p)]
    if not pts:
        return np.zeros((1, 2))
    return ccw_hull(np.vstack(pts))
