"""Planar convex hulls (monotone chain) and containment tests"""

from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class Hull:
    """Counterclockwise hull vertices; ``degenerate`` when the input spans no area."""
    vertices: np.ndarray
    degenerate: bool = False

    def __len__(self) -> int:
        return self.vertices.shape[0]

    def contains(self, points: np.ndarray, tol: float = 1e-9) -> np.ndarray:
        return points_in_hull(self, points, tol)


def _cross(o: np.ndarray, a: np.ndarray, b: np.ndarray) -> float:
    return (a[0] - o[0]) * (b[1] - o[1]) - (a[1] - o[1]) * (b[0] - o[0])


def convex_hull_2d(points: np.ndarray) -> Hull:
    """Andrew's monotone chain. Collinear boundary points and duplicates are dropped.

    Fewer than three distinct points, or all points collinear, give a
    degenerate hull whose vertices are the distinct extreme points.
    """
    pts = np.asarray(points, dtype=np.float64)
    if pts.ndim != 2 or pts.shape[1] != 2:
        raise ValueError(f"expected an (M, 2) array, got shape {pts.shape}")
    pts = np.unique(pts, axis=0)  # sorted by x, then y
    if len(pts) < 3:
        return Hull(pts, degenerate=True)

    lower = []
    for p in pts:
        while len(lower) >= 2 and _cross(lower[-2], lower[-1], p) <= 0:
            lower.pop()
        lower.append(p)
    upper = []
    for p in pts[::-1]:
        while len(upper) >= 2 and _cross(upper[-2], upper[-1], p) <= 0:
            upper.pop()
        upper.append(p)
    vertices = np.array(lower[:-1] + upper[:-1])
    if len(vertices) < 3:
        return Hull(vertices, degenerate=True)
    return Hull(vertices)


def point_in_polygon(point: np.ndarray, polygon: np.ndarray) -> bool:
    """Ray casting for a simple polygon in either orientation; boundary points count as inside."""
    x, y = float(point[0]), float(point[1])
    inside = False
    n = len(polygon)
    for k in range(n):
        x1, y1 = polygon[k - 1]
        x2, y2 = polygon[k]
        # on an edge
        if min(x1, x2) - 1e-12 <= x <= max(x1, x2) + 1e-12 and min(y1, y2) - 1e-12 <= y <= max(y1, y2) + 1e-12:
            if abs((x2 - x1) * (y - y1) - (y2 - y1) * (x - x1)) <= 1e-12 * max(1.0, abs(x2 - x1) + abs(y2 - y1)):
                return True
        if (y1 > y) != (y2 > y):
            x_cross = x1 + (y - y1) * (x2 - x1) / (y2 - y1)
            if x < x_cross:
                inside = not inside
    return inside


def points_in_hull(hull: Hull, points: np.ndarray, tol: float = 1e-9) -> np.ndarray:
    """Vectorized test against a counterclockwise convex hull: every edge cross product >= -tol."""
    pts = np.atleast_2d(np.asarray(points, dtype=np.float64))
    verts = hull.vertices
    if hull.degenerate:
        if len(verts) == 0:
            return np.zeros(len(pts), dtype=bool)
        if len(verts) == 1:
            return np.all(np.abs(pts - verts[0]) <= tol, axis=1)
        a, b = verts[0], verts[-1]
        ab = b - a
        ap = pts - a
        cross = ab[0] * ap[:, 1] - ab[1] * ap[:, 0]
        t = ap @ ab / max(ab @ ab, 1e-300)
        return (np.abs(cross) <= tol * max(1.0, np.linalg.norm(ab))) & (t >= -tol) & (t <= 1 + tol)
    starts = verts
    ends = np.roll(verts, -1, axis=0)
    edges = ends - starts
    rel = pts[:, None, :] - starts[None, :, :]
    cross = edges[None, :, 0] * rel[:, :, 1] - edges[None, :, 1] * rel[:, :, 0]
    return np.all(cross >= -tol, axis=1)


def polygon_area(vertices: np.ndarray) -> float:
    """Shoelace area (absolute value)."""
    if len(vertices) < 3:
        return 0.0
    x, y = vertices[:, 0], vertices[:, 1]
    return 0.5 * abs(float(np.dot(x, np.roll(y, -1)) - np.dot(y, np.roll(x, -1))))
