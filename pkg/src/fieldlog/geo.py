"""Planar geometry for geofences.

Vertices are (lat, lon) WGS84 degrees treated as planar coordinates —
farm-scale polygons are far too small for curvature to matter, and the
same convention is applied consistently on both the containment test and
the area tie-break.
"""

from __future__ import annotations

from .errors import ValidationError

Point = tuple[float, float]

_EPS = 1e-12


def _on_segment(p: Point, a: Point, b: Point) -> bool:
    """True when p lies on the closed segment ab (within float tolerance)."""
    cross = (b[0] - a[0]) * (p[1] - a[1]) - (b[1] - a[1]) * (p[0] - a[0])
    scale = max(abs(b[0] - a[0]), abs(b[1] - a[1]), 1.0)
    if abs(cross) > _EPS * scale:
        return False
    return (
        min(a[0], b[0]) - _EPS <= p[0] <= max(a[0], b[0]) + _EPS
        and min(a[1], b[1]) - _EPS <= p[1] <= max(a[1], b[1]) + _EPS
    )


def point_in_polygon(point: Point, polygon: list[Point]) -> bool:
    """Even-odd (ray casting) containment; points on the boundary count as inside."""
    x, y = point
    n = len(polygon)
    for i in range(n):
        if _on_segment(point, polygon[i], polygon[(i + 1) % n]):
            return True
    inside = False
    for i in range(n):
        ax, ay = polygon[i]
        bx, by = polygon[(i + 1) % n]
        if (ay > y) != (by > y):
            x_cross = ax + (y - ay) * (bx - ax) / (by - ay)
            if x < x_cross:
                inside = not inside
    return inside


def polygon_area(polygon: list[Point]) -> float:
    """Unsigned shoelace area (degrees²); used only to rank overlapping zones."""
    total = 0.0
    n = len(polygon)
    for i in range(n):
        ax, ay = polygon[i]
        bx, by = polygon[(i + 1) % n]
        total += ax * by - bx * ay
    return abs(total) / 2.0


def _orient(a: Point, b: Point, c: Point) -> int:
    v = (b[0] - a[0]) * (c[1] - a[1]) - (b[1] - a[1]) * (c[0] - a[0])
    if abs(v) <= _EPS:
        return 0
    return 1 if v > 0 else -1


def _segments_intersect(a: Point, b: Point, c: Point, d: Point) -> bool:
    o1, o2 = _orient(a, b, c), _orient(a, b, d)
    o3, o4 = _orient(c, d, a), _orient(c, d, b)
    if o1 != o2 and o3 != o4:
        return True
    return (
        (o1 == 0 and _on_segment(c, a, b))
        or (o2 == 0 and _on_segment(d, a, b))
        or (o3 == 0 and _on_segment(a, c, d))
        or (o4 == 0 and _on_segment(b, c, d))
    )


def validate_geofence(polygon: list[Point], field_path: str = "geofence") -> None:
    """Reject degenerate or self-intersecting polygons.

    Adjacent edges may share their common vertex; any other contact between
    two edges makes the polygon non-simple.
    """
    n = len(polygon)
    if n < 3:
        raise ValidationError("geofence needs at least 3 vertices", field_path)
    for i in range(n):
        if polygon[i] == polygon[(i + 1) % n]:
            raise ValidationError(f"degenerate zero-length edge at vertex {i}", field_path)
    if polygon_area(polygon) <= _EPS:
        raise ValidationError("polygon has zero area", field_path)
    for i in range(n):
        a, b, c = polygon[i], polygon[(i + 1) % n], polygon[(i + 2) % n]
        # a spike folds an edge back over its neighbour
        if _on_segment(c, a, b) or _on_segment(a, b, c):
            raise ValidationError(f"edge at vertex {(i + 1) % n} folds back on its neighbour", field_path)
    for i in range(n):
        a, b = polygon[i], polygon[(i + 1) % n]
        for j in range(i + 1, n):
            if j == i or (j + 1) % n == i or (i + 1) % n == j:
                continue  # adjacent edges share one endpoint by construction
            c, d = polygon[j], polygon[(j + 1) % n]
            if _segments_intersect(a, b, c, d):
                raise ValidationError(f"edges {i} and {j} intersect (polygon is not simple)", field_path)
