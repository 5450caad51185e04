"""
Integer polygon geometry on the floorplan grid.

All vertex lists are sequences of integer (x, y) pairs with y pointing up; a
clockwise polygon has negative signed area.
"""

from typing import List, Sequence, Tuple

from shapely.errors import ShapelyError
from shapely.geometry import LinearRing

from ..exceptions import DomainError, GeometryError
from .models import RoomPolygon, Vertex


def signed_area2(vertices: Sequence[Vertex]) -> int:
    """Twice the shoelace signed area (exact integer)."""
    total = 0
    n = len(vertices)
    for i in range(n):
        x1, y1 = vertices[i]
        x2, y2 = vertices[(i + 1) % n]
        total += x1 * y2 - x2 * y1
    return total


def bounding_box(vertices: Sequence[Vertex]) -> Tuple[int, int, int, int]:
    """Return (min_x, min_y, max_x, max_y)."""
    xs = [v[0] for v in vertices]
    ys = [v[1] for v in vertices]
    return min(xs), min(ys), max(xs), max(ys)


def has_repeated_vertex(vertices: Sequence[Vertex]) -> bool:
    """True when two cyclically consecutive vertices coincide."""
    n = len(vertices)
    return any(vertices[i] == vertices[(i + 1) % n] for i in range(n))


def is_rectilinear(vertices: Sequence[Vertex]) -> bool:
    """True when every edge is axis-aligned."""
    n = len(vertices)
    for i in range(n):
        (x1, y1), (x2, y2) = vertices[i], vertices[(i + 1) % n]
        if x1 != x2 and y1 != y2:
            return False
    return True


def is_simple(vertices: Sequence[Vertex]) -> bool:
    """True for a non-degenerate polygon without self-intersections."""
    if len(vertices) < 3 or has_repeated_vertex(vertices):
        return False
    if signed_area2(vertices) == 0:
        return False
    try:
        return bool(LinearRing(vertices).is_simple)
    except (ShapelyError, ValueError):
        # rings shapely cannot build are not simple
        return False


def _check_simple(vertices: Sequence[Vertex]) -> None:
    if len(vertices) < 3:
        raise GeometryError(f"Polygon needs at least 3 vertices, got {len(vertices)}")
    if signed_area2(vertices) == 0:
        raise GeometryError("Polygon has zero area")
    if not is_simple(vertices):
        raise GeometryError("Polygon is not simple")


def orient_clockwise(polygon: RoomPolygon) -> RoomPolygon:
    """Return the polygon in clockwise order, keeping its starting vertex."""
    vertices = polygon.vertices
    _check_simple(vertices)
    if signed_area2(vertices) < 0:
        return polygon
    reoriented = (vertices[0],) + tuple(reversed(vertices[1:]))
    return RoomPolygon(reoriented, door_encoded=polygon.door_encoded)


def rotate_to(vertices: Sequence[Vertex], start: int) -> Tuple[Vertex, ...]:
    """Cyclically rotate so that vertices[start] comes first."""
    start %= len(vertices)
    return tuple(vertices[start:]) + tuple(vertices[:start])


def rotate_to_min_vertex(polygon: RoomPolygon) -> RoomPolygon:
    """Rotate a room polygon to start at its lexicographically smallest vertex."""
    vertices = polygon.vertices
    start = min(range(len(vertices)), key=lambda i: vertices[i])
    return RoomPolygon(rotate_to(vertices, start), door_encoded=polygon.door_encoded)


def encode_front_door(boundary: RoomPolygon, door: Tuple[int, int]) -> RoomPolygon:
    """
    Rotate the clockwise boundary so the two door vertices occupy positions 0 and 1.

    Args:
        boundary: Boundary polygon; reoriented to clockwise first if needed
        door: Indices of the two door endpoints, which must be adjacent

    Raises:
        DomainError: If the door endpoints are not adjacent vertices
    """
    n = len(boundary.vertices)
    a, b = door
    if not (0 <= a < n and 0 <= b < n) or a == b:
        raise DomainError(f"Door indices {door} invalid for {n} vertices")

    oriented = orient_clockwise(boundary)
    if oriented.vertices != boundary.vertices:
        # Reversal keeping the start maps index i to (n - i) % n
        a, b = (n - a) % n, (n - b) % n

    if (a + 1) % n == b:
        start = a
    elif (b + 1) % n == a:
        start = b
    else:
        raise DomainError(f"Door vertices {door} are not adjacent")
    return RoomPolygon(rotate_to(oriented.vertices, start), door_encoded=True)


def _on_segment(p: Vertex, a: Vertex, b: Vertex) -> bool:
    cross = (b[0] - a[0]) * (p[1] - a[1]) - (b[1] - a[1]) * (p[0] - a[0])
    if cross != 0:
        return False
    return min(a[0], b[0]) <= p[0] <= max(a[0], b[0]) and min(a[1], b[1]) <= p[1] <= max(a[1], b[1])


def insert_door_vertices(
    boundary: RoomPolygon, p: Vertex, q: Vertex
) -> Tuple[RoomPolygon, Tuple[int, int]]:
    """
    Materialize door endpoints p and q on one boundary edge as vertices.

    Returns:
        The polygon with any missing endpoints inserted, and the endpoint indices
    """
    vertices: List[Vertex] = list(boundary.vertices)
    if p == q:
        raise DomainError("Door endpoints coincide")
    n = len(vertices)
    for i in range(n):
        a, b = vertices[i], vertices[(i + 1) % n]
        if not (_on_segment(p, a, b) and _on_segment(q, a, b)):
            continue
        # Order endpoints along the edge direction a -> b
        first, second = sorted((p, q), key=lambda v: abs(v[0] - a[0]) + abs(v[1] - a[1]))
        inserted = [v for v in (first, second) if v not in (a, b)]
        new_vertices = vertices[: i + 1] + inserted + vertices[i + 1:]
        polygon = RoomPolygon(tuple(new_vertices), door_encoded=False)
        return polygon, (new_vertices.index(first), new_vertices.index(second))
    raise DomainError(f"Door endpoints {p}, {q} do not lie on a common boundary edge")


def _edges(vertices: Sequence[Vertex]):
    n = len(vertices)
    for i in range(n):
        yield vertices[i], vertices[(i + 1) % n]


def shared_boundary_length(a: Sequence[Vertex], b: Sequence[Vertex]) -> int:
    """Total length of collinear overlap between the axis-aligned edges of two polygons."""
    total = 0
    for (ax1, ay1), (ax2, ay2) in _edges(a):
        for (bx1, by1), (bx2, by2) in _edges(b):
            if ay1 == ay2 == by1 == by2 and ax1 != ax2 and bx1 != bx2:
                lo = max(min(ax1, ax2), min(bx1, bx2))
                hi = min(max(ax1, ax2), max(bx1, bx2))
                total += max(0, hi - lo)
            elif ax1 == ax2 == bx1 == bx2 and ay1 != ay2 and by1 != by2:
                lo = max(min(ay1, ay2), min(by1, by2))
                hi = min(max(ay1, ay2), max(by1, by2))
                total += max(0, hi - lo)
    return total


def segment_overlap_length(segment: Tuple[Vertex, Vertex], polygon: Sequence[Vertex]) -> int:
    """Length of an axis-aligned segment that runs along the polygon's edges."""
    (sx1, sy1), (sx2, sy2) = segment
    total = 0
    for (px1, py1), (px2, py2) in _edges(polygon):
        if sy1 == sy2 == py1 == py2 and sx1 != sx2 and px1 != px2:
            lo = max(min(sx1, sx2), min(px1, px2))
            hi = min(max(sx1, sx2), max(px1, px2))
            total += max(0, hi - lo)
        elif sx1 == sx2 == px1 == px2 and sy1 != sy2 and py1 != py2:
            lo = max(min(sy1, sy2), min(py1, py2))
            hi = min(max(sy1, sy2), max(py1, py2))
            total += max(0, hi - lo)
    return total
