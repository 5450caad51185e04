"""
Gap, overlap and exceed areas of room polygons against a boundary.

Rectilinear inputs are measured exactly by a scanline over the integer grid;
anything else falls back to cell-centre rasterization at 4x resolution and the
report is flagged approximate.
"""

from dataclasses import dataclass, field
from typing import List, Sequence, Union

import numpy as np
import shapely
from shapely.geometry import Polygon

from ..core.geometry import is_rectilinear, is_simple, signed_area2
from ..core.models import Vertex
from ..exceptions import GeometryError, MetricsError

Number = Union[int, float]
FALLBACK_RESOLUTION = 4


@dataclass
class AreaReport:
    """Area bookkeeping for one plan in grid-cell units."""
    boundary_area: Number
    gap_area: Number
    overlap_area: Number
    exceed_area: Number
    covered_area: Number
    room_areas: List[Number] = field(default_factory=list)
    approximate: bool = False

    @property
    def gap_ratio(self) -> float:
        return self.gap_area / self.boundary_area

    @property
    def overlap_ratio(self) -> float:
        return self.overlap_area / self.boundary_area

    @property
    def exceed_ratio(self) -> float:
        return self.exceed_area / (self.exceed_area + self.boundary_area)


def polygon_area(vertices: Sequence[Vertex]) -> Number:
    """
    Exact area of a simple polygon.

    Raises:
        GeometryError: If the polygon is degenerate or self-intersecting
    """
    if not is_simple(vertices):
        raise GeometryError(f"Cannot measure a non-simple polygon with {len(vertices)} vertices")
    twice = abs(signed_area2(vertices))
    return twice // 2 if twice % 2 == 0 else twice / 2


def _slab_intervals(vertices: Sequence[Vertex], y_lo: int, y_hi: int) -> List[tuple]:
    """x-intervals of a rectilinear polygon's cross-section within the slab (y_lo, y_hi)."""
    crossings = []
    n = len(vertices)
    for i in range(n):
        (x1, y1), (x2, y2) = vertices[i], vertices[(i + 1) % n]
        if x1 == x2 and min(y1, y2) <= y_lo and max(y1, y2) >= y_hi:
            crossings.append(x1)
    crossings.sort()
    return [(crossings[k], crossings[k + 1]) for k in range(0, len(crossings) - 1, 2)]


def _cover(xs: np.ndarray, intervals: List[tuple]) -> np.ndarray:
    """Number of intervals covering each elementary segment [xs[k], xs[k+1]]."""
    delta = np.zeros(len(xs), dtype=np.int64)
    for a, b in intervals:
        delta[np.searchsorted(xs, a)] += 1
        delta[np.searchsorted(xs, b)] -= 1
    return np.cumsum(delta)[:-1]


def _scanline_areas(rooms: Sequence[Sequence[Vertex]], boundary: Sequence[Vertex]) -> dict:
    ys = sorted({y for poly in list(rooms) + [boundary] for _, y in poly})
    totals = {"covered": 0, "overlap": 0, "union": 0, "boundary": 0}
    for y_lo, y_hi in zip(ys[:-1], ys[1:]):
        height = y_hi - y_lo
        room_intervals = [iv for poly in rooms for iv in _slab_intervals(poly, y_lo, y_hi)]
        boundary_intervals = _slab_intervals(boundary, y_lo, y_hi)
        edges = {x for iv in room_intervals + boundary_intervals for x in iv}
        if len(edges) < 2:
            continue
        xs = np.array(sorted(edges), dtype=np.int64)
        widths = np.diff(xs)
        count = _cover(xs, room_intervals)
        inside = _cover(xs, boundary_intervals) > 0

        totals["boundary"] += height * int(widths[inside].sum())
        totals["covered"] += height * int(widths[(count > 0) & inside].sum())
        totals["union"] += height * int(widths[count > 0].sum())
        extra = np.where(inside, np.maximum(count - 1, 0), 0)
        totals["overlap"] += height * int((widths * extra).sum())
    return totals


def rasterize_areas(
    rooms: Sequence[Sequence[Vertex]], boundary: Sequence[Vertex], resolution: int = 1
) -> AreaReport:
    """
    Count cover at cell centres on a grid refined `resolution` times.

    Exact at resolution 1 for rectilinear polygons with integer vertices.
    """
    if resolution < 1:
        raise MetricsError(f"resolution must be positive, got {resolution}")
    points = [v for poly in list(rooms) + [boundary] for v in poly]
    xs, ys = zip(*points)
    x0, y0 = min(xs), min(ys)
    nx, ny = (max(xs) - x0) * resolution, (max(ys) - y0) * resolution
    cx = x0 + (np.arange(nx) + 0.5) / resolution
    cy = y0 + (np.arange(ny) + 0.5) / resolution
    gx, gy = np.meshgrid(cx, cy)

    count = np.zeros(gx.shape, dtype=np.int64)
    for poly in rooms:
        count += shapely.contains_xy(Polygon(poly), gx, gy)
    inside = shapely.contains_xy(Polygon(boundary), gx, gy)

    cell = resolution * resolution

    def measure(cells: int) -> Number:
        return cells if cell == 1 else cells / cell

    boundary_cells = int(inside.sum())
    covered_cells = int(((count > 0) & inside).sum())
    union_cells = int((count > 0).sum())
    overlap_cells = int(np.where(inside, np.maximum(count - 1, 0), 0).sum())
    return AreaReport(
        boundary_area=measure(boundary_cells),
        gap_area=measure(boundary_cells - covered_cells),
        overlap_area=measure(overlap_cells),
        exceed_area=measure(union_cells - covered_cells),
        covered_area=measure(covered_cells),
        room_areas=[measure(int(shapely.contains_xy(Polygon(p), gx, gy).sum())) for p in rooms],
        approximate=cell != 1,
    )


def boolean_areas(rooms: Sequence[Sequence[Vertex]], boundary: Sequence[Vertex]) -> AreaReport:
    """
    Gap, overlap and exceed areas of rooms against a boundary.

    Raises:
        GeometryError: If any polygon is degenerate or self-intersecting
    """
    room_areas = [polygon_area(poly) for poly in rooms]
    boundary_area = polygon_area(boundary)

    if not all(is_rectilinear(poly) for poly in list(rooms) + [boundary]):
        return rasterize_areas(rooms, boundary, resolution=FALLBACK_RESOLUTION)

    totals = _scanline_areas(rooms, boundary)
    return AreaReport(
        boundary_area=boundary_area,
        gap_area=boundary_area - totals["covered"],
        overlap_area=totals["overlap"],
        exceed_area=totals["union"] - totals["covered"],
        covered_area=totals["covered"],
        room_areas=room_areas,
    )


def _mean_ratio(reports: Sequence[AreaReport], name: str) -> float:
    if not reports:
        raise MetricsError(f"Cannot compute {name} over zero samples")
    if any(r.boundary_area <= 0 for r in reports):
        raise MetricsError(f"Cannot compute {name} with a zero-area boundary")
    ratio = {"MRG": "gap_ratio", "MRO": "overlap_ratio", "MRE": "exceed_ratio"}[name]
    return float(sum(getattr(r, ratio) for r in reports) / len(reports))


def mrg(reports: Sequence[AreaReport]) -> float:
    """Mean ratio of uncovered boundary area."""
    return _mean_ratio(reports, "MRG")


def mro(reports: Sequence[AreaReport]) -> float:
    """Mean ratio of room overlap to boundary area."""
    return _mean_ratio(reports, "MRO")


def mre(reports: Sequence[AreaReport]) -> float:
    """Mean ratio of area outside the boundary, over exceed plus boundary area."""
    return _mean_ratio(reports, "MRE")
