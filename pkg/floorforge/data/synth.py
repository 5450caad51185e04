"""
Synthetic rectilinear floorplans.

Boundaries are random rectangles with staircase notches carved at their corners;
rooms come from recursive axis-aligned guillotine cuts of the boundary region, so
every plan is an exact partition with no gaps, overlaps or overflow.
"""

import logging
from dataclasses import dataclass
from typing import List, Optional, Sequence, Tuple

import numpy as np
from shapely.geometry import Polygon, box
from shapely.geometry.polygon import orient
from tqdm import tqdm

from ..core.floorplan import order_rooms
from ..core.geometry import (
    encode_front_door,
    insert_door_vertices,
    rotate_to_min_vertex,
    segment_overlap_length,
    signed_area2,
)
from ..core.models import (
    DEFAULT_BITS,
    DEFAULT_ROOM_TYPES,
    LIVING_LABEL,
    MAX_ROOMS,
    MAX_VERTICES,
    Floorplan,
    Room,
    RoomPolygon,
    Vertex,
)
from ..exceptions import GenerationError

logger = logging.getLogger("floorforge.data.synth")

MIN_EDGE = 2


@dataclass(frozen=True)
class SynthParams:
    """Parameters of the synthetic floorplan generator."""
    room_count_range: Tuple[int, int] = (3, 8)
    boundary_notches: int = 2
    min_room_extent: int = 4
    seed: int = 0
    bits: int = DEFAULT_BITS
    door_width: int = 2
    max_attempts: int = 20
    room_types: Tuple[str, ...] = DEFAULT_ROOM_TYPES

    def __post_init__(self):
        object.__setattr__(self, "room_count_range", tuple(self.room_count_range))
        object.__setattr__(self, "room_types", tuple(self.room_types))
        lo, hi = self.room_count_range
        if not 1 <= lo <= hi <= MAX_ROOMS:
            raise GenerationError(f"room_count_range {self.room_count_range} must satisfy 1 <= min <= max <= {MAX_ROOMS}")
        if self.min_room_extent < 2:
            raise GenerationError("min_room_extent must be at least 2")
        if self.boundary_notches < 0:
            raise GenerationError("boundary_notches must be non-negative")
        if LIVING_LABEL not in self.room_types or len(self.room_types) < 2:
            raise GenerationError(f"room_types must include '{LIVING_LABEL}' and at least one other label")


def _staircase(rng: np.random.Generator, steps: int, limit: int) -> List[int]:
    """Pick `steps` offsets in [MIN_EDGE, limit] with pairwise gaps >= MIN_EDGE, ascending."""
    if steps == 0:
        return []
    slack = limit - MIN_EDGE - MIN_EDGE * (steps - 1)
    if slack < 0:
        raise GenerationError(f"Cannot fit {steps} notch steps in a corner of extent {limit}")
    picks = np.sort(rng.choice(slack + steps, size=steps, replace=False)) - np.arange(steps)
    return [int(MIN_EDGE + p + MIN_EDGE * i) for i, p in enumerate(picks)]


def _corner_path(rng: np.random.Generator, steps: int, half_w: int, half_h: int) -> List[Tuple[int, int]]:
    """Local (p, q) offsets of one corner, entering along the p axis and leaving along q."""
    if steps == 0:
        return [(0, 0)]
    a = _staircase(rng, steps, half_w)
    b = sorted(_staircase(rng, steps, half_h), reverse=True)
    path = []
    for i in range(steps - 1, -1, -1):
        path.append((a[i], 0 if i == steps - 1 else b[i + 1]))
        path.append((a[i], b[i]))
    path.append((0, b[0]))
    return path


def synth_boundary(rng: np.random.Generator, notches: int, bits: int = DEFAULT_BITS) -> RoomPolygon:
    """
    Random clockwise rectilinear boundary with 4 + 2 * notches vertices.

    The base rectangle spans at least half the grid on each axis; notches are
    distributed over the four corners as staircases.
    """
    size = 2 ** bits
    max_coord = size - 1
    width = int(rng.integers(size // 2, max_coord + 1))
    height = int(rng.integers(size // 2, max_coord + 1))
    x0 = int(rng.integers(0, max_coord - width + 1))
    y0 = int(rng.integers(0, max_coord - height + 1))
    x1, y1 = x0 + width, y0 + height

    counts = [notches // 4] * 4
    for corner in rng.permutation(4)[: notches % 4]:
        counts[int(corner)] += 1

    half_w, half_h = width // 2 - 1, height // 2 - 1
    paths = [_corner_path(rng, k, half_w, half_h) for k in counts]

    # Clockwise with y up: bottom-left, top-left, top-right, bottom-right
    bl = [(x0 + p, y0 + q) for p, q in paths[0]]
    tl = [(x0 + p, y1 - q) for p, q in reversed(paths[1])]
    tr = [(x1 - p, y1 - q) for p, q in paths[2]]
    br = [(x1 - p, y0 + q) for p, q in reversed(paths[3])]
    return RoomPolygon(tuple(bl + tl + tr + br))


def _drop_collinear(coords: Sequence[Vertex]) -> List[Vertex]:
    """Remove vertices lying on the straight line through their neighbours."""
    points = list(coords)
    changed = True
    while changed and len(points) > 3:
        changed = False
        for i in range(len(points)):
            prev, cur, nxt = points[i - 1], points[i], points[(i + 1) % len(points)]
            if signed_area2((prev, cur, nxt)) == 0:
                del points[i]
                changed = True
                break
    return points


def _to_vertices(shape: Polygon) -> Tuple[Vertex, ...]:
    shape = orient(shape, sign=-1.0)
    coords = [(int(round(x)), int(round(y))) for x, y in shape.exterior.coords[:-1]]
    return rotate_to_min_vertex(RoomPolygon(tuple(_drop_collinear(coords)))).vertices


def _try_cut(
    rng: np.random.Generator, piece: Polygon, min_extent: int, max_vertices: int
) -> Optional[Tuple[Polygon, Polygon]]:
    minx, miny, maxx, maxy = (int(round(v)) for v in piece.bounds)
    axes = [0, 1] if (maxx - minx) >= (maxy - miny) else [1, 0]
    if rng.random() < 0.25:
        axes.reverse()
    for axis in axes:
        lo, hi = (minx, maxx) if axis == 0 else (miny, maxy)
        candidates = np.arange(lo + min_extent, hi - min_extent + 1)
        for cut in rng.permutation(candidates):
            cut = int(cut)
            if axis == 0:
                first, second = box(minx, miny, cut, maxy), box(cut, miny, maxx, maxy)
            else:
                first, second = box(minx, miny, maxx, cut), box(minx, cut, maxx, maxy)
            halves = (piece.intersection(first), piece.intersection(second))
            if all(_acceptable(h, min_extent, max_vertices) for h in halves):
                return halves
    return None


def _acceptable(shape, min_extent: int, max_vertices: int) -> bool:
    if not isinstance(shape, Polygon) or shape.is_empty or shape.interiors:
        return False
    minx, miny, maxx, maxy = shape.bounds
    if maxx - minx < min_extent or maxy - miny < min_extent:
        return False
    return 3 <= len(_to_vertices(shape)) <= max_vertices


def _partition(
    rng: np.random.Generator, region: Polygon, count: int, min_extent: int, max_vertices: int
) -> Optional[List[Polygon]]:
    pieces = [region]
    while len(pieces) < count:
        order = sorted(range(len(pieces)), key=lambda i: (-pieces[i].area, i))
        for i in order:
            halves = _try_cut(rng, pieces[i], min_extent, max_vertices)
            if halves is not None:
                pieces[i:i + 1] = list(halves)
                break
        else:
            return None
    return pieces


def _place_door(
    rng: np.random.Generator, boundary: RoomPolygon, living: Sequence[Vertex], width: int
) -> Optional[RoomPolygon]:
    vertices = boundary.vertices
    n = len(vertices)
    options = []
    for i in range(n):
        (ax, ay), (bx, by) = vertices[i], vertices[(i + 1) % n]
        if segment_overlap_length(((ax, ay), (bx, by)), living) < width:
            continue
        # Walk the edge in unit steps and keep door spans fully on the living-room wall
        length = abs(bx - ax) + abs(by - ay)
        dx, dy = (bx > ax) - (bx < ax), (by > ay) - (by < ay)
        for t in range(0, length - width + 1):
            p = (ax + dx * t, ay + dy * t)
            q = (ax + dx * (t + width), ay + dy * (t + width))
            if segment_overlap_length((p, q), living) == width:
                options.append((p, q))
    if not options:
        return None
    p, q = options[int(rng.integers(len(options)))]
    with_door, door = insert_door_vertices(boundary, p, q)
    return encode_front_door(with_door, door)


def synth_floorplan(rng: np.random.Generator, params: SynthParams) -> Floorplan:
    """
    Synthesize one valid floorplan whose rooms exactly partition the boundary.

    Raises:
        GenerationError: If no feasible partition is found within max_attempts
    """
    lo, hi = params.room_count_range
    living_type = params.room_types.index(LIVING_LABEL)
    other_types = [i for i in range(len(params.room_types)) if i != living_type]
    max_notches = (MAX_VERTICES - 6) // 2

    for attempt in range(params.max_attempts):
        notches = int(rng.integers(0, min(params.boundary_notches, max_notches) + 1))
        boundary = synth_boundary(rng, notches, params.bits)
        region = Polygon(boundary.vertices)
        count = int(rng.integers(lo, hi + 1))
        if region.area < count * params.min_room_extent ** 2:
            continue

        pieces = _partition(rng, region, count, params.min_room_extent, MAX_VERTICES)
        if pieces is None:
            continue

        polygons = [_to_vertices(p) for p in pieces]
        areas = [p.area for p in pieces]
        living_index = max(range(len(pieces)), key=lambda i: (areas[i], -i))

        door_boundary = _place_door(rng, boundary, polygons[living_index], params.door_width)
        if door_boundary is None or len(door_boundary.vertices) > MAX_VERTICES:
            continue

        rooms = []
        for i, vertices in enumerate(polygons):
            type_id = living_type if i == living_index else int(rng.choice(other_types))
            rooms.append(Room.from_polygon(vertices, type_id))

        logger.debug(f"Synthesized plan with {count} rooms after {attempt + 1} attempt(s)")
        return Floorplan(
            boundary=door_boundary,
            rooms=tuple(order_rooms(rooms, living_type)),
            room_types=params.room_types,
            grid_bits=params.bits,
        )

    raise GenerationError(
        f"No feasible plan for rooms {params.room_count_range} with min extent "
        f"{params.min_room_extent} after {params.max_attempts} attempts"
    )


def sample_rng(seed: int, index: int) -> np.random.Generator:
    """RNG for sample `index` of a dataset seeded with `seed`."""
    return np.random.default_rng([seed, index])


def synth_dataset(params: SynthParams, count: int, progress: bool = False) -> List[Floorplan]:
    """Synthesize `count` plans; sample i depends only on (params.seed, i)."""
    plans = []
    for index in tqdm(range(count), desc="Synthesizing", disable=not progress):
        plans.append(synth_floorplan(sample_rng(params.seed, index), params))
    logger.info(f"Synthesized {count} floorplans (seed {params.seed})")
    return plans
