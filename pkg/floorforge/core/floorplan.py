"""Room ordering, validation and canonicalization of floorplans."""

from typing import List, Optional, Sequence

from ..exceptions import FloorplanValidationError
from .geometry import (
    encode_front_door,
    has_repeated_vertex,
    is_simple,
    orient_clockwise,
    rotate_to_min_vertex,
    segment_overlap_length,
    signed_area2,
)
from .models import MAX_ROOMS, MAX_VERTICES, Floorplan, Room, RoomBox, RoomPolygon, ValidationReport


def order_rooms(
    rooms: Sequence[Room], living_type: Optional[int] = 0, strict: bool = True
) -> List[Room]:
    """
    Put the living room first, then sort the rest by box (x, y), stable on ties.

    Args:
        rooms: Rooms in any order
        living_type: Type id of the living room, None if the taxonomy has none
        strict: Raise on more than one living room instead of placing all of them first

    Raises:
        FloorplanValidationError: If strict and two living rooms are present
    """
    indexed = list(enumerate(rooms))
    living = [(i, r) for i, r in indexed if living_type is not None and r.type_id == living_type]
    others = [(i, r) for i, r in indexed if living_type is None or r.type_id != living_type]
    if strict and len(living) > 1:
        raise FloorplanValidationError(f"Found {len(living)} living rooms, expected at most one")

    def key(item):
        i, room = item
        return (room.box.x, room.box.y, i)

    return [r for _, r in sorted(living, key=key)] + [r for _, r in sorted(others, key=key)]


def door_segment(fp: Floorplan):
    vertices = fp.boundary.vertices
    return vertices[0], vertices[1]


def door_adjacent_to_living(fp: Floorplan) -> bool:
    """True when the front-door edge runs along a living room wall."""
    living_type = fp.living_type
    if living_type is None or len(fp.boundary.vertices) < 2:
        return False
    segment = door_segment(fp)
    return any(
        room.type_id == living_type and segment_overlap_length(segment, room.polygon.vertices) > 0
        for room in fp.rooms
    )


def _check_polygon(
    report: ValidationReport,
    polygon: RoomPolygon,
    size: int,
    max_vertices: int,
    label: str,
    room_index: Optional[int],
) -> bool:
    vertices = polygon.vertices
    ok = True
    if not 3 <= len(vertices) <= max_vertices:
        report.add("vertex_count", f"{label} has {len(vertices)} vertices (allowed 3..{max_vertices})", room_index)
        ok = False
    out_of_grid = [v for v in vertices if not (0 <= v[0] < size and 0 <= v[1] < size)]
    if out_of_grid:
        report.add("grid_range", f"{label} has coordinates outside [0, {size - 1}]: {out_of_grid[:3]}", room_index)
        ok = False
    if len(vertices) < 3:
        return False
    if has_repeated_vertex(vertices):
        report.add("duplicate_vertex", f"{label} repeats a consecutive vertex", room_index)
        return False
    if not is_simple(vertices):
        report.add("not_simple", f"{label} is degenerate or self-intersecting", room_index)
        return False
    if signed_area2(vertices) > 0:
        report.add("orientation", f"{label} is counter-clockwise", room_index)
        ok = False
    return ok


def validate(
    fp: Floorplan, max_rooms: int = MAX_ROOMS, max_vertices: int = MAX_VERTICES
) -> ValidationReport:
    """List every violated floorplan invariant. Never raises."""
    report = ValidationReport()
    size = 2 ** fp.grid_bits
    num_types = len(fp.room_types)

    if not 1 <= len(fp.rooms) <= max_rooms:
        report.add("room_count", f"Plan has {len(fp.rooms)} rooms (allowed 1..{max_rooms})")

    _check_polygon(report, fp.boundary, size, max_vertices, "Boundary", None)
    if not fp.boundary.door_encoded:
        report.add("door_encoding", "Boundary has no encoded front door")

    for i, room in enumerate(fp.rooms):
        label = f"Room {i}"
        if not 0 <= room.type_id < num_types:
            report.add("room_type", f"{label} has unknown type id {room.type_id}", i)
        _check_polygon(report, room.polygon, size, max_vertices, label, i)
        if len(room.polygon) >= 1:
            expected = RoomBox.from_vertices(room.polygon.vertices, room.type_id)
            if expected != room.box:
                report.add(
                    "box_mismatch",
                    f"{label} box {room.box.as_fields()} != polygon bounds {expected.as_fields()}",
                    i,
                )

    try:
        ordered = order_rooms(fp.rooms, fp.living_type, strict=False)
        if list(ordered) != list(fp.rooms):
            report.add("room_order", "Rooms are not in canonical order")
    except Exception as e:
        report.add("room_order", f"Room order could not be checked: {e}")

    living_type = fp.living_type
    if living_type is not None:
        living_count = sum(1 for r in fp.rooms if r.type_id == living_type)
        if living_count != 1:
            report.notice("living_room_count", f"Plan has {living_count} living rooms")
        elif fp.boundary.door_encoded and not door_adjacent_to_living(fp):
            report.notice("door_not_at_living", "Front door does not adjoin the living room")

    return report


def canonicalize(fp: Floorplan) -> Floorplan:
    """
    Bring an ingested plan to canonical form.

    Orients every polygon clockwise, starts each room polygon at its smallest vertex,
    keeps the door at boundary positions 0-1 and orders the rooms.

    Raises:
        GeometryError: If a polygon is degenerate
    """
    boundary = fp.boundary
    if boundary.door_encoded:
        boundary = encode_front_door(RoomPolygon(boundary.vertices), (0, 1))
    else:
        boundary = orient_clockwise(boundary)

    rooms = []
    for room in fp.rooms:
        polygon = rotate_to_min_vertex(orient_clockwise(RoomPolygon(room.polygon.vertices)))
        rooms.append(Room(box=RoomBox.from_vertices(polygon.vertices, room.type_id), polygon=polygon))

    canonical = Floorplan(
        boundary=boundary,
        rooms=tuple(rooms),
        room_types=fp.room_types,
        grid_bits=fp.grid_bits,
    )
    return canonical.with_rooms(order_rooms(canonical.rooms, canonical.living_type, strict=False))
