"""Rotation and flip augmentation on the integer grid."""

from enum import Enum
from typing import Callable, Dict, List, Tuple

from ..core.floorplan import order_rooms
from ..core.geometry import encode_front_door, orient_clockwise, rotate_to_min_vertex
from ..core.models import Floorplan, Room, RoomPolygon, Vertex


class Transform(Enum):
    """Grid symmetries used for augmentation."""
    ROT90 = "rot90"
    ROT180 = "rot180"
    ROT270 = "rot270"
    FLIP_H = "flip_h"
    FLIP_V = "flip_v"


AUGMENTATIONS: Tuple[Transform, ...] = tuple(Transform)

# Maps on [0, m] x [0, m]; rotations are counter-clockwise about the grid center
_POINT_MAPS: Dict[Transform, Callable[[int, int, int], Vertex]] = {
    Transform.ROT90: lambda x, y, m: (m - y, x),
    Transform.ROT180: lambda x, y, m: (m - x, m - y),
    Transform.ROT270: lambda x, y, m: (y, m - x),
    Transform.FLIP_H: lambda x, y, m: (m - x, y),
    Transform.FLIP_V: lambda x, y, m: (x, m - y),
}


def _map(polygon: RoomPolygon, t: Transform, m: int) -> RoomPolygon:
    point_map = _POINT_MAPS[t]
    return RoomPolygon(tuple(point_map(x, y, m) for x, y in polygon.vertices))


def augment(fp: Floorplan, t: Transform) -> Floorplan:
    """
    Apply a grid symmetry to a floorplan.

    Flips reverse orientation, so polygons are re-oriented clockwise and the door is
    re-encoded at boundary positions 0-1; room polygons restart at their smallest
    vertex and rooms are re-ordered canonically.
    """
    t = Transform(t)
    m = fp.grid_size - 1

    boundary = _map(fp.boundary, t, m)
    if fp.boundary.door_encoded:
        boundary = encode_front_door(boundary, (0, 1))
    else:
        boundary = orient_clockwise(boundary)

    rooms: List[Room] = []
    for room in fp.rooms:
        polygon = rotate_to_min_vertex(orient_clockwise(_map(room.polygon, t, m)))
        rooms.append(Room.from_polygon(polygon.vertices, room.type_id))

    return Floorplan(
        boundary=boundary,
        rooms=tuple(order_rooms(rooms, fp.living_type, strict=False)),
        room_types=fp.room_types,
        grid_bits=fp.grid_bits,
    )


def augment_all(fp: Floorplan) -> List[Floorplan]:
    """The five transformed copies of a plan."""
    return [augment(fp, t) for t in AUGMENTATIONS]
