"""
Canonical vector floorplan data model.
"""

from .models import (
    DEFAULT_ROOM_TYPES,
    EXTENDED_ROOM_TYPES,
    LIVING_LABEL,
    MAX_ROOMS,
    MAX_VERTICES,
    Floorplan,
    Room,
    RoomBox,
    RoomPolygon,
    RoomType,
    ValidationReport,
    room_type_table,
)
from .grid import dequantize_coord, grid_size, quantize_coord
from .geometry import (
    encode_front_door,
    insert_door_vertices,
    is_simple,
    orient_clockwise,
    shared_boundary_length,
    signed_area2,
)
from .floorplan import canonicalize, door_adjacent_to_living, order_rooms, validate
from .serialization import deserialize, read_floorplan, serialize, write_floorplan
