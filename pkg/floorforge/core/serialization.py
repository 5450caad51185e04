"""
Floorplan document format.

A document is a JSON object::

    {
      "grid_bits": 6,
      "room_types": ["living_room", ...],
      "boundary": {"vertices": [[x, y], ...], "door": [0, 1]},
      "rooms": [{"type": "bedroom", "vertices": [[x, y], ...]}, ...]
    }

Room boxes are derived data: they are recomputed from the polygon on load, and an
optional stored ``box`` ([x, y, w, h]) is checked against the polygon.
"""

import json
from pathlib import Path
from typing import Any, Dict, List, Union

from ..exceptions import DocumentParseError, DomainError, GeometryError
from .geometry import encode_front_door
from .models import SUPPORTED_BITS, Floorplan, Room, RoomPolygon

REQUIRED_KEYS = ("grid_bits", "room_types", "boundary", "rooms")


def to_document(fp: Floorplan, include_boxes: bool = False) -> Dict[str, Any]:
    """Convert a floorplan to its document dictionary."""
    rooms = []
    for room in fp.rooms:
        entry: Dict[str, Any] = {
            "type": fp.room_types[room.type_id] if 0 <= room.type_id < len(fp.room_types) else room.type_id,
            "vertices": [list(v) for v in room.polygon.vertices],
        }
        if include_boxes:
            entry["box"] = [room.box.x, room.box.y, room.box.w, room.box.h]
        rooms.append(entry)

    boundary: Dict[str, Any] = {"vertices": [list(v) for v in fp.boundary.vertices]}
    if fp.boundary.door_encoded:
        boundary["door"] = [0, 1]

    return {
        "grid_bits": fp.grid_bits,
        "room_types": list(fp.room_types),
        "boundary": boundary,
        "rooms": rooms,
    }


def serialize(fp: Floorplan, include_boxes: bool = False) -> str:
    """Render a floorplan as document text."""
    return json.dumps(to_document(fp, include_boxes=include_boxes), indent=2) + "\n"


def _require(mapping: Any, key: str, path: str) -> Any:
    if not isinstance(mapping, dict):
        raise DocumentParseError("Expected an object", field=path or "<root>")
    if key not in mapping:
        raise DocumentParseError(f"Missing key '{key}'", field=path or "<root>")
    return mapping[key]


def _parse_vertices(raw: Any, size: int, path: str) -> List[tuple]:
    if not isinstance(raw, list):
        raise DocumentParseError("Expected a list of [x, y] pairs", field=path)
    vertices = []
    for i, pair in enumerate(raw):
        here = f"{path}[{i}]"
        if not isinstance(pair, list) or len(pair) != 2:
            raise DocumentParseError("Expected an [x, y] pair", field=here)
        for value in pair:
            if isinstance(value, bool) or not isinstance(value, int):
                raise DocumentParseError(f"Coordinate {value!r} is not an integer", field=here)
            if not 0 <= value < size:
                raise DocumentParseError(f"Coordinate {value} outside grid [0, {size - 1}]", field=here)
        vertices.append((pair[0], pair[1]))
    return vertices


def from_document(doc: Any) -> Floorplan:
    """Build a floorplan from a parsed document dictionary."""
    for key in REQUIRED_KEYS:
        _require(doc, key, "")

    bits = doc["grid_bits"]
    if isinstance(bits, bool) or bits not in SUPPORTED_BITS:
        raise DocumentParseError(f"Unsupported grid_bits {bits!r}", field="grid_bits")
    size = 2 ** bits

    labels = doc["room_types"]
    if not isinstance(labels, list) or not labels or not all(isinstance(l, str) for l in labels):
        raise DocumentParseError("Expected a nonempty list of labels", field="room_types")
    if len(set(labels)) != len(labels):
        raise DocumentParseError("Duplicate room type labels", field="room_types")

    boundary_doc = doc["boundary"]
    vertices = _parse_vertices(_require(boundary_doc, "vertices", "boundary"), size, "boundary.vertices")
    boundary = RoomPolygon(tuple(vertices))
    door = boundary_doc.get("door")
    if door is not None:
        if (
            not isinstance(door, list)
            or len(door) != 2
            or not all(isinstance(i, int) and not isinstance(i, bool) for i in door)
        ):
            raise DocumentParseError("Expected [i0, i1] vertex indices", field="boundary.door")
        if tuple(door) == (0, 1):
            boundary = RoomPolygon(tuple(vertices), door_encoded=True)
        else:
            try:
                boundary = encode_front_door(boundary, (door[0], door[1]))
            except (DomainError, GeometryError) as e:
                raise DocumentParseError(str(e), field="boundary.door") from e

    rooms_doc = doc["rooms"]
    if not isinstance(rooms_doc, list):
        raise DocumentParseError("Expected a list of rooms", field="rooms")
    rooms = []
    for i, entry in enumerate(rooms_doc):
        path = f"rooms[{i}]"
        label = _require(entry, "type", path)
        if label not in labels:
            raise DocumentParseError(f"Unknown room type {label!r}", field=f"{path}.type")
        type_id = labels.index(label)
        room_vertices = _parse_vertices(_require(entry, "vertices", path), size, f"{path}.vertices")
        if not room_vertices:
            raise DocumentParseError("Room has no vertices", field=f"{path}.vertices")
        room = Room.from_polygon(room_vertices, type_id)
        stored_box = entry.get("box")
        if stored_box is not None and list(stored_box) != [room.box.x, room.box.y, room.box.w, room.box.h]:
            raise DocumentParseError(
                f"Stored box {stored_box} disagrees with polygon bounds", field=f"{path}.box"
            )
        rooms.append(room)

    return Floorplan(boundary=boundary, rooms=tuple(rooms), room_types=tuple(labels), grid_bits=bits)


def deserialize(text: str) -> Floorplan:
    """
    Parse document text into a floorplan.

    Raises:
        DocumentParseError: With line/column for syntax errors and the field path otherwise
    """
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as e:
        raise DocumentParseError(f"Malformed document: {e.msg}", line=e.lineno, column=e.colno) from e
    return from_document(doc)


def read_floorplan(path: Union[str, Path]) -> Floorplan:
    """
    Read one document file.

    Raises:
        DocumentParseError: If the file is not UTF-8 text or not a valid document
        FileNotFoundError: If the file does not exist
    """
    try:
        with open(path, "r", encoding="utf-8") as f:
            text = f.read()
    except UnicodeDecodeError as e:
        raise DocumentParseError(f"{path} is not UTF-8 text: {e.reason} at byte {e.start}") from e
    return deserialize(text)


def write_floorplan(fp: Floorplan, path: Union[str, Path]) -> Path:
    """Write one document file, creating parent directories."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8") as f:
        f.write(serialize(fp))
    return path

