"""
SVG rendering of floorplan documents.
"""

import logging
from pathlib import Path
from typing import Sequence, Tuple, Union

from jinja2 import Template

from .core.models import Floorplan, Vertex
from .exceptions import DomainError

logger = logging.getLogger("floorforge.render")

TEMPLATE_PATH = Path(__file__).parent / "templates" / "floorplan.svg.j2"
DEFAULT_SCALE = 8
MARGIN = 2
DOOR_COLOR = "#d62728"

# Indexed by room type id
PALETTE: Tuple[str, ...] = (
    "#f4c27a",  # living room
    "#8fb8de",
    "#b5d99c",
    "#f29e9e",
    "#c9b3e6",
    "#d9d9d9",
    "#ffe08a",
    "#9ed9d2",
    "#e6b8a2",
    "#a7c4a0",
    "#d4a5c9",
    "#bcbcbc",
)
FALLBACK_COLOR = "#eeeeee"


def room_color(type_id: int) -> str:
    return PALETTE[type_id] if 0 <= type_id < len(PALETTE) else FALLBACK_COLOR


def _screen(vertex: Vertex, size: int, scale: int) -> Tuple[int, int]:
    # y grows downward on screen
    x, y = vertex
    return MARGIN + x * scale, MARGIN + (size - 1 - y) * scale


def _points(vertices: Sequence[Vertex], size: int, scale: int) -> str:
    return " ".join(f"{sx},{sy}" for sx, sy in (_screen(v, size, scale) for v in vertices))


def render_svg(fp: Floorplan, scale: int = DEFAULT_SCALE) -> str:
    """
    Draw a plan as SVG text: one filled polygon per room, the boundary outline and
    a door tick along boundary vertices 0-1 when the door is encoded.

    Raises:
        DomainError: If scale is not positive
    """
    if scale < 1:
        raise DomainError(f"scale must be a positive integer, got {scale}")
    size = 2 ** fp.grid_bits
    extent = 2 * MARGIN + (size - 1) * scale

    rooms = []
    for room in fp.rooms:
        label = fp.room_types[room.type_id] if 0 <= room.type_id < len(fp.room_types) else str(room.type_id)
        rooms.append(
            {
                "points": _points(room.polygon.vertices, size, scale),
                "color": room_color(room.type_id),
                "label": label,
            }
        )

    door = None
    if fp.boundary.door_encoded and len(fp.boundary.vertices) >= 2:
        door = _screen(fp.boundary.vertices[0], size, scale) + _screen(fp.boundary.vertices[1], size, scale)

    template = Template(TEMPLATE_PATH.read_text(encoding="utf-8"), keep_trailing_newline=True)
    return template.render(
        width=extent,
        height=extent,
        rooms=rooms,
        boundary=_points(fp.boundary.vertices, size, scale),
        boundary_width=max(2, scale // 3),
        door=door,
        door_color=DOOR_COLOR,
        door_width=max(3, scale // 2),
    )


def write_svg(fp: Floorplan, path: Union[str, Path], scale: int = DEFAULT_SCALE) -> Path:
    """Render a plan to an SVG file."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8") as f:
        f.write(render_svg(fp, scale))
    logger.info(f"Rendered {len(fp.rooms)} rooms to {path}")
    return path
