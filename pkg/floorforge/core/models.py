"""
Data models for vector floorplans.
"""

from dataclasses import dataclass, field
from enum import Enum
from typing import Iterable, List, Optional, Sequence, Tuple

Vertex = Tuple[int, int]

DEFAULT_BITS = 6
SUPPORTED_BITS = (5, 6, 7)
MAX_ROOMS = 20
MAX_VERTICES = 40
LIVING_LABEL = "living_room"

DEFAULT_ROOM_TYPES: Tuple[str, ...] = (
    "living_room",
    "bedroom",
    "bathroom",
    "kitchen",
    "balcony",
    "storage",
)

# 12-class taxonomy used for LIFULL-style exports
EXTENDED_ROOM_TYPES: Tuple[str, ...] = DEFAULT_ROOM_TYPES + (
    "dining_room",
    "toilet",
    "entrance",
    "corridor",
    "japanese_room",
    "closet",
)


@dataclass(frozen=True)
class RoomType:
    """A semantic room label."""
    id: int
    name: str


def room_type_table(labels: Sequence[str]) -> List[RoomType]:
    """Build the id -> label table for a taxonomy."""
    return [RoomType(id=i, name=name) for i, name in enumerate(labels)]


@dataclass(frozen=True)
class RoomBox:
    """Layout tuple (x, y, w, h, c) on the grid; (x, y) is the bottom-left corner."""
    x: int
    y: int
    w: int
    h: int
    c: int

    @classmethod
    def from_vertices(cls, vertices: Iterable[Vertex], c: int) -> "RoomBox":
        """Create the axis-aligned bounding box of a vertex list."""
        xs, ys = zip(*vertices)
        return cls(x=min(xs), y=min(ys), w=max(xs) - min(xs), h=max(ys) - min(ys), c=c)

    def as_fields(self) -> Tuple[int, int, int, int, int]:
        return (self.x, self.y, self.w, self.h, self.c)


@dataclass(frozen=True)
class RoomPolygon:
    """Clockwise vertex list; when door_encoded, vertices 0 and 1 are the front door."""
    vertices: Tuple[Vertex, ...]
    door_encoded: bool = False

    def __post_init__(self):
        # Accept lists of lists from parsers and tensors from decoders
        object.__setattr__(
            self, "vertices", tuple((int(x), int(y)) for x, y in self.vertices)
        )

    def __len__(self) -> int:
        return len(self.vertices)


@dataclass(frozen=True)
class Room:
    """A room: its layout box and its polygon."""
    box: RoomBox
    polygon: RoomPolygon

    @classmethod
    def from_polygon(cls, vertices: Iterable[Vertex], c: int) -> "Room":
        """Create a room whose box is derived from the polygon."""
        polygon = RoomPolygon(tuple(vertices))
        return cls(box=RoomBox.from_vertices(polygon.vertices, c), polygon=polygon)

    @property
    def type_id(self) -> int:
        return self.box.c


@dataclass(frozen=True)
class Floorplan:
    """Boundary polygon with front door plus canonically ordered rooms."""
    boundary: RoomPolygon
    rooms: Tuple[Room, ...]
    room_types: Tuple[str, ...] = DEFAULT_ROOM_TYPES
    grid_bits: int = DEFAULT_BITS

    def __post_init__(self):
        object.__setattr__(self, "rooms", tuple(self.rooms))
        object.__setattr__(self, "room_types", tuple(self.room_types))

    @property
    def living_type(self) -> Optional[int]:
        """Type id of the living room label, if the taxonomy has one."""
        try:
            return self.room_types.index(LIVING_LABEL)
        except ValueError:
            return None

    @property
    def grid_size(self) -> int:
        return 2 ** self.grid_bits

    def with_rooms(self, rooms: Iterable[Room]) -> "Floorplan":
        return Floorplan(
            boundary=self.boundary,
            rooms=tuple(rooms),
            room_types=self.room_types,
            grid_bits=self.grid_bits,
        )


class Severity(Enum):
    """How a validation finding affects a plan."""
    VIOLATION = "violation"
    NOTICE = "notice"


@dataclass(frozen=True)
class Finding:
    """One validation finding."""
    code: str
    message: str
    room_index: Optional[int] = None
    severity: Severity = Severity.VIOLATION


@dataclass
class ValidationReport:
    """Violations make a plan invalid; notices are observations only."""
    violations: List[Finding] = field(default_factory=list)
    notices: List[Finding] = field(default_factory=list)

    @property
    def is_valid(self) -> bool:
        return not self.violations

    def codes(self) -> List[str]:
        return [f.code for f in self.violations]

    def notice_codes(self) -> List[str]:
        return [f.code for f in self.notices]

    def add(self, code: str, message: str, room_index: Optional[int] = None) -> None:
        self.violations.append(Finding(code, message, room_index))

    def notice(self, code: str, message: str, room_index: Optional[int] = None) -> None:
        self.notices.append(Finding(code, message, room_index, Severity.NOTICE))

    def summary(self) -> str:
        if self.is_valid:
            return "valid"
        return "; ".join(f.message for f in self.violations)
