"""FloorForge - boundary-conditioned vector floorplan generation."""

__version__ = "0.1.0"
__author__ = "David Maynor"
__email__ = "dmaynor@gmail.com"

from .core import Floorplan, Room, RoomBox, RoomPolygon, deserialize, serialize, validate
from .exceptions import FloorForgeError
from .exporters import EvaluationExporter, Exporter, ManifestExporter, StatsExporter

__all__ = [
    "Floorplan",
    "Room",
    "RoomBox",
    "RoomPolygon",
    "deserialize",
    "serialize",
    "validate",
    "FloorForgeError",
    "Exporter",
    "StatsExporter",
    "ManifestExporter",
    "EvaluationExporter",
]
