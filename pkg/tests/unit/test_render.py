"""Unit tests for SVG rendering."""

import xml.etree.ElementTree as ET

import pytest

from floorforge.core.models import RoomPolygon
from floorforge.exceptions import DomainError
from floorforge.render import FALLBACK_COLOR, PALETTE, render_svg, room_color, write_svg

SVG = "{http://www.w3.org/2000/svg}"


class TestRenderSVG:
    """Test suite for render_svg."""

    def test_elements(self, three_room_plan):
        """Test one polygon per room, the boundary and the door."""
        root = ET.fromstring(render_svg(three_room_plan))
        rooms = root.findall(f".//{SVG}polygon[@class='room']")
        assert len(rooms) == 3
        assert [r.find(f"{SVG}title").text for r in rooms] == ["living_room", "bedroom", "bathroom"]
        assert rooms[0].get("fill") == PALETTE[0]
        assert len(root.findall(f"{SVG}polygon[@class='boundary']")) == 1
        assert len(root.findall(f"{SVG}line[@class='door']")) == 1

    def test_y_axis_flipped(self, three_room_plan):
        """Test grid y = 0 is drawn at the bottom."""
        root = ET.fromstring(render_svg(three_room_plan, scale=8))
        assert root.get("width") == "508"
        living = root.find(f".//{SVG}polygon[@class='room']")
        assert living.get("points").split()[:2] == ["2,506", "2,466"]
        door = root.find(f"{SVG}line[@class='door']")
        assert (door.get("x1"), door.get("y1"), door.get("x2"), door.get("y2")) == ("50", "506", "34", "506")

    def test_deterministic(self, three_room_plan):
        """Test equal plans render to identical text."""
        assert render_svg(three_room_plan) == render_svg(three_room_plan)
        assert render_svg(three_room_plan).endswith("</svg>\n")

    def test_no_door(self, three_room_plan):
        """Test boundaries without an encoded door get no door line."""
        plan = type(three_room_plan)(
            boundary=RoomPolygon(three_room_plan.boundary.vertices),
            rooms=three_room_plan.rooms,
            room_types=three_room_plan.room_types,
        )
        root = ET.fromstring(render_svg(plan))
        assert root.find(f"{SVG}line") is None

    def test_bad_scale(self, three_room_plan):
        """Test non-positive scales are rejected."""
        with pytest.raises(DomainError):
            render_svg(three_room_plan, scale=0)

    def test_color_fallback(self):
        """Test unknown type ids get the fallback colour."""
        assert room_color(len(PALETTE)) == FALLBACK_COLOR
        assert room_color(-1) == FALLBACK_COLOR

    def test_write_svg(self, three_room_plan, temp_workspace):
        """Test the file is written under new directories."""
        path = write_svg(three_room_plan, temp_workspace / "svg" / "plan.svg")
        assert path.read_text() == render_svg(three_room_plan)
