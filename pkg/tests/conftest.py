"""Test fixtures for FloorForge unit tests."""

import os
import shutil
import tempfile
from pathlib import Path

import numpy as np
import pytest

from floorforge.codebook.model import VQVAEConfig
from floorforge.core.models import DEFAULT_ROOM_TYPES, Floorplan, Room, RoomPolygon
from floorforge.data.synth import SynthParams, synth_dataset
from floorforge.generator.model import GenConfig


@pytest.fixture
def temp_workspace():
    """Create a temporary workspace for tests."""
    temp_dir = tempfile.mkdtemp(prefix="floorforge_test_")
    old_cwd = os.getcwd()
    os.chdir(temp_dir)

    yield Path(temp_dir)

    # Clean up
    os.chdir(old_cwd)
    shutil.rmtree(temp_dir)


def make_three_room_plan() -> Floorplan:
    """10x10 square: living room below, bedroom and bathroom above, door on the living room wall."""
    boundary = RoomPolygon(((6, 0), (4, 0), (0, 0), (0, 10), (10, 10), (10, 0)), door_encoded=True)
    rooms = (
        Room.from_polygon([(0, 0), (0, 5), (10, 5), (10, 0)], 0),
        Room.from_polygon([(0, 5), (0, 10), (5, 10), (5, 5)], 1),
        Room.from_polygon([(5, 5), (5, 10), (10, 10), (10, 5)], 2),
    )
    return Floorplan(boundary=boundary, rooms=rooms, room_types=DEFAULT_ROOM_TYPES, grid_bits=6)


@pytest.fixture
def three_room_plan():
    """A hand-built valid plan whose rooms exactly partition the boundary."""
    return make_three_room_plan()


@pytest.fixture
def small_params():
    """Synthesis parameters that produce small, fast plans."""
    return SynthParams(room_count_range=(2, 4), boundary_notches=2, min_room_extent=4, seed=7)


@pytest.fixture
def synth_plans(small_params):
    """Twelve synthetic plans."""
    return synth_dataset(small_params, 12)


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


@pytest.fixture
def tiny_vqvae_config():
    """A VQ-VAE small enough to train for a couple of epochs in a unit test."""
    return VQVAEConfig(
        d_model=16,
        d_ff=32,
        layers=1,
        heads=2,
        dropout=0.0,
        embed_dim=8,
        codebook_size=16,
        batch_size=16,
        epochs=2,
        warmup_steps=2,
    )


@pytest.fixture
def tiny_gen_config():
    """A generator small enough to train for a couple of epochs in a unit test."""
    return GenConfig(
        d_model=16,
        d_ff=32,
        layers=1,
        heads=2,
        dropout=0.0,
        batch_size=8,
        epochs=2,
        warmup_steps=2,
        max_polygon_tokens=400,
    )


@pytest.fixture
def plan_factory():
    """Build fresh, distinct copies of the three-room plan."""
    return make_three_room_plan
