"""Unit tests for synthesis, augmentation and dataset handling."""

from collections import Counter
from pathlib import Path

import numpy as np
import pytest

from floorforge.core.floorplan import door_adjacent_to_living, validate
from floorforge.core.geometry import is_rectilinear, signed_area2
from floorforge.core.serialization import write_floorplan
from floorforge.data.augment import AUGMENTATIONS, Transform, augment, augment_all
from floorforge.data.dataset import (
    MANIFEST_NAME,
    load_external,
    load_split,
    load_split_paths,
    read_manifest,
    split_dataset,
    write_dataset,
)
from floorforge.data.synth import SynthParams, sample_rng, synth_boundary, synth_dataset, synth_floorplan
from floorforge.exceptions import DocumentParseError, GenerationError


def area(vertices):
    return -signed_area2(vertices) / 2


class TestSynthBoundary:
    """Test suite for synthetic boundaries."""

    def test_rectangle(self, rng):
        """Test zero notches gives a clockwise rectangle."""
        boundary = synth_boundary(rng, 0)
        assert len(boundary) == 4
        assert signed_area2(boundary.vertices) < 0

    @pytest.mark.parametrize("notches", [1, 2, 3, 5])
    def test_notched(self, rng, notches):
        """Test notch counts, orientation and edge lengths."""
        boundary = synth_boundary(rng, notches)
        vertices = boundary.vertices
        assert len(vertices) == 4 + 2 * notches
        assert signed_area2(vertices) < 0
        assert is_rectilinear(vertices)
        for i in range(len(vertices)):
            (x1, y1), (x2, y2) = vertices[i], vertices[(i + 1) % len(vertices)]
            assert abs(x2 - x1) + abs(y2 - y1) >= 2
        assert all(0 <= c <= 63 for v in vertices for c in v)

    def test_deterministic(self):
        """Test the same seed gives the same polygon."""
        a = synth_boundary(np.random.default_rng(5), 2)
        b = synth_boundary(np.random.default_rng(5), 2)
        assert a == b


class TestSynthFloorplan:
    """Test suite for synthetic plans."""

    def test_plans_are_valid_partitions(self, synth_plans, small_params):
        """Test validity, exact area partition, living room and door placement."""
        lo, hi = small_params.room_count_range
        for fp in synth_plans:
            assert validate(fp).is_valid, validate(fp).summary()
            assert validate(fp).notices == []
            assert lo <= len(fp.rooms) <= hi
            room_areas = [area(r.polygon.vertices) for r in fp.rooms]
            assert sum(room_areas) == area(fp.boundary.vertices)
            assert fp.rooms[0].type_id == fp.living_type
            assert room_areas[0] == max(room_areas)
            assert door_adjacent_to_living(fp)
            assert fp.boundary.door_encoded

    def test_single_room(self):
        """Test a one-room plan is the whole boundary."""
        params = SynthParams(room_count_range=(1, 1), boundary_notches=0, seed=3)
        fp = synth_floorplan(sample_rng(3, 0), params)
        assert len(fp.rooms) == 1
        assert area(fp.rooms[0].polygon.vertices) == area(fp.boundary.vertices)

    def test_room_count_sweep(self):
        """Test room counts stay within range over many samples."""
        params = SynthParams(room_count_range=(3, 6), seed=11)
        counts = [len(fp.rooms) for fp in synth_dataset(params, 60)]
        assert min(counts) >= 3 and max(counts) <= 6

    def test_sample_reproducible_alone(self, small_params):
        """Test sample i depends only on (seed, i)."""
        plans = synth_dataset(small_params, 5)
        assert synth_floorplan(sample_rng(small_params.seed, 3), small_params) == plans[3]

    def test_infeasible(self):
        """Test impossible parameters raise a generation error."""
        params = SynthParams(room_count_range=(20, 20), min_room_extent=16, max_attempts=3)
        with pytest.raises(GenerationError):
            synth_floorplan(np.random.default_rng(0), params)

    def test_invalid_params(self):
        """Test parameter validation."""
        with pytest.raises(GenerationError):
            SynthParams(room_count_range=(5, 2))
        with pytest.raises(GenerationError):
            SynthParams(min_room_extent=1)


class TestAugment:
    """Test suite for grid symmetries."""

    def test_rot180_involution(self, synth_plans):
        """Test rot180 applied twice is the identity."""
        for fp in synth_plans:
            assert augment(augment(fp, Transform.ROT180), Transform.ROT180) == fp

    def test_rot90_four_times(self, three_room_plan):
        """Test four quarter turns are the identity."""
        fp = three_room_plan
        for _ in range(4):
            fp = augment(fp, Transform.ROT90)
        assert fp == three_room_plan

    def test_flips_compose_to_rot180(self, synth_plans):
        """Test flip_h then flip_v equals rot180."""
        for fp in synth_plans:
            assert augment(augment(fp, Transform.FLIP_H), Transform.FLIP_V) == augment(fp, Transform.ROT180)

    def test_preserves_validity_and_areas(self, synth_plans):
        """Test every transform keeps plans valid with the same types and areas."""
        for fp in synth_plans:
            for t in AUGMENTATIONS:
                out = augment(fp, t)
                assert validate(out).is_valid, f"{t}: {validate(out).summary()}"
                assert Counter(r.type_id for r in out.rooms) == Counter(r.type_id for r in fp.rooms)
                assert sorted(area(r.polygon.vertices) for r in out.rooms) == sorted(
                    area(r.polygon.vertices) for r in fp.rooms
                )
                assert door_adjacent_to_living(out)

    def test_augment_all(self, three_room_plan):
        """Test five copies are produced."""
        assert len(augment_all(three_room_plan)) == 5


class TestSplit:
    """Test suite for dataset splits."""

    def test_ratio(self, plan_factory):
        """Test 100 plans split 80/10/10."""
        plans = [plan_factory() for _ in range(100)]
        assert split_dataset(plans, seed=0).counts() == {"train": 80, "val": 10, "test": 10}

    def test_disjoint_and_deterministic(self, plan_factory):
        """Test disjoint splits and seed determinism."""
        plans = [plan_factory() for _ in range(37)]
        a = split_dataset(plans, seed=4)
        b = split_dataset(plans, seed=4)
        ids = {name: [id(p) for p in part] for name, part in a.items()}
        assert ids == {name: [id(p) for p in part] for name, part in b.items()}
        assert not set(ids["train"]) & set(ids["test"])
        assert not set(ids["train"]) & set(ids["val"])
        assert sum(len(v) for v in ids.values()) == 37

    def test_augment_train_only(self, plan_factory):
        """Test augmentation multiplies only the training split."""
        plans = [plan_factory() for _ in range(20)]
        split = split_dataset(plans, seed=1, augment=True)
        assert split.counts() == {"train": 96, "val": 2, "test": 2}

    def test_too_few(self, plan_factory):
        """Test fewer than ten plans cannot be split."""
        with pytest.raises(GenerationError):
            split_dataset([plan_factory() for _ in range(9)], seed=0)


class TestDatasetFiles:
    """Test suite for dataset directories and external ingestion."""

    def test_write_and_load(self, temp_workspace, synth_plans):
        """Test a written dataset loads back in manifest order."""
        split = split_dataset(synth_plans, seed=2)
        manifest = write_dataset(split, temp_workspace / "data")
        entries = read_manifest(manifest)
        assert len(entries) == len(synth_plans)
        assert entries[0] == ("train", "train/0000.json")
        assert load_split(temp_workspace / "data", "train") == split.train
        assert load_split(temp_workspace / "data", "test") == split.test
        assert len(load_split_paths(temp_workspace / "data", "val")) == len(split.val)

    def test_missing_manifest(self, temp_workspace):
        """Test loading a directory without a manifest."""
        with pytest.raises(FileNotFoundError):
            load_split(temp_workspace, "train")

    def test_bad_manifest(self, temp_workspace):
        """Test malformed manifest lines report their line number."""
        (temp_workspace / MANIFEST_NAME).write_text("train\ta.json\nbogus line\n")
        with pytest.raises(DocumentParseError) as excinfo:
            read_manifest(temp_workspace / MANIFEST_NAME)
        assert excinfo.value.line == 2

    def test_load_external(self, temp_workspace, synth_plans):
        """Test a directory of documents loads with zero skips."""
        for i, fp in enumerate(synth_plans[:4]):
            write_floorplan(fp, temp_workspace / "ext" / f"{i}.json")
        skipped = []
        assert load_external(temp_workspace / "ext", skipped) == synth_plans[:4]
        assert skipped == []

    def test_load_external_skips(self, temp_workspace, three_room_plan):
        """Test plans over the room cap and broken files are skipped and counted."""
        write_floorplan(three_room_plan, temp_workspace / "ext" / "a.json")
        write_floorplan(three_room_plan.with_rooms(three_room_plan.rooms * 7), temp_workspace / "ext" / "b.json")
        (temp_workspace / "ext" / "c.json").write_text("{not json")
        skipped = []
        plans = load_external(temp_workspace / "ext", skipped)
        assert plans == [three_room_plan]
        assert [Path(p).name for p, _ in skipped] == ["b.json", "c.json"]

    def test_load_external_skips_binary(self, temp_workspace, three_room_plan):
        """Test a file with invalid UTF-8 bytes is skipped, not fatal."""
        write_floorplan(three_room_plan, temp_workspace / "ext" / "a.json")
        (temp_workspace / "ext" / "bad.json").write_bytes(b"\xff\xfe\x00{")
        skipped = []
        assert load_external(temp_workspace / "ext", skipped) == [three_room_plan]
        assert len(skipped) == 1
        assert Path(skipped[0][0]).name == "bad.json"

    def test_load_external_single_file(self, temp_workspace, three_room_plan):
        """Test a single document path."""
        path = write_floorplan(three_room_plan, temp_workspace / "one.json")
        assert load_external(path) == [three_room_plan]

    def test_load_external_empty(self, temp_workspace):
        """Test an empty directory and a missing path."""
        (temp_workspace / "empty").mkdir()
        assert load_external(temp_workspace / "empty") == []
        with pytest.raises(FileNotFoundError):
            load_external(temp_workspace / "missing")
