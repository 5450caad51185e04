"""
Dataset splits, on-disk layout and ingestion of external floorplan exports.

A dataset directory holds one document per plan under ``<split>/<index>.json``
and a ``manifest.txt`` index with one ``split<TAB>relative path`` line per file.
"""

import logging
from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, List, Optional, Tuple, Union

import numpy as np

from ..core.floorplan import canonicalize, validate
from ..core.models import MAX_ROOMS, MAX_VERTICES, Floorplan
from ..core.serialization import read_floorplan, write_floorplan
from ..exceptions import DocumentParseError, FloorForgeError, GenerationError
from .augment import augment_all

logger = logging.getLogger("floorforge.data.dataset")

SPLITS = ("train", "val", "test")
MANIFEST_NAME = "manifest.txt"
MIN_PLANS = 10


@dataclass
class DatasetSplit:
    """Train/val/test partition of a list of plans."""
    train: List[Floorplan] = field(default_factory=list)
    val: List[Floorplan] = field(default_factory=list)
    test: List[Floorplan] = field(default_factory=list)

    def items(self) -> List[Tuple[str, List[Floorplan]]]:
        return [("train", self.train), ("val", self.val), ("test", self.test)]

    def counts(self) -> Dict[str, int]:
        return {name: len(plans) for name, plans in self.items()}


def split_dataset(plans: List[Floorplan], seed: int, augment: bool = False) -> DatasetSplit:
    """
    Shuffle deterministically and partition 8:1:1.

    Args:
        plans: At least 10 plans
        seed: Shuffle seed
        augment: Append the five transformed copies of every training plan

    Raises:
        GenerationError: If fewer than 10 plans are given
    """
    n = len(plans)
    if n < MIN_PLANS:
        raise GenerationError(f"Need at least {MIN_PLANS} plans to split, got {n}")

    order = np.random.default_rng(seed).permutation(n)
    n_held = int(round(0.1 * n))
    n_train = n - 2 * n_held

    train = [plans[int(i)] for i in order[:n_train]]
    val = [plans[int(i)] for i in order[n_train:n_train + n_held]]
    test = [plans[int(i)] for i in order[n_train + n_held:]]

    if augment:
        originals = list(train)
        for fp in originals:
            train.extend(augment_all(fp))
        logger.info(f"Augmented {len(originals)} training plans to {len(train)}")

    return DatasetSplit(train=train, val=val, test=test)


def write_dataset(split: DatasetSplit, out_dir: Union[str, Path]) -> Path:
    """Write every plan as a document plus the manifest; returns the manifest path."""
    out_dir = Path(out_dir)
    lines = []
    for name, plans in split.items():
        width = max(4, len(str(max(len(plans) - 1, 0))))
        for index, fp in enumerate(plans):
            relative = f"{name}/{index:0{width}d}.json"
            write_floorplan(fp, out_dir / relative)
            lines.append(f"{name}\t{relative}")

    manifest = out_dir / MANIFEST_NAME
    manifest.parent.mkdir(parents=True, exist_ok=True)
    with open(manifest, "w", encoding="utf-8") as f:
        f.write("\n".join(lines) + ("\n" if lines else ""))
    logger.info(f"Wrote dataset to {out_dir}: {split.counts()}")
    return manifest


def read_manifest(path: Union[str, Path]) -> List[Tuple[str, str]]:
    """Read (split, relative path) entries of a dataset manifest."""
    entries = []
    with open(path, "r", encoding="utf-8") as f:
        for number, line in enumerate(f, start=1):
            line = line.rstrip("\n")
            if not line.strip():
                continue
            parts = line.split("\t")
            if len(parts) != 2 or parts[0] not in SPLITS:
                raise DocumentParseError(f"Bad manifest entry {line!r}", line=number)
            entries.append((parts[0], parts[1]))
    return entries


def load_split(data_dir: Union[str, Path], split: str) -> List[Floorplan]:
    """
    Load one split of a dataset directory in manifest order.

    Raises:
        FileNotFoundError: If the directory has no manifest
    """
    data_dir = Path(data_dir)
    manifest = data_dir / MANIFEST_NAME
    if not manifest.exists():
        raise FileNotFoundError(f"No dataset manifest at {manifest}")
    return [read_floorplan(data_dir / rel) for name, rel in read_manifest(manifest) if name == split]


def load_split_paths(data_dir: Union[str, Path], split: str) -> List[Path]:
    """Document paths of one split in manifest order."""
    data_dir = Path(data_dir)
    manifest = data_dir / MANIFEST_NAME
    if not manifest.exists():
        raise FileNotFoundError(f"No dataset manifest at {manifest}")
    return [data_dir / rel for name, rel in read_manifest(manifest) if name == split]


def load_external(
    path: Union[str, Path],
    skipped: Optional[List[Tuple[str, str]]] = None,
    max_rooms: int = MAX_ROOMS,
    max_vertices: int = MAX_VERTICES,
) -> List[Floorplan]:
    """
    Load pre-vectorized plans from a document file or a directory of them.

    Plans are canonicalized and validated; any per-plan defect is a skip.

    Args:
        path: A single ``.json`` document or a directory of them
        skipped: Optional list receiving (file, reason) for every skipped plan
        max_rooms: Room cap passed to validation
        max_vertices: Vertex cap passed to validation

    Raises:
        FileNotFoundError: If the path does not exist
    """
    path = Path(path)
    if not path.exists():
        raise FileNotFoundError(f"No such file or directory: {path}")
    files = sorted(path.glob("*.json")) if path.is_dir() else [path]

    plans = []
    skip_count = 0
    for file in files:
        try:
            fp = canonicalize(read_floorplan(file))
            report = validate(fp, max_rooms=max_rooms, max_vertices=max_vertices)
            if not report.is_valid:
                raise FloorForgeError(report.summary())
        except FloorForgeError as e:
            skip_count += 1
            logger.warning(f"Skipping {file}: {e}")
            if skipped is not None:
                skipped.append((str(file), str(e)))
            continue
        plans.append(fp)

    logger.info(f"Loaded {len(plans)} plans from {path} ({skip_count} skipped)")
    return plans
