"""
Synthetic floorplans, augmentation and dataset handling.
"""

from .synth import SynthParams, sample_rng, synth_boundary, synth_dataset, synth_floorplan
from .augment import AUGMENTATIONS, Transform, augment, augment_all
from .dataset import (
    DatasetSplit,
    load_external,
    load_split,
    load_split_paths,
    read_manifest,
    split_dataset,
    write_dataset,
)
