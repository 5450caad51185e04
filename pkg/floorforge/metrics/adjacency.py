"""Room adjacency and per-type statistics."""

import numpy as np

from ..core.geometry import shared_boundary_length
from ..core.models import Floorplan

DEFAULT_MIN_SHARED = 2


def adjacency_matrix(fp: Floorplan, min_shared: int = DEFAULT_MIN_SHARED) -> np.ndarray:
    """
    Symmetric boolean room adjacency.

    Rooms i and j are adjacent when their walls share collinear segments of total
    length at least `min_shared`; touching at a corner does not count.
    """
    m = len(fp.rooms)
    adjacency = np.zeros((m, m), dtype=bool)
    for i in range(m):
        for j in range(i + 1, m):
            shared = shared_boundary_length(fp.rooms[i].polygon.vertices, fp.rooms[j].polygon.vertices)
            if shared >= min_shared:
                adjacency[i, j] = adjacency[j, i] = True
    return adjacency


def type_counts(fp: Floorplan) -> np.ndarray:
    """Room count per type id."""
    counts = np.zeros(len(fp.room_types), dtype=np.int64)
    for room in fp.rooms:
        counts[room.type_id] += 1
    return counts


def type_adjacency_counts(fp: Floorplan, min_shared: int = DEFAULT_MIN_SHARED) -> np.ndarray:
    """Adjacent room pairs per unordered type pair, as the flattened upper triangle."""
    k = len(fp.room_types)
    counts = np.zeros((k, k), dtype=np.int64)
    adjacency = adjacency_matrix(fp, min_shared)
    for i, j in zip(*np.nonzero(np.triu(adjacency, k=1))):
        a, b = sorted((fp.rooms[i].type_id, fp.rooms[j].type_id))
        counts[a, b] += 1
    return counts[np.triu_indices(k)]
