"""
Token embeddings for layout and polygon sequences.

A layout sample is a sequence of room tuples (x, y, w, h, c). A polygon sample is
a sequence of vertex rows (x, y, label, door) where label is the room type (or the
boundary label for the outer wall) and door marks the two front-door vertices.
"""

from dataclasses import dataclass
from enum import Enum
from typing import List, Sequence, Tuple

import numpy as np
import torch
from torch import nn

from ..core.models import Floorplan, RoomBox, RoomPolygon
from ..exceptions import ShapeError

LAYOUT_FIELDS = 5
POLYGON_FIELDS = 4


class TypeEncoding(Enum):
    """How room types enter polygon tokens."""
    UNIFORM = "I"
    DOOR_TAG = "II"
    PREFIX = "III"
    NONE = "IV"


@dataclass
class TokenBatch:
    """Embedded, padded token sequences ready for the encoder."""
    tokens: torch.Tensor      # [N, T, d_model], positional term included
    positional: torch.Tensor  # [T, d_model]
    padding: torch.Tensor     # [N, T], True at padding
    maskable: torch.Tensor    # [N, T], True where a token may be masked and is reconstructed
    targets: torch.Tensor     # [N, T, F] discrete fields to reconstruct


def layout_fields(rooms: Sequence[RoomBox]) -> np.ndarray:
    """Room tuples as an [M, 5] integer array."""
    return np.array([box.as_fields() for box in rooms], dtype=np.int64).reshape(-1, LAYOUT_FIELDS)


def polygon_fields(polygon: RoomPolygon, label: int) -> np.ndarray:
    """Vertex rows (x, y, label, door) as an [n, 4] integer array."""
    rows = []
    for i, (x, y) in enumerate(polygon.vertices):
        door = 1 if polygon.door_encoded and i < 2 else 0
        rows.append((x, y, label, door))
    return np.array(rows, dtype=np.int64).reshape(-1, POLYGON_FIELDS)


def layout_samples(plans: Sequence[Floorplan]) -> List[np.ndarray]:
    return [layout_fields([room.box for room in fp.rooms]) for fp in plans]


def polygon_samples(plans: Sequence[Floorplan], boundary_label: int) -> List[np.ndarray]:
    """Every room polygon of every plan, followed by the plan's boundary."""
    samples = []
    for fp in plans:
        samples.extend(polygon_fields(room.polygon, room.type_id) for room in fp.rooms)
        samples.append(polygon_fields(fp.boundary, boundary_label))
    return samples


def collate(samples: Sequence[np.ndarray], max_len: int) -> Tuple[torch.Tensor, torch.Tensor]:
    """
    Pad samples into a batch.

    Returns:
        fields [N, T, F] and lengths [N]

    Raises:
        ShapeError: If a sample is empty or longer than max_len
    """
    if not samples:
        raise ShapeError("Cannot collate an empty batch")
    lengths = [len(s) for s in samples]
    if min(lengths) == 0:
        raise ShapeError("Cannot embed an empty sequence")
    if max(lengths) > max_len:
        raise ShapeError(f"Sequence of length {max(lengths)} exceeds the cap of {max_len}")
    width = samples[0].shape[1]
    fields = np.zeros((len(samples), max(lengths), width), dtype=np.int64)
    for i, sample in enumerate(samples):
        fields[i, : len(sample)] = sample
    return torch.from_numpy(fields), torch.tensor(lengths, dtype=torch.long)


class EmbeddingTables(nn.Module):
    """Shared grid table W_g, label table W_c and learned positions gamma."""

    def __init__(self, bits: int, num_labels: int, embed_dim: int, d_model: int, max_seq: int):
        super().__init__()
        self.grid = nn.Embedding(2 ** bits, embed_dim)
        self.labels = nn.Embedding(num_labels, embed_dim)
        self.gamma = nn.Embedding(max_seq, d_model)
        self.max_seq = max_seq

    def positional(self, length: int) -> torch.Tensor:
        if length > self.max_seq:
            raise ShapeError(f"Sequence of length {length} exceeds the cap of {self.max_seq}")
        return self.gamma(torch.arange(length, device=self.gamma.weight.device))


def _mlp(in_dim: int, d_model: int) -> nn.Sequential:
    return nn.Sequential(nn.Linear(in_dim, d_model), nn.GELU(), nn.Linear(d_model, d_model))


def _padding(lengths: torch.Tensor, width: int) -> torch.Tensor:
    return torch.arange(width, device=lengths.device)[None, :] >= lengths[:, None]


class LayoutTokenizer(nn.Module):
    """One token per room: MLP(W_g x | W_g y | W_g w | W_g h | W_c c) + gamma_t."""

    def __init__(self, bits: int, num_types: int, embed_dim: int, d_model: int, max_len: int):
        super().__init__()
        self.tables = EmbeddingTables(bits, num_types, embed_dim, d_model, max_len)
        self.mlp = _mlp(LAYOUT_FIELDS * embed_dim, d_model)
        self.field_sizes = [2 ** bits] * 4 + [num_types]

    def content(self, fields: torch.Tensor) -> torch.Tensor:
        """Pre-positional MLP output, [N, T, d_model]."""
        grid = self.tables.grid(fields[..., :4]).flatten(-2)
        label = self.tables.labels(fields[..., 4])
        return self.mlp(torch.cat([grid, label], dim=-1))

    def forward(self, fields: torch.Tensor, lengths: torch.Tensor) -> TokenBatch:
        width = fields.shape[1]
        positional = self.tables.positional(width)
        padding = _padding(lengths, width)
        return TokenBatch(
            tokens=self.content(fields) + positional,
            positional=positional,
            padding=padding,
            maskable=~padding,
            targets=fields,
        )


class PolygonTokenizer(nn.Module):
    """
    One token per vertex built from its (x, y) grid embeddings.

    UNIFORM adds the room label to every vertex, DOOR_TAG does the same but tags the
    front-door vertices, PREFIX prepends a single label token, NONE uses coordinates only.
    """

    def __init__(
        self,
        bits: int,
        num_types: int,
        embed_dim: int,
        d_model: int,
        max_len: int,
        encoding: TypeEncoding = TypeEncoding.NONE,
    ):
        super().__init__()
        self.encoding = TypeEncoding(encoding)
        self.boundary_label = num_types
        self.door_label = num_types + 1
        prefix = 1 if self.encoding is TypeEncoding.PREFIX else 0
        self.tables = EmbeddingTables(bits, num_types + 2, embed_dim, d_model, max_len + prefix)
        per_vertex_labels = self.encoding in (TypeEncoding.UNIFORM, TypeEncoding.DOOR_TAG)
        self.mlp = _mlp((3 if per_vertex_labels else 2) * embed_dim, d_model)
        self.prefix_mlp = _mlp(embed_dim, d_model) if prefix else None
        self.field_sizes = [2 ** bits] * 2

    def content(self, fields: torch.Tensor) -> torch.Tensor:
        parts = [self.tables.grid(fields[..., 0]), self.tables.grid(fields[..., 1])]
        if self.encoding is TypeEncoding.UNIFORM:
            parts.append(self.tables.labels(fields[..., 2]))
        elif self.encoding is TypeEncoding.DOOR_TAG:
            labels = torch.where(fields[..., 3] > 0, torch.full_like(fields[..., 2], self.door_label), fields[..., 2])
            parts.append(self.tables.labels(labels))
        tokens = self.mlp(torch.cat(parts, dim=-1))
        if self.prefix_mlp is not None:
            prefix = self.prefix_mlp(self.tables.labels(fields[:, :1, 2]))
            tokens = torch.cat([prefix, tokens], dim=1)
        return tokens

    def forward(self, fields: torch.Tensor, lengths: torch.Tensor) -> TokenBatch:
        targets = fields[..., :2]
        maskable = ~_padding(lengths, fields.shape[1])
        if self.prefix_mlp is not None:
            targets = torch.cat([torch.zeros_like(targets[:, :1]), targets], dim=1)
            maskable = torch.cat([torch.zeros_like(maskable[:, :1]), maskable], dim=1)
            lengths = lengths + 1
        width = targets.shape[1]
        positional = self.tables.positional(width)
        return TokenBatch(
            tokens=self.content(fields) + positional,
            positional=positional,
            padding=_padding(lengths, width),
            maskable=maskable,
            targets=targets,
        )


def tokenize_layout(rooms: Sequence[RoomBox], tokenizer: LayoutTokenizer) -> torch.Tensor:
    """Tokens [M, d_model] of one layout."""
    fields, lengths = collate([layout_fields(rooms)], tokenizer.tables.max_seq)
    return tokenizer(fields, lengths).tokens[0]


def tokenize_polygon(polygon: RoomPolygon, label: int, tokenizer: PolygonTokenizer) -> torch.Tensor:
    """Tokens of one polygon: n rows, or n + 1 with a prefix label token."""
    prefix = 1 if tokenizer.prefix_mlp is not None else 0
    fields, lengths = collate([polygon_fields(polygon, label)], tokenizer.tables.max_seq - prefix)
    return tokenizer(fields, lengths).tokens[0]
