"""Boundary-conditioned CodeTree and polygon decoders."""

from dataclasses import asdict, dataclass, fields
from typing import Any, Dict, Optional, Tuple

import torch
from torch import nn

from ..codebook.model import MaskedVQVAE
from ..core.models import MAX_ROOMS, MAX_VERTICES
from ..exceptions import ConfigError, ShapeError
from .codetree import CodeTreeFormat, GeneratorVariant
from .vocab import Vocabulary


@dataclass
class GenConfig:
    """Hyperparameters of the generator."""
    d_model: int = 256
    d_ff: int = 512
    layers: int = 6
    heads: int = 8
    dropout: float = 0.1
    top_p: float = 0.95
    max_codetree: int = 35
    max_polygon_tokens: int = 800
    max_rooms: int = MAX_ROOMS
    max_vertices: int = MAX_VERTICES
    w_code: float = 1.0
    w_pos: float = 1.0
    w_type: float = 1.0
    batch_size: int = 256
    epochs: int = 400
    warmup_steps: int = 200
    peak_lr: float = 1e-3
    weight_decay: float = 0.01
    grad_clip: float = 1.0
    room_embeddings: bool = True
    variant: str = "full"

    def __post_init__(self):
        try:
            GeneratorVariant(self.variant)
        except ValueError as e:
            choices = [v.value for v in GeneratorVariant]
            raise ConfigError(f"Unknown generator variant {self.variant!r}; choose from {choices}") from e
        if not 0.0 < self.top_p <= 1.0:
            raise ConfigError(f"top_p must be in (0, 1], got {self.top_p}")
        for name in ("max_codetree", "max_polygon_tokens", "max_rooms", "max_vertices", "batch_size", "epochs"):
            if getattr(self, name) <= 0:
                raise ConfigError(f"{name} must be positive")
        if self.d_model % self.heads != 0:
            raise ConfigError(f"d_model {self.d_model} is not divisible by {self.heads} heads")
        if min(self.w_code, self.w_pos, self.w_type) < 0:
            raise ConfigError("Loss weights must be non-negative")

    @property
    def weights(self) -> Tuple[float, float, float]:
        return (self.w_code, self.w_pos, self.w_type)

    @property
    def codetree_format(self) -> Optional[CodeTreeFormat]:
        """CodeTree layout of this variant; None when polygons are decoded without one."""
        return CodeTreeFormat.for_variant(self.variant)

    def to_dict(self) -> Dict[str, Any]:
        return asdict(self)

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> "GenConfig":
        known = {f.name for f in fields(cls)}
        unknown = set(data) - known
        if unknown:
            raise ConfigError(f"Unknown generator settings: {sorted(unknown)}")
        return cls(**data)


def causal_mask(length: int, device: torch.device) -> torch.Tensor:
    return torch.triu(torch.ones(length, length, dtype=torch.bool, device=device), diagonal=1)


class FloorplanGenerator(nn.Module):
    """
    Boundary encoder plus two causal decoders over a shared vocabulary.

    The boundary runs through the frozen polygon VQ-VAE encoder, then a trainable
    projection and adapter encoder produce the cross-attention memory. The CodeTree
    decoder attends to the boundary; the polygon decoder attends to the boundary
    concatenated with the embedded CodeTree. The no_codetree variant builds no
    CodeTree decoder and its polygon decoder attends to the boundary alone.
    """

    def __init__(self, config: GenConfig, vocab: Vocabulary, polygon_model: MaskedVQVAE):
        super().__init__()
        self.config = config
        self.vocab = vocab
        self.polygon_model = polygon_model
        for parameter in self.polygon_model.parameters():
            parameter.requires_grad_(False)

        d = config.d_model
        self.boundary_proj = nn.Linear(polygon_model.config.d_model, d)
        adapter_layer = nn.TransformerEncoderLayer(d, config.heads, config.d_ff, config.dropout, activation="gelu", batch_first=True)
        self.boundary_encoder = nn.TransformerEncoder(adapter_layer, 1, enable_nested_tensor=False)

        self.token_embedding = nn.Embedding(vocab.size, d)
        self.has_codetree = config.codetree_format is not None
        self.codetree_positions = nn.Embedding(config.max_codetree, d) if self.has_codetree else None
        self.polygon_positions = nn.Embedding(config.max_polygon_tokens, d)
        self.room_embedding = nn.Embedding(config.max_rooms + 1, d) if config.room_embeddings else None

        def decoder() -> nn.TransformerDecoder:
            layer = nn.TransformerDecoderLayer(d, config.heads, config.d_ff, config.dropout, activation="gelu", batch_first=True)
            return nn.TransformerDecoder(layer, config.layers)

        self.codetree_decoder = decoder() if self.has_codetree else None
        self.polygon_decoder = decoder()
        self.codetree_head = nn.Linear(d, vocab.size) if self.has_codetree else None
        self.polygon_head = nn.Linear(d, vocab.size)

    def train(self, mode: bool = True) -> "FloorplanGenerator":
        super().train(mode)
        # The codebook model stays frozen in eval mode
        self.polygon_model.eval()
        return self

    def encode_boundary(
        self, fields: torch.Tensor, lengths: torch.Tensor
    ) -> Tuple[torch.Tensor, torch.Tensor, torch.Tensor]:
        """
        Encode boundaries given as polygon field rows.

        Returns:
            pooled codebook-space features [N, d_vq], memory [N, n, d_model] and its padding mask
        """
        with torch.no_grad():
            batch = self.polygon_model.tokenize(fields, lengths)
            hidden = self.polygon_model.encode_sequence(batch)
            keep = (~batch.padding).to(hidden.dtype)[..., None]
            pooled = (hidden * keep).sum(dim=1) / keep.sum(dim=1)
        memory = self.boundary_encoder(self.boundary_proj(hidden), src_key_padding_mask=batch.padding)
        return pooled, memory, batch.padding

    def boundary_code(self, pooled: torch.Tensor) -> torch.Tensor:
        indices, _ = self.polygon_model.codebook.quantize(pooled)
        return indices

    def embed_codetree(self, tokens: torch.Tensor) -> torch.Tensor:
        if not self.has_codetree:
            raise ConfigError(f"The {self.config.variant} generator has no CodeTree decoder")
        length = tokens.shape[1]
        if length > self.config.max_codetree:
            raise ShapeError(f"CodeTree of length {length} exceeds the cap of {self.config.max_codetree}")
        positions = torch.arange(length, device=tokens.device)
        return self.token_embedding(tokens) + self.codetree_positions(positions)

    def codetree_logits(
        self,
        memory: torch.Tensor,
        memory_padding: torch.Tensor,
        tokens: torch.Tensor,
        padding: Optional[torch.Tensor] = None,
    ) -> torch.Tensor:
        """Next-token logits [N, T, V] for every CodeTree prefix."""
        x = self.embed_codetree(tokens)
        hidden = self.codetree_decoder(
            x,
            memory,
            tgt_mask=causal_mask(tokens.shape[1], tokens.device),
            tgt_key_padding_mask=padding,
            memory_key_padding_mask=memory_padding,
        )
        return self.codetree_head(hidden)

    def polygon_memory(
        self,
        memory: torch.Tensor,
        memory_padding: torch.Tensor,
        codetree: Optional[torch.Tensor] = None,
        codetree_padding: Optional[torch.Tensor] = None,
    ) -> Tuple[torch.Tensor, torch.Tensor]:
        """Boundary memory concatenated with the embedded CodeTree, or the boundary alone."""
        if codetree is None:
            return memory, memory_padding
        if codetree_padding is None:
            codetree_padding = torch.zeros(codetree.shape, dtype=torch.bool, device=codetree.device)
        combined = torch.cat([memory, self.embed_codetree(codetree)], dim=1)
        return combined, torch.cat([memory_padding, codetree_padding], dim=1)

    def polygon_logits(
        self,
        memory: torch.Tensor,
        memory_padding: torch.Tensor,
        tokens: torch.Tensor,
        rooms: torch.Tensor,
        padding: Optional[torch.Tensor] = None,
    ) -> torch.Tensor:
        """Next-token logits [N, S, V] for every polygon-stream prefix."""
        length = tokens.shape[1]
        if length > self.config.max_polygon_tokens:
            raise ShapeError(f"Polygon stream of length {length} exceeds the cap of {self.config.max_polygon_tokens}")
        x = self.token_embedding(tokens) + self.polygon_positions(torch.arange(length, device=tokens.device))
        if self.room_embedding is not None:
            x = x + self.room_embedding(rooms.clamp(max=self.config.max_rooms))
        hidden = self.polygon_decoder(
            x,
            memory,
            tgt_mask=causal_mask(length, tokens.device),
            tgt_key_padding_mask=padding,
            memory_key_padding_mask=memory_padding,
        )
        return self.polygon_head(hidden)
