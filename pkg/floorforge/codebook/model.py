"""Masked VQ-VAE over layout or polygon token sequences."""

import math
from dataclasses import asdict, dataclass, fields, replace
from enum import Enum
from typing import Any, Dict, List, Optional, Sequence, Tuple

import numpy as np
import torch
from torch import nn

from ..core.models import DEFAULT_BITS, MAX_ROOMS, MAX_VERTICES, SUPPORTED_BITS
from ..exceptions import ConfigError, ShapeError
from .embedding import LayoutTokenizer, PolygonTokenizer, TokenBatch, TypeEncoding, collate
from .quantizer import Codebook


class Level(Enum):
    LAYOUT = "layout"
    POLYGON = "polygon"


@dataclass
class VQVAEConfig:
    """Hyperparameters of one masked VQ-VAE."""
    d_model: int = 256
    d_ff: int = 512
    layers: int = 4
    heads: int = 8
    dropout: float = 0.1
    embed_dim: int = 32
    beta: float = 0.25
    mask_lo: float = 0.30
    mask_hi: float = 0.70
    masked_skip: bool = True
    bits: int = DEFAULT_BITS
    type_encoding: str = "IV"
    codebook_size: int = 128
    decay: float = 0.99
    epsilon: float = 1e-5
    batch_size: int = 512
    epochs: int = 500
    warmup_steps: int = 200
    peak_lr: float = 1e-3
    weight_decay: float = 0.01
    grad_clip: float = 1.0
    dead_code_threshold: float = 0.0
    max_layout_len: int = MAX_ROOMS
    max_polygon_len: int = MAX_VERTICES

    def __post_init__(self):
        if not 0.0 <= self.mask_lo <= self.mask_hi <= 1.0:
            raise ConfigError(f"Mask range [{self.mask_lo}, {self.mask_hi}] must satisfy 0 <= lo <= hi <= 1")
        if self.beta <= 0:
            raise ConfigError("beta must be positive")
        if self.bits not in SUPPORTED_BITS:
            raise ConfigError(f"bits must be one of {SUPPORTED_BITS}")
        if self.d_model % self.heads != 0:
            raise ConfigError(f"d_model {self.d_model} is not divisible by {self.heads} heads")
        if self.codebook_size < 1:
            raise ConfigError("codebook_size must be positive")
        if self.epochs < 1 or self.batch_size < 1:
            raise ConfigError("epochs and batch_size must be positive")
        try:
            TypeEncoding(self.type_encoding)
        except ValueError as e:
            raise ConfigError(f"Unknown type_encoding {self.type_encoding!r}") from e

    def to_dict(self) -> Dict[str, Any]:
        return asdict(self)

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> "VQVAEConfig":
        known = {f.name for f in fields(cls)}
        unknown = set(data) - known
        if unknown:
            raise ConfigError(f"Unknown VQ-VAE settings: {sorted(unknown)}")
        return cls(**data)


def sample_mask(
    maskable: torch.Tensor,
    lo: float,
    hi: float,
    generator: Optional[torch.Generator] = None,
    ratio: Optional[float] = None,
) -> torch.Tensor:
    """
    Choose positions to mask per sequence.

    Each row draws r ~ U[lo, hi] (or uses `ratio`) and masks round(r * len) distinct
    maskable positions, rounding half up and masking at least one when lo > 0.
    """
    mask = torch.zeros_like(maskable)
    for row in range(maskable.shape[0]):
        candidates = torch.nonzero(maskable[row]).flatten()
        length = candidates.numel()
        if length == 0:
            continue
        r = ratio if ratio is not None else lo + (hi - lo) * float(torch.rand((), generator=generator))
        count = int(math.floor(r * length + 0.5))
        if lo > 0 and ratio is None:
            count = max(count, 1)
        count = min(count, length)
        if count == 0:
            continue
        chosen = candidates[torch.randperm(length, generator=generator)[:count].to(candidates.device)]
        mask[row, chosen] = True
    return mask


def apply_mask(
    batch: TokenBatch,
    mask_embedding: torch.Tensor,
    lo: float,
    hi: float,
    generator: Optional[torch.Generator] = None,
    ratio: Optional[float] = None,
) -> Tuple[torch.Tensor, torch.Tensor]:
    """
    Replace a random share of tokens with the learned mask embedding.

    The positional term is added back on masked positions.

    Returns:
        (masked tokens, boolean mask)
    """
    mask = sample_mask(batch.maskable, lo, hi, generator, ratio)
    replacement = mask_embedding + batch.positional
    masked = torch.where(mask[..., None], replacement[None].expand_as(batch.tokens), batch.tokens)
    return masked, mask


class MaskedVQVAE(nn.Module):
    """
    Encoder, mean pooling, codebook and a decoder that rebuilds masked tokens.

    The quantized code is the decoder's single memory token for cross-attention.
    """

    def __init__(self, config: VQVAEConfig, level: Level, num_types: int):
        super().__init__()
        self.config = config
        self.level = Level(level)
        self.num_types = num_types

        if self.level is Level.LAYOUT:
            self.tokenizer = LayoutTokenizer(
                config.bits, num_types, config.embed_dim, config.d_model, config.max_layout_len
            )
            self.max_len = config.max_layout_len
        else:
            self.tokenizer = PolygonTokenizer(
                config.bits,
                num_types,
                config.embed_dim,
                config.d_model,
                config.max_polygon_len,
                TypeEncoding(config.type_encoding),
            )
            self.max_len = config.max_polygon_len

        encoder_layer = nn.TransformerEncoderLayer(
            config.d_model, config.heads, config.d_ff, config.dropout, activation="gelu", batch_first=True
        )
        self.encoder = nn.TransformerEncoder(encoder_layer, config.layers, enable_nested_tensor=False)
        decoder_layer = nn.TransformerDecoderLayer(
            config.d_model, config.heads, config.d_ff, config.dropout, activation="gelu", batch_first=True
        )
        self.decoder = nn.TransformerDecoder(decoder_layer, config.layers)
        self.mask_embedding = nn.Parameter(torch.randn(config.d_model) * 0.02)
        self.heads = nn.ModuleList(nn.Linear(config.d_model, size) for size in self.tokenizer.field_sizes)
        self.codebook = Codebook(config.codebook_size, config.d_model, config.decay, config.epsilon)

    def tokenize(self, fields: torch.Tensor, lengths: torch.Tensor) -> TokenBatch:
        return self.tokenizer(fields, lengths)

    def encode_sequence(self, batch: TokenBatch) -> torch.Tensor:
        """Per-position encoder features [N, T, d_model]."""
        if batch.tokens.shape[1] == 0 or bool(batch.padding.all(dim=1).any()):
            raise ShapeError("Cannot encode an empty token sequence")
        return self.encoder(batch.tokens, src_key_padding_mask=batch.padding)

    def encode_pool(self, batch: TokenBatch) -> torch.Tensor:
        """Mean of encoder outputs over valid positions, [N, d_model]."""
        hidden = self.encode_sequence(batch)
        keep = (~batch.padding).to(hidden.dtype)[..., None]
        return (hidden * keep).sum(dim=1) / keep.sum(dim=1)

    def decode_masked(self, code: torch.Tensor, tokens: torch.Tensor, padding: torch.Tensor) -> List[torch.Tensor]:
        """
        Per-position, per-field categorical distributions.

        Args:
            code: [N, d_model] quantized codes
            tokens: [N, T, d_model] decoder input with masked positions replaced
            padding: [N, T] True at padding
        """
        if code.shape[-1] != tokens.shape[-1] or code.shape[0] != tokens.shape[0]:
            raise ShapeError(f"Code shape {tuple(code.shape)} does not match tokens {tuple(tokens.shape)}")
        hidden = self.decoder(tokens, code[:, None, :], tgt_key_padding_mask=padding)
        return [torch.softmax(head(hidden), dim=-1) for head in self.heads]

    def forward(
        self,
        fields: torch.Tensor,
        lengths: torch.Tensor,
        generator: Optional[torch.Generator] = None,
        mask_ratio: Optional[float] = None,
    ) -> Dict[str, Any]:
        batch = self.tokenize(fields, lengths)
        if self.config.masked_skip:
            # Masked tokens reach neither the encoder nor the decoder; only they are scored
            masked, positions = apply_mask(
                batch, self.mask_embedding, self.config.mask_lo, self.config.mask_hi, generator, mask_ratio
            )
            batch_in = replace(batch, tokens=masked)
        else:
            batch_in, positions = batch, batch.maskable

        features = self.encode_pool(batch_in)
        indices, codes = self.codebook.quantize(features.detach())
        straight_through = features + (codes - features).detach()

        return {
            "probs": self.decode_masked(straight_through, batch_in.tokens, batch.padding),
            "targets": batch.targets,
            "positions": positions,
            "features": features,
            "codes": codes,
            "indices": indices,
        }

    @torch.no_grad()
    def encode_features(self, samples: Sequence[np.ndarray], batch_size: int = 256) -> torch.Tensor:
        """Pooled features of samples in eval mode."""
        was_training = self.training
        self.eval()
        device = self.mask_embedding.device
        out = []
        try:
            for start in range(0, len(samples), batch_size):
                fields, lengths = collate(samples[start:start + batch_size], self.max_len)
                out.append(self.encode_pool(self.tokenize(fields.to(device), lengths.to(device))))
        finally:
            self.train(was_training)
        return torch.cat(out) if out else torch.zeros(0, self.config.d_model, device=device)

    @torch.no_grad()
    def encode_indices(self, samples: Sequence[np.ndarray], batch_size: int = 256) -> List[int]:
        """Codebook index of each sample."""
        features = self.encode_features(samples, batch_size)
        if features.shape[0] == 0:
            return []
        indices, _ = self.codebook.quantize(features)
        return [int(i) for i in indices]

    @torch.no_grad()
    def decode_code(self, index: int, length: int) -> np.ndarray:
        """
        Reconstruct a sequence of `length` positions from one codeword with every token masked.

        Returns:
            [length, F] argmax fields
        """
        if not 0 <= index < self.codebook.size:
            raise ShapeError(f"Code index {index} outside [0, {self.codebook.size})")
        was_training = self.training
        self.eval()
        try:
            prefix = 1 if getattr(self.tokenizer, "prefix_mlp", None) is not None else 0
            positional = self.tokenizer.tables.positional(length + prefix)
            tokens = (self.mask_embedding + positional)[None]
            padding = torch.zeros(1, length + prefix, dtype=torch.bool, device=tokens.device)
            code = self.codebook.entries[index][None]
            probs = self.decode_masked(code, tokens, padding)
        finally:
            self.train(was_training)
        fields = torch.stack([p[0].argmax(dim=-1) for p in probs], dim=-1)[prefix:]
        return fields.cpu().numpy()
