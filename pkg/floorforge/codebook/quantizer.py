"""Nearest-neighbour vector quantization with EMA codebook updates."""

from typing import Optional, Tuple

import torch
from torch import nn

from ..exceptions import ShapeError

DISTANCE_CHUNK = 4096


def vector_quantize(features: torch.Tensor, entries: torch.Tensor) -> Tuple[torch.Tensor, torch.Tensor]:
    """
    Snap each feature to its nearest codeword.

    Args:
        features: [N, d] or [d]
        entries: [K, d] codewords

    Returns:
        (indices, codewords); the lowest index wins ties

    Raises:
        ShapeError: If the codebook is empty or dimensions differ
    """
    if entries.ndim != 2 or entries.shape[0] == 0:
        raise ShapeError("Cannot quantize against an empty codebook")
    single = features.ndim == 1
    flat = features.reshape(1, -1) if single else features
    if flat.shape[-1] != entries.shape[1]:
        raise ShapeError(f"Feature dimension {flat.shape[-1]} != codeword dimension {entries.shape[1]}")

    indices = []
    for chunk in flat.split(DISTANCE_CHUNK):
        # Direct squared differences keep exact ties exact
        distances = ((chunk[:, None, :] - entries[None, :, :]) ** 2).sum(-1)
        indices.append(torch.argmin(distances, dim=1))
    index = torch.cat(indices) if indices else torch.zeros(0, dtype=torch.long, device=entries.device)
    codes = entries[index]
    if single:
        return index[0], codes[0]
    return index, codes


class Codebook(nn.Module):
    """K codewords with EMA count N_i and sum m_i accumulators."""

    def __init__(self, size: int, dim: int, decay: float = 0.99, epsilon: float = 1e-5):
        super().__init__()
        if size < 1:
            raise ShapeError("Codebook needs at least one entry")
        self.decay = decay
        self.epsilon = epsilon
        entries = torch.randn(size, dim) / dim ** 0.5
        self.register_buffer("entries", entries)
        self.register_buffer("ema_count", torch.ones(size))
        self.register_buffer("ema_sum", entries.clone())

    @property
    def size(self) -> int:
        return self.entries.shape[0]

    def quantize(self, features: torch.Tensor) -> Tuple[torch.Tensor, torch.Tensor]:
        return vector_quantize(features, self.entries)


@torch.no_grad()
def ema_update(cb: Codebook, indices: torch.Tensor, features: torch.Tensor) -> Codebook:
    """
    Move assigned codewords toward the moving average of their features.

    Entries without assignments keep their codeword; only their accumulators decay.
    """
    decay = cb.decay
    size = cb.size
    indices = indices.reshape(-1).long()
    features = features.reshape(-1, cb.entries.shape[1]).to(cb.entries.dtype)

    counts = torch.bincount(indices, minlength=size).to(cb.entries.dtype)
    sums = torch.zeros_like(cb.ema_sum).index_add_(0, indices, features)

    cb.ema_count.mul_(decay).add_(counts, alpha=1 - decay)
    cb.ema_sum.mul_(decay).add_(sums, alpha=1 - decay)

    total = cb.ema_count.sum()
    smoothed = (cb.ema_count + cb.epsilon) / (total + size * cb.epsilon) * total
    assigned = counts > 0
    cb.entries[assigned] = cb.ema_sum[assigned] / smoothed[assigned, None]
    return cb


@torch.no_grad()
def restart_dead_entries(
    cb: Codebook,
    features: torch.Tensor,
    threshold: float,
    generator: Optional[torch.Generator] = None,
) -> int:
    """Re-seed entries whose EMA count fell below threshold from random features."""
    if threshold <= 0 or features.numel() == 0:
        return 0
    dead = torch.nonzero(cb.ema_count < threshold).flatten()
    if dead.numel() == 0:
        return 0
    picks = torch.randint(features.shape[0], (dead.numel(),), generator=generator)
    cb.entries[dead] = features[picks].to(cb.entries.dtype)
    cb.ema_sum[dead] = cb.entries[dead]
    cb.ema_count[dead] = 1.0
    return int(dead.numel())
