"""Squared earth mover's distance and the masked VQ-VAE objective."""

from dataclasses import dataclass
from typing import Dict, Sequence

import torch
import torch.nn.functional as F

from ..exceptions import ShapeError


def emd_loss(pred: torch.Tensor, target: torch.Tensor) -> torch.Tensor:
    """
    Squared EMD over ordered bins: mean over c of (cumsum(p)_c - cumsum(q)_c)^2.

    Reduces the last dimension only, so batched inputs give one value per distribution.

    Raises:
        ShapeError: If the shapes differ
    """
    if pred.shape != target.shape:
        raise ShapeError(f"Distribution shapes differ: {tuple(pred.shape)} vs {tuple(target.shape)}")
    diff = torch.cumsum(pred, dim=-1) - torch.cumsum(target.to(pred.dtype), dim=-1)
    return (diff ** 2).mean(dim=-1)


@dataclass
class VQVAELoss:
    total: torch.Tensor
    reconstruction: torch.Tensor
    commitment: torch.Tensor

    def components(self) -> Dict[str, float]:
        return {
            "loss": float(self.total.detach()),
            "reconstruction": float(self.reconstruction.detach()),
            "commitment": float(self.commitment.detach()),
        }


def reconstruction_loss(
    probs: Sequence[torch.Tensor], targets: torch.Tensor, positions: torch.Tensor
) -> torch.Tensor:
    """
    Sum of per-field EMD over selected positions, averaged over the batch.

    Args:
        probs: One [N, T, C_f] distribution tensor per field
        targets: [N, T, F] bin indices
        positions: [N, T] boolean selection
    """
    if len(probs) != targets.shape[-1]:
        raise ShapeError(f"{len(probs)} field heads for {targets.shape[-1]} target fields")
    total = probs[0].new_zeros(())
    weights = positions.to(probs[0].dtype)
    for f, p in enumerate(probs):
        onehot = F.one_hot(targets[..., f].clamp(0, p.shape[-1] - 1), p.shape[-1])
        total = total + (emd_loss(p, onehot) * weights).sum()
    return total / max(targets.shape[0], 1)


def vqvae_loss(
    probs: Sequence[torch.Tensor],
    targets: torch.Tensor,
    positions: torch.Tensor,
    features: torch.Tensor,
    codes: torch.Tensor,
    beta: float,
) -> VQVAELoss:
    """
    Masked reconstruction plus commitment beta * ||E - sg[d]||^2.

    Codewords move by EMA, so no codebook term takes a gradient here.
    """
    reconstruction = reconstruction_loss(probs, targets, positions)
    commitment = beta * ((features - codes.detach()) ** 2).sum(dim=-1).mean()
    return VQVAELoss(total=reconstruction + commitment, reconstruction=reconstruction, commitment=commitment)
