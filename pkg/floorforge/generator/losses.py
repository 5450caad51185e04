"""Per-class cross-entropy objective of the generator."""

from dataclasses import dataclass
from typing import Dict, Optional, Sequence

import torch
import torch.nn.functional as F

from ..exceptions import ShapeError
from .vocab import PAD, TokenClass, Vocabulary

IGNORE = -1


@dataclass
class GeneratorLoss:
    total: torch.Tensor
    code: torch.Tensor
    pos: torch.Tensor
    type: torch.Tensor

    def components(self) -> Dict[str, float]:
        return {
            "loss": float(self.total.detach()),
            "code": float(self.code.detach()),
            "pos": float(self.pos.detach()),
            "type": float(self.type.detach()),
        }


def loss_classes(targets: torch.Tensor, vocab: Vocabulary, special_class: TokenClass) -> torch.Tensor:
    """
    Loss class per target token; specials count as `special_class`, PAD as ignored.
    """
    classes = torch.full_like(targets, int(TokenClass.CODE))
    classes[(targets >= vocab.pos_start) & (targets < vocab.type_start)] = int(TokenClass.POS)
    classes[(targets >= vocab.type_start) & (targets < vocab.layout_start)] = int(TokenClass.TYPE)
    classes[targets < vocab.pos_start] = int(special_class)
    classes[targets == PAD] = IGNORE
    return classes


def weighted_class_loss(
    nll: torch.Tensor, classes: torch.Tensor, weights: Sequence[float] = (1.0, 1.0, 1.0)
) -> GeneratorLoss:
    """
    Mean negative log-likelihood per class, combined as w1 L_code + w2 L_pos + w3 L_type.

    A class with no steps contributes 0.
    """
    if nll.shape != classes.shape:
        raise ShapeError(f"Per-step losses {tuple(nll.shape)} and classes {tuple(classes.shape)} differ")
    means = []
    for token_class in (TokenClass.CODE, TokenClass.POS, TokenClass.TYPE):
        selected = classes == int(token_class)
        if bool(selected.any()):
            means.append(nll[selected].mean())
        else:
            means.append(nll.new_zeros(()))
    code, pos, type_ = means
    total = weights[0] * code + weights[1] * pos + weights[2] * type_
    return GeneratorLoss(total=total, code=code, pos=pos, type=type_)


def step_nll(
    logits: torch.Tensor, targets: torch.Tensor, allowed: Optional[torch.Tensor] = None
) -> torch.Tensor:
    """Per-step -log p(target), optionally renormalized over the legal tokens."""
    if logits.shape[:-1] != targets.shape:
        raise ShapeError(f"Logits {tuple(logits.shape)} do not align with targets {tuple(targets.shape)}")
    if allowed is not None:
        logits = logits.masked_fill(~allowed, torch.finfo(logits.dtype).min)
    flat = F.cross_entropy(logits.reshape(-1, logits.shape[-1]), targets.reshape(-1).clamp(min=0), reduction="none")
    return flat.reshape(targets.shape)


def generator_loss(
    logits: Sequence[torch.Tensor],
    targets: Sequence[torch.Tensor],
    classes: Sequence[torch.Tensor],
    weights: Sequence[float] = (1.0, 1.0, 1.0),
    allowed: Optional[Sequence[Optional[torch.Tensor]]] = None,
) -> GeneratorLoss:
    """
    Combine the token streams of both decoders into the three-part objective.

    Args:
        logits: Per-stream logits [N, T, V]
        targets: Per-stream target ids [N, T]
        classes: Per-stream loss classes from loss_classes, IGNORE where excluded
        weights: (w_code, w_pos, w_type)
        allowed: Optional per-stream grammar masks [N, T, V]
    """
    allowed = allowed or [None] * len(logits)
    nll = torch.cat([step_nll(l, t, a).reshape(-1) for l, t, a in zip(logits, targets, allowed)])
    flat_classes = torch.cat([c.reshape(-1) for c in classes])
    return weighted_class_loss(nll, flat_classes, weights)
