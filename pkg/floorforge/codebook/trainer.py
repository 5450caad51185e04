"""
Codebook training loop and checkpoints.
"""

import logging
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Dict, List, Optional, Sequence, Tuple, Union

import numpy as np
import torch
from tqdm import tqdm

from ..core.models import DEFAULT_ROOM_TYPES, Floorplan
from ..exceptions import ConfigError, DivergenceError, ShapeError
from ..exporters import StatsExporter
from ..utils import set_seed, torch_generator
from .embedding import collate, layout_samples, polygon_samples
from .losses import vqvae_loss
from .model import Level, MaskedVQVAE, VQVAEConfig
from .quantizer import ema_update, restart_dead_entries

logger = logging.getLogger("floorforge.codebook.trainer")

CHECKPOINT_KIND = "codebook"


@dataclass
class CodebookStats:
    """Per-epoch training records."""
    records: List[Dict[str, Any]] = field(default_factory=list)

    def add(self, **record: Any) -> None:
        self.records.append(record)

    def losses(self) -> List[float]:
        return [r["loss"] for r in self.records]

    def write_csv(self, path: Union[str, Path]) -> None:
        StatsExporter.export(StatsExporter.format_data(self.records), "csv", path)


def build_samples(level: Level, plans: Sequence[Floorplan]) -> List[np.ndarray]:
    """Training samples of one level: layouts, or every room polygon plus each boundary."""
    if Level(level) is Level.LAYOUT:
        return layout_samples(plans)
    num_types = len(plans[0].room_types) if plans else len(DEFAULT_ROOM_TYPES)
    return polygon_samples(plans, boundary_label=num_types)


def warmup_schedule(warmup_steps: int):
    """Linear warm-up to the peak rate, then constant."""
    def factor(step: int) -> float:
        if warmup_steps <= 0:
            return 1.0
        return min(1.0, (step + 1) / warmup_steps)
    return factor


def train_codebook(
    level: Union[Level, str],
    plans: Sequence[Floorplan],
    config: VQVAEConfig,
    seed: int = 0,
    progress: bool = False,
    device: Union[str, torch.device] = "cpu",
) -> Tuple[MaskedVQVAE, CodebookStats]:
    """
    Train one masked VQ-VAE with EMA codebook updates.

    Args:
        level: "layout" or "polygon"
        plans: Training plans
        config: Model and optimisation settings
        seed: Seeds weights, shuffling, masking and dropout
        progress: Show a progress bar over epochs
        device: Torch device

    Returns:
        The trained model in eval mode and its per-epoch stats

    Raises:
        ShapeError: If there is nothing to train on
        DivergenceError: If the loss becomes non-finite
    """
    level = Level(level)
    if not plans:
        raise ShapeError("Cannot train a codebook on an empty training split")
    room_types = plans[0].room_types
    if config.bits != plans[0].grid_bits:
        raise ConfigError(f"Config uses {config.bits}-bit grids but the data is {plans[0].grid_bits}-bit")

    set_seed(seed)
    generator = torch_generator(seed)
    samples = build_samples(level, plans)
    model = MaskedVQVAE(config, level, len(room_types)).to(device)
    optimizer = torch.optim.AdamW(model.parameters(), lr=config.peak_lr, weight_decay=config.weight_decay)
    scheduler = torch.optim.lr_scheduler.LambdaLR(optimizer, warmup_schedule(config.warmup_steps))

    stats = CodebookStats()
    step = 0
    logger.info(f"Training {level.value} codebook on {len(samples)} samples (K={config.codebook_size}, seed {seed})")

    for epoch in tqdm(range(1, config.epochs + 1), desc=f"{level.value} codebook", disable=not progress):
        model.train()
        order = torch.randperm(len(samples), generator=generator).tolist()
        used = torch.zeros(config.codebook_size, dtype=torch.bool, device=device)
        totals = {"loss": 0.0, "reconstruction": 0.0, "commitment": 0.0}
        batches = 0
        last_features = None

        for start in range(0, len(order), config.batch_size):
            batch = [samples[i] for i in order[start:start + config.batch_size]]
            fields, lengths = collate(batch, model.max_len)
            out = model(fields.to(device), lengths.to(device), generator=generator)
            loss = vqvae_loss(
                out["probs"], out["targets"], out["positions"], out["features"], out["codes"], config.beta
            )
            components = loss.components()
            if not all(math.isfinite(v) for v in components.values()):
                raise DivergenceError(epoch, step, components)

            optimizer.zero_grad()
            loss.total.backward()
            if config.grad_clip > 0:
                torch.nn.utils.clip_grad_norm_(model.parameters(), config.grad_clip)
            optimizer.step()
            scheduler.step()
            step += 1

            ema_update(model.codebook, out["indices"], out["features"].detach())
            used[out["indices"]] = True
            last_features = out["features"].detach()
            for key in totals:
                totals[key] += components[key]
            batches += 1

        restarted = 0
        if last_features is not None:
            restarted = restart_dead_entries(model.codebook, last_features, config.dead_code_threshold, generator)

        record = {"epoch": epoch}
        record.update({k: v / max(batches, 1) for k, v in totals.items()})
        record.update(
            utilization=float(used.float().mean()),
            lr=float(scheduler.get_last_lr()[0]),
            restarted=restarted,
        )
        stats.add(**record)
        logger.info(
            f"{level.value} epoch {epoch}: loss={record['loss']:.4f} "
            f"recon={record['reconstruction']:.4f} commit={record['commitment']:.4f} "
            f"util={record['utilization']:.3f} lr={record['lr']:.2e}"
        )

    model.eval()
    return model, stats


def save_codebook(
    model: MaskedVQVAE,
    path: Union[str, Path],
    room_types: Sequence[str],
    seed: int,
    stats: Optional[CodebookStats] = None,
) -> Path:
    """Write a self-describing codebook checkpoint."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    torch.save(
        {
            "kind": CHECKPOINT_KIND,
            "level": model.level.value,
            "config": model.config.to_dict(),
            "room_types": list(room_types),
            "state_dict": model.state_dict(),
            "seed": seed,
            "history": stats.records if stats else [],
        },
        path,
    )
    logger.info(f"Saved {model.level.value} codebook to {path}")
    return path


def codebook_from_archive(archive: Dict[str, Any]) -> Tuple[MaskedVQVAE, Dict[str, Any]]:
    """Rebuild a model from a loaded checkpoint dictionary."""
    if archive.get("kind") != CHECKPOINT_KIND:
        raise ConfigError(f"Not a codebook checkpoint (kind={archive.get('kind')!r})")
    config = VQVAEConfig.from_dict(archive["config"])
    model = MaskedVQVAE(config, Level(archive["level"]), len(archive["room_types"]))
    model.load_state_dict(archive["state_dict"])
    model.eval()
    meta = {k: archive[k] for k in ("level", "room_types", "seed", "history")}
    return model, meta


def load_codebook(path: Union[str, Path], device: Union[str, torch.device] = "cpu") -> Tuple[MaskedVQVAE, Dict[str, Any]]:
    """
    Load a codebook checkpoint.

    Raises:
        FileNotFoundError: If the checkpoint does not exist
        ConfigError: If the file is not a codebook checkpoint
    """
    path = Path(path)
    if not path.exists():
        raise FileNotFoundError(f"Codebook checkpoint not found: {path}")
    archive = torch.load(path, map_location=device, weights_only=True)
    model, meta = codebook_from_archive(archive)
    return model.to(device), meta
