"""
Teacher-forced generator training and checkpoints.
"""

import logging
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Dict, List, Optional, Sequence, Tuple, Union

import numpy as np
import torch
from tqdm import tqdm

from ..codebook.embedding import collate, polygon_fields
from ..codebook.model import Level, MaskedVQVAE, VQVAEConfig
from ..codebook.trainer import CodebookStats, warmup_schedule
from ..core.models import Floorplan
from ..exceptions import ConfigError, DivergenceError, ShapeError
from ..utils import set_seed, torch_generator
from .codetree import (
    CodeTreeGrammar,
    PolygonGrammar,
    TypedPolygonGrammar,
    build_supervision_codetrees,
    polygon_stream,
    room_indices,
    typed_polygon_stream,
)
from .losses import IGNORE, GeneratorLoss, generator_loss, loss_classes
from .model import FloorplanGenerator, GenConfig
from .vocab import PAD, TokenClass, Vocabulary, build_vocab

logger = logging.getLogger("floorforge.generator.trainer")

CHECKPOINT_KIND = "generator"


class GeneratorStats(CodebookStats):
    """Per-epoch generator records (loss, code, pos, type, val_loss, lr)."""


@dataclass
class GeneratorExample:
    """One supervision sample: boundary rows, CodeTree tokens and polygon stream."""
    boundary: np.ndarray
    codetree: List[int]
    polygons: List[int]


def build_examples(
    plans: Sequence[Floorplan],
    layout_model: MaskedVQVAE,
    polygon_model: MaskedVQVAE,
    vocab: Vocabulary,
    config: GenConfig,
) -> Tuple[List[GeneratorExample], int]:
    """
    Turn plans into supervision samples, rejecting those over any cap.

    The no_codetree variant gets an empty CodeTree and a typed polygon stream.

    Returns:
        (examples, number of rejected plans)
    """
    fmt = config.codetree_format
    if fmt is None:
        pairs, rejected = [(fp, None) for fp in plans], 0
    else:
        pairs, rejected = build_supervision_codetrees(plans, layout_model, polygon_model, config.max_codetree, fmt)
    examples = []
    for fp, tree in pairs:
        if tree is None:
            stream = typed_polygon_stream(fp.rooms, vocab)
        else:
            stream = polygon_stream([room.polygon for room in fp.rooms], vocab)
        longest = max((len(room.polygon) for room in fp.rooms), default=0)
        if len(fp.rooms) > config.max_rooms or longest > config.max_vertices or len(stream) > config.max_polygon_tokens:
            logger.warning(
                f"Rejecting plan with {len(fp.rooms)} rooms, {longest} max vertices and "
                f"{len(stream)} polygon tokens"
            )
            rejected += 1
            continue
        examples.append(
            GeneratorExample(
                boundary=polygon_fields(fp.boundary, len(fp.room_types)),
                codetree=tree.to_tokens(vocab, fmt) if tree is not None else [],
                polygons=stream,
            )
        )
    return examples, rejected


def _pad(sequences: Sequence[Sequence[int]], value: int = PAD) -> torch.Tensor:
    width = max(len(s) for s in sequences)
    out = torch.full((len(sequences), width), value, dtype=torch.long)
    for i, s in enumerate(sequences):
        out[i, : len(s)] = torch.tensor(list(s), dtype=torch.long)
    return out


def _pad_masks(masks: Sequence[torch.Tensor], width: int, size: int) -> torch.Tensor:
    out = torch.ones(len(masks), width, size, dtype=torch.bool)
    for i, m in enumerate(masks):
        out[i, : m.shape[0]] = m
    return out


def collate_examples(
    examples: Sequence[GeneratorExample], vocab: Vocabulary, config: GenConfig, boundary_cap: int
) -> Dict[str, torch.Tensor]:
    """
    Teacher-forcing tensors for a batch; the boundary-code target is excluded from the loss.

    The CodeTree tensors are left out for the no_codetree variant.
    """
    fmt = config.codetree_format
    fields, lengths = collate([e.boundary for e in examples], boundary_cap)
    polygons = _pad([e.polygons for e in examples])
    pg_targets = polygons[:, 1:]

    if fmt is None:
        typed = TypedPolygonGrammar(vocab, config.max_rooms, config.max_polygon_tokens, config.max_vertices)
        pg_masks = [typed.sequence_masks(e.polygons) for e in examples]
    else:
        pg_masks = []
        for e in examples:
            grammar = PolygonGrammar(
                vocab, fmt.num_rooms(len(e.codetree)), config.max_polygon_tokens, config.max_vertices
            )
            pg_masks.append(grammar.sequence_masks(e.polygons))

    batch = {
        "fields": fields,
        "lengths": lengths,
        "pg_inputs": polygons[:, :-1],
        "pg_padding": polygons[:, :-1] == PAD,
        "pg_rooms": _pad([room_indices(e.polygons[:-1], config.max_rooms) for e in examples], 0),
        "pg_targets": pg_targets,
        "pg_classes": loss_classes(pg_targets, vocab, TokenClass.POS),
        "pg_allowed": _pad_masks(pg_masks, pg_targets.shape[1], vocab.size),
    }
    if fmt is None:
        return batch

    codetree = _pad([e.codetree for e in examples])
    ct_targets = codetree[:, 1:]
    ct_classes = loss_classes(ct_targets, vocab, TokenClass.CODE)
    if fmt.boundary_index is not None:
        ct_classes[:, fmt.boundary_index - 1] = IGNORE
    ct_grammar = CodeTreeGrammar(vocab, config.max_codetree, config.max_rooms, fmt)
    ct_masks = [ct_grammar.sequence_masks(e.codetree) for e in examples]
    batch.update(
        {
            "codetree": codetree,
            "codetree_padding": codetree == PAD,
            "ct_inputs": codetree[:, :-1],
            "ct_padding": codetree[:, :-1] == PAD,
            "ct_targets": ct_targets,
            "ct_classes": ct_classes,
            "ct_allowed": _pad_masks(ct_masks, ct_targets.shape[1], vocab.size),
        }
    )
    return batch


def teacher_forced_loss(model: FloorplanGenerator, batch: Dict[str, torch.Tensor]) -> GeneratorLoss:
    device = next(model.parameters()).device
    b = {k: v.to(device) for k, v in batch.items()}
    _, memory, memory_padding = model.encode_boundary(b["fields"], b["lengths"])
    if "codetree" not in b:
        pg_logits = model.polygon_logits(memory, memory_padding, b["pg_inputs"], b["pg_rooms"], b["pg_padding"])
        return generator_loss(
            [pg_logits], [b["pg_targets"]], [b["pg_classes"]], model.config.weights, [b["pg_allowed"]]
        )
    ct_logits = model.codetree_logits(memory, memory_padding, b["ct_inputs"], b["ct_padding"])
    combined, combined_padding = model.polygon_memory(memory, memory_padding, b["codetree"], b["codetree_padding"])
    pg_logits = model.polygon_logits(combined, combined_padding, b["pg_inputs"], b["pg_rooms"], b["pg_padding"])
    return generator_loss(
        [ct_logits, pg_logits],
        [b["ct_targets"], b["pg_targets"]],
        [b["ct_classes"], b["pg_classes"]],
        model.config.weights,
        [b["ct_allowed"], b["pg_allowed"]],
    )


@torch.no_grad()
def evaluate_loss(model: FloorplanGenerator, examples: Sequence[GeneratorExample]) -> Dict[str, float]:
    """Mean teacher-forced loss components over examples in eval mode."""
    was_training = model.training
    model.eval()
    totals: Dict[str, float] = {}
    batches = 0
    try:
        for start in range(0, len(examples), model.config.batch_size):
            chunk = examples[start:start + model.config.batch_size]
            batch = collate_examples(chunk, model.vocab, model.config, model.polygon_model.max_len)
            for key, value in teacher_forced_loss(model, batch).components().items():
                totals[key] = totals.get(key, 0.0) + value
            batches += 1
    finally:
        model.train(was_training)
    return {k: v / max(batches, 1) for k, v in totals.items()}


def train_generator(
    plans: Sequence[Floorplan],
    layout_model: MaskedVQVAE,
    polygon_model: MaskedVQVAE,
    config: GenConfig,
    seed: int = 0,
    progress: bool = False,
    val_plans: Optional[Sequence[Floorplan]] = None,
    device: Union[str, torch.device] = "cpu",
) -> Tuple[FloorplanGenerator, GeneratorStats]:
    """
    Teacher-forced training of the boundary encoder and both decoders.

    The codebooks stay frozen; supervision CodeTrees are built once up front.

    Raises:
        ShapeError: If no plan survives the caps
        DivergenceError: If the loss becomes non-finite
    """
    if not plans:
        raise ShapeError("Cannot train the generator on an empty training split")
    if layout_model.level is not Level.LAYOUT or polygon_model.level is not Level.POLYGON:
        raise ConfigError("Expected a layout codebook and a polygon codebook")
    room_types = plans[0].room_types

    set_seed(seed)
    generator = torch_generator(seed)
    layout_model = layout_model.to(device).eval()
    polygon_model = polygon_model.to(device).eval()
    vocab = build_vocab(plans[0].grid_bits, len(room_types), layout_model.codebook.size, polygon_model.codebook.size)

    examples, rejected = build_examples(plans, layout_model, polygon_model, vocab, config)
    if not examples:
        raise ShapeError(f"All {len(plans)} training plans were rejected by the caps")
    val_examples: List[GeneratorExample] = []
    if val_plans:
        val_examples, _ = build_examples(val_plans, layout_model, polygon_model, vocab, config)
    logger.info(
        f"Training {config.variant} generator on {len(examples)} plans ({rejected} rejected), "
        f"vocabulary {vocab.size}, seed {seed}"
    )

    model = FloorplanGenerator(config, vocab, polygon_model).to(device)
    trainable = [p for p in model.parameters() if p.requires_grad]
    optimizer = torch.optim.AdamW(trainable, lr=config.peak_lr, weight_decay=config.weight_decay)
    scheduler = torch.optim.lr_scheduler.LambdaLR(optimizer, warmup_schedule(config.warmup_steps))

    stats = GeneratorStats()
    step = 0
    for epoch in tqdm(range(1, config.epochs + 1), desc="generator", disable=not progress):
        model.train()
        order = torch.randperm(len(examples), generator=generator).tolist()
        totals = {"loss": 0.0, "code": 0.0, "pos": 0.0, "type": 0.0}
        batches = 0
        for start in range(0, len(order), config.batch_size):
            chunk = [examples[i] for i in order[start:start + config.batch_size]]
            batch = collate_examples(chunk, vocab, config, polygon_model.max_len)
            loss = teacher_forced_loss(model, batch)
            components = loss.components()
            if not all(math.isfinite(v) for v in components.values()):
                raise DivergenceError(epoch, step, components)

            optimizer.zero_grad()
            loss.total.backward()
            if config.grad_clip > 0:
                torch.nn.utils.clip_grad_norm_(trainable, config.grad_clip)
            optimizer.step()
            scheduler.step()
            step += 1
            for key in totals:
                totals[key] += components[key]
            batches += 1

        record: Dict[str, Any] = {"epoch": epoch}
        record.update({k: v / max(batches, 1) for k, v in totals.items()})
        if val_examples:
            record["val_loss"] = evaluate_loss(model, val_examples)["loss"]
        record["lr"] = float(scheduler.get_last_lr()[0])
        stats.add(**record)
        val_text = f" val={record['val_loss']:.4f}" if "val_loss" in record else ""
        logger.info(
            f"generator epoch {epoch}: loss={record['loss']:.4f} code={record['code']:.4f} "
            f"pos={record['pos']:.4f} type={record['type']:.4f}{val_text} lr={record['lr']:.2e}"
        )

    model.eval()
    return model, stats


def save_generator(
    model: FloorplanGenerator,
    path: Union[str, Path],
    room_types: Sequence[str],
    seed: int,
    stats: Optional[GeneratorStats] = None,
) -> Path:
    """Write a generator checkpoint that embeds the frozen polygon codebook."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    torch.save(
        {
            "kind": CHECKPOINT_KIND,
            "config": model.config.to_dict(),
            "vocab": model.vocab.to_dict(),
            "polygon_config": model.polygon_model.config.to_dict(),
            "room_types": list(room_types),
            "state_dict": model.state_dict(),
            "seed": seed,
            "history": stats.records if stats else [],
        },
        path,
    )
    logger.info(f"Saved generator to {path}")
    return path


def load_generator(
    path: Union[str, Path], device: Union[str, torch.device] = "cpu"
) -> Tuple[FloorplanGenerator, Dict[str, Any]]:
    """
    Load a generator checkpoint.

    Raises:
        FileNotFoundError: If the checkpoint does not exist
        ConfigError: If the file is not a generator checkpoint
    """
    path = Path(path)
    if not path.exists():
        raise FileNotFoundError(f"Generator checkpoint not found: {path}")
    archive = torch.load(path, map_location=device, weights_only=True)
    if archive.get("kind") != CHECKPOINT_KIND:
        raise ConfigError(f"Not a generator checkpoint (kind={archive.get('kind')!r})")
    room_types = archive["room_types"]
    polygon_model = MaskedVQVAE(VQVAEConfig.from_dict(archive["polygon_config"]), Level.POLYGON, len(room_types))
    model = FloorplanGenerator(GenConfig.from_dict(archive["config"]), Vocabulary.from_dict(archive["vocab"]), polygon_model)
    model.load_state_dict(archive["state_dict"])
    model.to(device).eval()
    meta = {k: archive[k] for k in ("room_types", "seed", "history")}
    return model, meta
