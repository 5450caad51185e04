"""
Nucleus sampling, grammar-constrained decoding and end-to-end generation.
"""

import logging
from dataclasses import dataclass, field
from typing import List, Optional, Sequence, Tuple

import torch

from ..codebook.embedding import collate, polygon_fields
from ..core.floorplan import order_rooms, validate
from ..core.geometry import orient_clockwise, rotate_to_min_vertex
from ..core.models import LIVING_LABEL, Floorplan, Room, RoomPolygon, ValidationReport, Vertex
from ..exceptions import ConfigError, DomainError, GeometryError
from ..utils import torch_generator
from .codetree import (
    CodeTree,
    CodeTreeGrammar,
    PolygonGrammar,
    TypedPolygonGrammar,
    parse_polygon_stream,
    parse_typed_polygon_stream,
    room_indices,
)
from .model import FloorplanGenerator
from .vocab import BOS, EOS, SEP_SECTION

logger = logging.getLogger("floorforge.generator.sampling")

NUCLEUS_TOLERANCE = 1e-12


def nucleus(dist: torch.Tensor, p: float) -> Tuple[torch.Tensor, torch.Tensor]:
    """
    Smallest descending-probability prefix with mass >= p, ties by token id.

    Returns:
        (token ids, renormalized probabilities)
    """
    if not 0.0 < p <= 1.0:
        raise DomainError(f"top-p must be in (0, 1], got {p}")
    probs = dist.detach().to(torch.float64).flatten()
    ordered, ids = torch.sort(probs, descending=True, stable=True)
    cumulative = torch.cumsum(ordered, dim=0)
    reached = torch.nonzero(cumulative >= p - NUCLEUS_TOLERANCE).flatten()
    keep = int(reached[0]) + 1 if reached.numel() else probs.numel()
    kept = ordered[:keep]
    return ids[:keep], kept / kept.sum()


def top_p_sample(dist: torch.Tensor, p: float, generator: Optional[torch.Generator] = None) -> int:
    """Sample a token id from the nucleus of `dist`."""
    ids, probs = nucleus(dist, p)
    if ids.numel() == 1:
        return int(ids[0])
    choice = torch.multinomial(probs, 1, generator=generator)
    return int(ids[choice[0]])


def _masked_distribution(logits: torch.Tensor, allowed: torch.Tensor) -> torch.Tensor:
    masked = logits.to(torch.float64).masked_fill(~allowed.to(logits.device), float("-inf"))
    return torch.softmax(masked, dim=-1)


@torch.no_grad()
def codetree_next(
    model: FloorplanGenerator,
    memory: torch.Tensor,
    memory_padding: torch.Tensor,
    prefix: Sequence[int],
    grammar: CodeTreeGrammar,
) -> torch.Tensor:
    """
    Grammar-masked next-token distribution [V] of the CodeTree stream.

    Raises:
        GenerationError: If the prefix is illegal
    """
    allowed = grammar.allowed(prefix)
    tokens = torch.tensor([list(prefix)], dtype=torch.long, device=memory.device)
    logits = model.codetree_logits(memory, memory_padding, tokens)[0, -1]
    return _masked_distribution(logits, allowed).cpu()


@torch.no_grad()
def sample_codetree(
    model: FloorplanGenerator,
    memory: torch.Tensor,
    memory_padding: torch.Tensor,
    boundary_code: int,
    p: float,
    generator: Optional[torch.Generator] = None,
) -> Tuple[CodeTree, List[int]]:
    """
    Sample a CodeTree; the boundary code is given, not sampled.

    Variants without polygon codes ignore `boundary_code`.

    Returns:
        The tree and its token sequence

    Raises:
        ConfigError: If the model writes no CodeTree
    """
    config = model.config
    vocab = model.vocab
    fmt = config.codetree_format
    if fmt is None:
        raise ConfigError(f"The {config.variant} generator samples no CodeTree")
    grammar = CodeTreeGrammar(vocab, config.max_codetree, config.max_rooms, fmt)
    tokens = [BOS]
    while len(tokens) < config.max_codetree:
        if len(tokens) == fmt.boundary_index:
            tokens.append(vocab.polygon_token(boundary_code))
            continue
        dist = codetree_next(model, memory, memory_padding, tokens, grammar)
        tokens.append(top_p_sample(dist, p, generator))
        if tokens[-1] == EOS:
            return CodeTree.from_tokens(tokens, vocab, fmt=fmt), tokens

    # Cap reached without EOS: keep complete room entries only
    complete = fmt.header + fmt.entry * ((len(tokens) - fmt.header) // fmt.entry)
    tokens = tokens[:complete] + [EOS]
    logger.warning("CodeTree reached the length cap without EOS; truncated")
    return CodeTree.from_tokens(tokens, vocab, truncated=True, fmt=fmt), tokens


@dataclass
class PolygonDecodeResult:
    rooms: List[Tuple[int, List[Vertex]]]
    tokens: List[int]
    truncated: bool = False


@torch.no_grad()
def decode_polygons(
    model: FloorplanGenerator,
    codetree_tokens: Sequence[int],
    memory: torch.Tensor,
    memory_padding: torch.Tensor,
    p: float,
    generator: Optional[torch.Generator] = None,
) -> PolygonDecodeResult:
    """
    Emit room vertices corner by corner for every room of a CodeTree.

    Rooms beyond what the token budget can hold are dropped and the result is
    flagged truncated.
    """
    config = model.config
    vocab = model.vocab
    tree = CodeTree.from_tokens(codetree_tokens, vocab, fmt=config.codetree_format)
    types = [type_id for type_id, _ in tree.rooms]
    truncated = False
    capacity = PolygonGrammar.room_capacity(config.max_polygon_tokens)
    if len(types) > capacity:
        logger.warning(f"{len(types)} rooms exceed the polygon budget; keeping {capacity}")
        types = types[:capacity]
        truncated = True
    if not types:
        return PolygonDecodeResult(rooms=[], tokens=[SEP_SECTION, EOS], truncated=truncated)

    grammar = PolygonGrammar(vocab, len(types), config.max_polygon_tokens, config.max_vertices)
    codetree = torch.tensor([list(codetree_tokens)], dtype=torch.long, device=memory.device)
    combined, combined_padding = model.polygon_memory(memory, memory_padding, codetree)

    tokens = [SEP_SECTION]
    while len(tokens) < config.max_polygon_tokens:
        allowed = grammar.allowed(tokens)
        x = torch.tensor([tokens], dtype=torch.long, device=memory.device)
        rooms = torch.tensor([room_indices(tokens, config.max_rooms)], dtype=torch.long, device=memory.device)
        logits = model.polygon_logits(combined, combined_padding, x, rooms)[0, -1]
        tokens.append(top_p_sample(_masked_distribution(logits, allowed).cpu(), p, generator))
        if tokens[-1] == EOS:
            break
    else:
        truncated = True

    groups = parse_polygon_stream(tokens, vocab)
    return PolygonDecodeResult(rooms=list(zip(types, groups)), tokens=tokens, truncated=truncated)


@torch.no_grad()
def decode_flat_polygons(
    model: FloorplanGenerator,
    memory: torch.Tensor,
    memory_padding: torch.Tensor,
    p: float,
    generator: Optional[torch.Generator] = None,
) -> PolygonDecodeResult:
    """
    Emit room types and vertices in one stream conditioned on the boundary alone.

    The room count is sampled along with the rooms, up to the room cap.
    """
    config = model.config
    vocab = model.vocab
    grammar = TypedPolygonGrammar(vocab, config.max_rooms, config.max_polygon_tokens, config.max_vertices)
    combined, combined_padding = model.polygon_memory(memory, memory_padding)

    tokens = [SEP_SECTION]
    truncated = False
    while len(tokens) < config.max_polygon_tokens:
        allowed = grammar.allowed(tokens)
        x = torch.tensor([tokens], dtype=torch.long, device=memory.device)
        rooms = torch.tensor([room_indices(tokens, config.max_rooms)], dtype=torch.long, device=memory.device)
        logits = model.polygon_logits(combined, combined_padding, x, rooms)[0, -1]
        tokens.append(top_p_sample(_masked_distribution(logits, allowed).cpu(), p, generator))
        if tokens[-1] == EOS:
            break
    else:
        truncated = True

    return PolygonDecodeResult(rooms=parse_typed_polygon_stream(tokens, vocab), tokens=tokens, truncated=truncated)


@dataclass
class GenerationReport:
    """What happened while generating one plan."""
    seed: int
    top_p: float
    codetree: List[int] = field(default_factory=list)  # empty for the no_codetree variant
    truncated_codetree: bool = False
    truncated_polygons: bool = False
    invalid_rooms: List[Tuple[int, str]] = field(default_factory=list)
    validation: ValidationReport = field(default_factory=ValidationReport)

    @property
    def truncated(self) -> bool:
        return self.truncated_codetree or self.truncated_polygons


def _dedupe(vertices: Sequence[Vertex]) -> List[Vertex]:
    """Drop cyclically repeated consecutive vertices."""
    out: List[Vertex] = []
    for v in vertices:
        if not out or out[-1] != v:
            out.append(v)
    while len(out) > 1 and out[0] == out[-1]:
        out.pop()
    return out


def assemble_rooms(
    decoded: Sequence[Tuple[int, Sequence[Vertex]]]
) -> Tuple[List[Room], List[Tuple[int, str]]]:
    """Orient and check decoded rooms; unusable ones are reported, not raised."""
    rooms, invalid = [], []
    for index, (type_id, vertices) in enumerate(decoded):
        cleaned = _dedupe(vertices)
        if len(cleaned) < 3:
            invalid.append((index, f"only {len(cleaned)} distinct vertices"))
            continue
        try:
            polygon = rotate_to_min_vertex(orient_clockwise(RoomPolygon(tuple(cleaned))))
        except GeometryError as e:
            invalid.append((index, str(e)))
            continue
        rooms.append(Room.from_polygon(polygon.vertices, type_id))
    return rooms, invalid


@torch.no_grad()
def generate(
    boundary: RoomPolygon,
    model: FloorplanGenerator,
    seed: int,
    room_types: Sequence[str],
    top_p: Optional[float] = None,
) -> Tuple[Floorplan, GenerationReport]:
    """
    Generate one plan for a door-encoded boundary.

    Model output never raises: truncations and unusable rooms land in the report.

    Raises:
        DomainError: If the boundary has no encoded front door or leaves the grid
    """
    if not boundary.door_encoded:
        raise DomainError("Boundary needs an encoded front door")
    size = model.vocab.num_bins
    if any(not (0 <= c < size) for v in boundary.vertices for c in v):
        raise DomainError(f"Boundary coordinates must lie in [0, {size - 1}]")
    p = model.config.top_p if top_p is None else top_p
    model.eval()
    device = next(model.parameters()).device
    generator = torch_generator(seed)

    fields, lengths = collate([polygon_fields(boundary, len(room_types))], model.polygon_model.max_len)
    pooled, memory, padding = model.encode_boundary(fields.to(device), lengths.to(device))
    boundary_code = int(model.boundary_code(pooled)[0])

    if model.has_codetree:
        tree, codetree_tokens = sample_codetree(model, memory, padding, boundary_code, p, generator)
        truncated_codetree = tree.truncated
        decoded = decode_polygons(model, codetree_tokens, memory, padding, p, generator)
    else:
        codetree_tokens, truncated_codetree = [], False
        decoded = decode_flat_polygons(model, memory, padding, p, generator)
    rooms, invalid = assemble_rooms(decoded.rooms)

    bits = model.vocab.bits
    fp = Floorplan(
        boundary=boundary,
        rooms=tuple(order_rooms(rooms, _living_type(room_types), strict=False)),
        room_types=tuple(room_types),
        grid_bits=bits,
    )
    report = GenerationReport(
        seed=seed,
        top_p=p,
        codetree=codetree_tokens,
        truncated_codetree=truncated_codetree,
        truncated_polygons=decoded.truncated,
        invalid_rooms=invalid,
        validation=validate(fp, max_rooms=model.config.max_rooms, max_vertices=model.config.max_vertices),
    )
    if invalid:
        logger.debug(f"Seed {seed}: dropped {len(invalid)} invalid room(s)")
    return fp, report


def _living_type(room_types: Sequence[str]) -> Optional[int]:
    return list(room_types).index(LIVING_LABEL) if LIVING_LABEL in room_types else None
