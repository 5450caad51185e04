"""
CodeTrees, polygon streams and the grammars that constrain both.

CodeTree token form::

    [BOS, layout_code, boundary_code, type_1, polygon_code_1, ..., type_M, polygon_code_M, EOS]

Polygon stream form::

    [SEP_SECTION, x, y, x, y, ..., SEP_ROOM, x, y, ..., EOS]

The reduced generator variants drop parts of this: without layout codes the
CodeTree has no layout_code, without polygon codes it keeps only BOS, the layout
code and one type per room, and without a CodeTree each room of the polygon
stream opens with its type token instead.
"""

import logging
from dataclasses import dataclass
from enum import Enum
from typing import Dict, List, Optional, Sequence, Tuple, Union

import torch

from ..codebook.embedding import layout_fields, polygon_fields
from ..codebook.model import MaskedVQVAE
from ..core.models import Floorplan, Room, RoomPolygon, Vertex
from ..exceptions import CodeTreeCapError, GenerationError
from .vocab import BOS, EOS, PAD, SEP_ROOM, SEP_SECTION, TokenClass, Vocabulary

logger = logging.getLogger("floorforge.generator.codetree")

MIN_ROOM_VERTICES = 3
# SEP_SECTION is already counted; each room needs 3 vertex pairs and a terminator
TOKENS_PER_MIN_ROOM = 2 * MIN_ROOM_VERTICES + 1
# The flat stream adds one type token per room
TOKENS_PER_MIN_TYPED_ROOM = TOKENS_PER_MIN_ROOM + 1


class GeneratorVariant(Enum):
    """Which intermediate codes the generator writes before the polygons."""
    FULL = "full"
    NO_LAYOUT_CODE = "no_layout_code"
    NO_POLYGON_CODE = "no_polygon_code"
    NO_CODETREE = "no_codetree"


@dataclass(frozen=True)
class CodeTreeFormat:
    """
    Token layout of a CodeTree.

    The header is BOS, then the layout code and the boundary code when present.
    Each room entry is its type, followed by its polygon code when present.
    """
    layout_code: bool = True
    polygon_codes: bool = True

    @property
    def header(self) -> int:
        return 1 + int(self.layout_code) + int(self.polygon_codes)

    @property
    def entry(self) -> int:
        return 1 + int(self.polygon_codes)

    @property
    def boundary_index(self) -> Optional[int]:
        """Token position of the given boundary code, if the format has one."""
        return self.header - 1 if self.polygon_codes else None

    def length(self, num_rooms: int) -> int:
        return self.header + self.entry * num_rooms + 1

    def num_rooms(self, length: int) -> int:
        return (length - self.header - 1) // self.entry

    @classmethod
    def for_variant(cls, variant: Union[str, GeneratorVariant]) -> Optional["CodeTreeFormat"]:
        """Format written by a generator variant; None when it writes no CodeTree."""
        variant = GeneratorVariant(variant)
        if variant is GeneratorVariant.NO_CODETREE:
            return None
        return cls(
            layout_code=variant is not GeneratorVariant.NO_LAYOUT_CODE,
            polygon_codes=variant is not GeneratorVariant.NO_POLYGON_CODE,
        )


FULL_FORMAT = CodeTreeFormat()


@dataclass(frozen=True)
class CodeTree:
    """Layout code, boundary code and one (type, polygon code) entry per room; absent codes are None."""
    layout_code: Optional[int]
    boundary_code: Optional[int]
    rooms: Tuple[Tuple[int, Optional[int]], ...]
    truncated: bool = False

    def to_tokens(self, vocab: Vocabulary, fmt: CodeTreeFormat = FULL_FORMAT) -> List[int]:
        tokens = [BOS]
        if fmt.layout_code:
            tokens.append(vocab.layout_token(self.layout_code))
        if fmt.polygon_codes:
            tokens.append(vocab.polygon_token(self.boundary_code))
        for type_id, code in self.rooms:
            tokens.append(vocab.type_token(type_id))
            if fmt.polygon_codes:
                tokens.append(vocab.polygon_token(code))
        tokens.append(EOS)
        return tokens

    @classmethod
    def from_tokens(
        cls,
        tokens: Sequence[int],
        vocab: Vocabulary,
        truncated: bool = False,
        fmt: CodeTreeFormat = FULL_FORMAT,
    ) -> "CodeTree":
        """
        Parse a complete token sequence.

        Raises:
            GenerationError: If the sequence breaks the CodeTree grammar
        """
        tokens = list(tokens)
        if (
            len(tokens) < fmt.header + 1
            or tokens[0] != BOS
            or tokens[-1] != EOS
            or (len(tokens) - fmt.header - 1) % fmt.entry != 0
        ):
            raise GenerationError(f"Malformed CodeTree token sequence {tokens}")
        try:
            cursor = 1
            layout_code = boundary_code = None
            if fmt.layout_code:
                layout_code = vocab.layout_value(tokens[cursor])
                cursor += 1
            if fmt.polygon_codes:
                boundary_code = vocab.polygon_value(tokens[cursor])
                cursor += 1
            rooms = tuple(
                (
                    vocab.type_value(tokens[i]),
                    vocab.polygon_value(tokens[i + 1]) if fmt.polygon_codes else None,
                )
                for i in range(cursor, len(tokens) - 1, fmt.entry)
            )
        except ValueError as e:
            raise GenerationError(f"Malformed CodeTree token sequence: {e}") from e
        return cls(layout_code, boundary_code, rooms, truncated)


class CodeTreeGrammar:
    """Legal next tokens of the CodeTree stream, cached by grammar state."""

    def __init__(self, vocab: Vocabulary, max_len: int, max_rooms: int, fmt: CodeTreeFormat = FULL_FORMAT):
        if max_len < fmt.length(1):
            raise GenerationError(f"CodeTree cap {max_len} leaves no room for a single room entry")
        self.vocab = vocab
        self.max_len = max_len
        self.max_rooms = max_rooms
        self.fmt = fmt
        self._cache: Dict[Tuple, torch.Tensor] = {}

    def _state(self, prefix: Sequence[int]) -> Tuple:
        if not prefix or prefix[0] != BOS:
            raise GenerationError("CodeTree prefix must start with BOS")
        n = len(prefix)
        if n >= self.max_len or EOS in prefix:
            raise GenerationError(f"CodeTree prefix of length {n} is already complete")
        for t, token in enumerate(prefix[1:], start=1):
            if not self._legal(t, token):
                raise GenerationError(f"Token {token} is illegal at CodeTree position {t}")
        fmt = self.fmt
        if n < fmt.header:
            return ("layout",) if fmt.layout_code and n == 1 else ("boundary",)
        if (n - fmt.header) % fmt.entry == 1:
            return ("code",)
        rooms = (n - fmt.header) // fmt.entry
        can_open = rooms < self.max_rooms and n + fmt.entry < self.max_len
        return ("pair", rooms > 0, can_open)

    def _legal(self, t: int, token: int) -> bool:
        vocab, fmt = self.vocab, self.fmt
        if not 0 <= token < vocab.size:
            return False
        if t < fmt.header:
            if fmt.layout_code and t == 1:
                return vocab.layout_start <= token < vocab.polygon_start
            return vocab.polygon_start <= token < vocab.size
        if (t - fmt.header) % fmt.entry == 1:
            return vocab.polygon_start <= token < vocab.size
        return vocab.token_class(token) is TokenClass.TYPE

    def allowed(self, prefix: Sequence[int]) -> torch.Tensor:
        """
        Boolean mask [V] of legal next tokens.

        Raises:
            GenerationError: If the prefix itself is illegal
        """
        state = self._state(prefix)
        if state not in self._cache:
            vocab = self.vocab
            if state[0] == "layout":
                mask = vocab.layout_mask()
            elif state[0] in ("boundary", "code"):
                mask = vocab.polygon_mask()
            else:
                _, has_rooms, can_open = state
                mask = vocab.type_mask() if can_open else torch.zeros(vocab.size, dtype=torch.bool)
                if has_rooms:
                    mask[EOS] = True
            self._cache[state] = mask
        return self._cache[state].clone()

    def sequence_masks(self, tokens: Sequence[int]) -> torch.Tensor:
        """Masks [len - 1, V] for predicting tokens[1:] from each prefix."""
        return torch.stack([self.allowed(tokens[: t + 1]) for t in range(len(tokens) - 1)])


class PolygonGrammar:
    """
    Legal next tokens of the polygon stream for a CodeTree with `num_rooms` rooms.

    Each room takes 3..max_vertices (x, y) pairs. A vertex is only allowed when the
    remaining rooms still fit into the token budget.
    """

    def __init__(self, vocab: Vocabulary, num_rooms: int, max_tokens: int, max_vertices: int):
        if num_rooms < 1:
            raise GenerationError("Polygon stream needs at least one room")
        if 1 + TOKENS_PER_MIN_ROOM * num_rooms > max_tokens:
            raise GenerationError(f"{num_rooms} rooms cannot fit into {max_tokens} polygon tokens")
        self.vocab = vocab
        self.num_rooms = num_rooms
        self.max_tokens = max_tokens
        self.max_vertices = max_vertices
        self._cache: Dict[Tuple, torch.Tensor] = {}

    @staticmethod
    def room_capacity(max_tokens: int) -> int:
        """Largest room count whose minimal stream fits the budget."""
        return (max_tokens - 1) // TOKENS_PER_MIN_ROOM

    def _need(self, room: int, vertices: int) -> int:
        """Tokens still required to finish legally from a pair boundary."""
        missing = max(MIN_ROOM_VERTICES - vertices, 0)
        return 2 * missing + 1 + TOKENS_PER_MIN_ROOM * (self.num_rooms - 1 - room)

    def walk(self, prefix: Sequence[int]) -> Tuple[int, int, bool, int]:
        """
        Replay a prefix and return (room, vertices in room, half pair pending, length).

        Raises:
            GenerationError: If the prefix breaks the grammar
        """
        if not prefix or prefix[0] != SEP_SECTION:
            raise GenerationError("Polygon stream must start with SEP_SECTION")
        room, vertices, half = 0, 0, False
        for t, token in enumerate(prefix[1:], start=1):
            mask = self._mask(room, vertices, half, t)
            if not (0 <= token < self.vocab.size) or not bool(mask[token]):
                raise GenerationError(f"Token {token} is illegal at polygon stream position {t}")
            if token == EOS:
                raise GenerationError("Polygon stream already ended")
            if token == SEP_ROOM:
                room, vertices = room + 1, 0
            elif half:
                half, vertices = False, vertices + 1
            else:
                half = True
        return room, vertices, half, len(prefix)

    def _mask(self, room: int, vertices: int, half: bool, length: int) -> torch.Tensor:
        last = room == self.num_rooms - 1
        can_vertex = (
            vertices < self.max_vertices
            and length + 2 + self._need(room, vertices + 1) <= self.max_tokens
        )
        key = (half, vertices >= MIN_ROOM_VERTICES, can_vertex, last)
        if key not in self._cache:
            vocab = self.vocab
            if half:
                mask = vocab.pos_mask()
            else:
                mask = vocab.pos_mask() if can_vertex else torch.zeros(vocab.size, dtype=torch.bool)
                if vertices >= MIN_ROOM_VERTICES:
                    mask[EOS if last else SEP_ROOM] = True
            self._cache[key] = mask
        return self._cache[key]

    def allowed(self, prefix: Sequence[int]) -> torch.Tensor:
        room, vertices, half, length = self.walk(prefix)
        return self._mask(room, vertices, half, length).clone()

    def sequence_masks(self, tokens: Sequence[int]) -> torch.Tensor:
        """Masks [len - 1, V] for predicting tokens[1:], replayed in one pass."""
        masks = []
        room, vertices, half = 0, 0, False
        for t in range(len(tokens) - 1):
            masks.append(self._mask(room, vertices, half, t + 1))
            token = tokens[t + 1]
            if token == SEP_ROOM:
                room, vertices = room + 1, 0
            elif token == EOS:
                break
            elif half:
                half, vertices = False, vertices + 1
            else:
                half = True
        return torch.stack(masks)


class TypedPolygonGrammar:
    """
    Legal next tokens of the flat polygon stream, where each room opens with its type.

    The room count is open: a room with at least three vertices may be followed
    by EOS, or by SEP_ROOM while another minimal room still fits the budget and
    the room cap.
    """

    def __init__(self, vocab: Vocabulary, max_rooms: int, max_tokens: int, max_vertices: int):
        if 1 + TOKENS_PER_MIN_TYPED_ROOM > max_tokens:
            raise GenerationError(f"A single typed room cannot fit into {max_tokens} polygon tokens")
        self.vocab = vocab
        self.max_rooms = max_rooms
        self.max_tokens = max_tokens
        self.max_vertices = max_vertices
        self._cache: Dict[Tuple, torch.Tensor] = {}

    def _mask(self, room: int, vertices: int, half: bool, typed: bool, length: int) -> torch.Tensor:
        missing = max(MIN_ROOM_VERTICES - vertices - 1, 0)
        can_vertex = vertices < self.max_vertices and length + 2 + 2 * missing + 1 <= self.max_tokens
        can_open = room + 1 < self.max_rooms and length + 1 + TOKENS_PER_MIN_TYPED_ROOM <= self.max_tokens
        key = (typed, half, vertices >= MIN_ROOM_VERTICES, can_vertex, can_open)
        if key not in self._cache:
            vocab = self.vocab
            if not typed:
                mask = vocab.type_mask()
            elif half:
                mask = vocab.pos_mask()
            else:
                mask = vocab.pos_mask() if can_vertex else torch.zeros(vocab.size, dtype=torch.bool)
                if vertices >= MIN_ROOM_VERTICES:
                    mask[EOS] = True
                    mask[SEP_ROOM] = can_open
            self._cache[key] = mask
        return self._cache[key]

    @staticmethod
    def _advance(state: Tuple[int, int, bool, bool], token: int) -> Tuple[int, int, bool, bool]:
        room, vertices, half, typed = state
        if token == SEP_ROOM:
            return room + 1, 0, False, False
        if not typed:
            return room, vertices, half, True
        if half:
            return room, vertices + 1, False, typed
        return room, vertices, True, typed

    def walk(self, prefix: Sequence[int]) -> Tuple[int, int, bool, bool]:
        """
        Replay a prefix and return (room, vertices in room, half pair pending, type given).

        Raises:
            GenerationError: If the prefix breaks the grammar
        """
        if not prefix or prefix[0] != SEP_SECTION:
            raise GenerationError("Polygon stream must start with SEP_SECTION")
        state = (0, 0, False, False)
        for t, token in enumerate(prefix[1:], start=1):
            mask = self._mask(*state, t)
            if not (0 <= token < self.vocab.size) or not bool(mask[token]):
                raise GenerationError(f"Token {token} is illegal at polygon stream position {t}")
            if token == EOS:
                raise GenerationError("Polygon stream already ended")
            state = self._advance(state, token)
        return state

    def allowed(self, prefix: Sequence[int]) -> torch.Tensor:
        state = self.walk(prefix)
        return self._mask(*state, len(prefix)).clone()

    def sequence_masks(self, tokens: Sequence[int]) -> torch.Tensor:
        """Masks [len - 1, V] for predicting tokens[1:], replayed in one pass."""
        masks = []
        state = (0, 0, False, False)
        for t in range(len(tokens) - 1):
            masks.append(self._mask(*state, t + 1))
            if tokens[t + 1] == EOS:
                break
            state = self._advance(state, tokens[t + 1])
        return torch.stack(masks)


def polygon_stream(polygons: Sequence[RoomPolygon], vocab: Vocabulary) -> List[int]:
    """Ground-truth polygon stream of rooms in canonical order."""
    tokens = [SEP_SECTION]
    for i, polygon in enumerate(polygons):
        if i > 0:
            tokens.append(SEP_ROOM)
        for x, y in polygon.vertices:
            tokens.extend((vocab.pos_token(x), vocab.pos_token(y)))
    tokens.append(EOS)
    return tokens


def room_indices(tokens: Sequence[int], max_rooms: int) -> List[int]:
    """Index of the room each polygon-stream position belongs to; SEP_ROOM closes its room."""
    indices, room = [], 0
    for token in tokens:
        indices.append(min(room, max_rooms))
        if token == SEP_ROOM:
            room += 1
    return indices


def parse_polygon_stream(tokens: Sequence[int], vocab: Vocabulary) -> List[List[Vertex]]:
    """Split a (possibly truncated) stream into per-room vertex lists; dangling x is dropped."""
    rooms: List[List[Vertex]] = [[]]
    pending: Optional[int] = None
    for token in tokens:
        if token in (SEP_SECTION, PAD, BOS):
            continue
        if token == EOS:
            break
        if token == SEP_ROOM:
            rooms.append([])
            pending = None
        elif pending is None:
            pending = vocab.pos_value(token)
        else:
            rooms[-1].append((pending, vocab.pos_value(token)))
            pending = None
    return rooms


def typed_polygon_stream(rooms: Sequence[Room], vocab: Vocabulary) -> List[int]:
    """Ground-truth flat stream: each room's type token, then its vertices."""
    tokens = [SEP_SECTION]
    for i, room in enumerate(rooms):
        if i > 0:
            tokens.append(SEP_ROOM)
        tokens.append(vocab.type_token(room.type_id))
        for x, y in room.polygon.vertices:
            tokens.extend((vocab.pos_token(x), vocab.pos_token(y)))
    tokens.append(EOS)
    return tokens


def parse_typed_polygon_stream(tokens: Sequence[int], vocab: Vocabulary) -> List[Tuple[int, List[Vertex]]]:
    """Split a (possibly truncated) flat stream into (type, vertices) per room."""
    rooms: List[Tuple[int, List[Vertex]]] = []
    pending: Optional[int] = None
    for token in tokens:
        if token in (SEP_SECTION, PAD, BOS):
            continue
        if token == EOS:
            break
        if token == SEP_ROOM:
            pending = None
        elif vocab.token_class(token) is TokenClass.TYPE:
            rooms.append((vocab.type_value(token), []))
            pending = None
        elif not rooms:
            continue
        elif pending is None:
            pending = vocab.pos_value(token)
        else:
            rooms[-1][1].append((pending, vocab.pos_value(token)))
            pending = None
    return rooms


def build_supervision_codetree(
    fp: Floorplan,
    layout_model: MaskedVQVAE,
    polygon_model: MaskedVQVAE,
    max_len: int = 35,
    fmt: CodeTreeFormat = FULL_FORMAT,
) -> CodeTree:
    """
    Quantize a plan's layout, boundary and room polygons into a CodeTree.

    Raises:
        CodeTreeCapError: If the CodeTree would exceed max_len
    """
    pairs, _ = build_supervision_codetrees([fp], layout_model, polygon_model, max_len, fmt)
    if not pairs:
        raise CodeTreeCapError(fmt.length(len(fp.rooms)), max_len)
    return pairs[0][1]


def build_supervision_codetrees(
    plans: Sequence[Floorplan],
    layout_model: MaskedVQVAE,
    polygon_model: MaskedVQVAE,
    max_len: int = 35,
    fmt: CodeTreeFormat = FULL_FORMAT,
) -> Tuple[List[Tuple[Floorplan, CodeTree]], int]:
    """
    Batched supervision CodeTrees; plans over the cap are rejected and counted.

    Codes the format leaves out are not computed and stay None.

    Returns:
        (plan, tree) pairs for accepted plans and the number rejected
    """
    accepted = []
    for fp in plans:
        length = fmt.length(len(fp.rooms))
        if length > max_len:
            logger.warning(f"Rejecting plan with {len(fp.rooms)} rooms: {CodeTreeCapError(length, max_len)}")
        else:
            accepted.append(fp)
    rejected = len(plans) - len(accepted)
    if not accepted:
        return [], rejected

    layout_codes: List[Optional[int]] = [None] * len(accepted)
    if fmt.layout_code:
        layout_codes = layout_model.encode_indices([layout_fields([r.box for r in fp.rooms]) for fp in accepted])
    polygon_codes: List[int] = []
    if fmt.polygon_codes:
        polygon_inputs = []
        for fp in accepted:
            boundary_label = len(fp.room_types)
            polygon_inputs.append(polygon_fields(fp.boundary, boundary_label))
            polygon_inputs.extend(polygon_fields(r.polygon, r.type_id) for r in fp.rooms)
        polygon_codes = polygon_model.encode_indices(polygon_inputs)

    pairs, cursor = [], 0
    for fp, layout_code in zip(accepted, layout_codes):
        boundary_code, room_codes = None, [None] * len(fp.rooms)
        if fmt.polygon_codes:
            boundary_code = polygon_codes[cursor]
            room_codes = polygon_codes[cursor + 1: cursor + 1 + len(fp.rooms)]
            cursor += 1 + len(fp.rooms)
        rooms = tuple((room.type_id, code) for room, code in zip(fp.rooms, room_codes))
        pairs.append((fp, CodeTree(layout_code, boundary_code, rooms)))

    if rejected:
        logger.info(f"Rejected {rejected} of {len(plans)} plans over the CodeTree cap of {max_len}")
    return pairs, rejected
