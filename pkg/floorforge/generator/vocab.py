"""Mixed token vocabulary shared by the CodeTree and polygon streams."""

from dataclasses import asdict, dataclass
from enum import IntEnum
from typing import Any, Dict

import torch

from ..exceptions import DomainError

PAD, BOS, EOS, SEP_ROOM, SEP_SECTION = range(5)
SPECIAL_NAMES = ("PAD", "BOS", "EOS", "SEP_ROOM", "SEP_SECTION")
NUM_SPECIALS = len(SPECIAL_NAMES)


class TokenClass(IntEnum):
    CODE = 0
    POS = 1
    TYPE = 2
    SPECIAL = 3


@dataclass(frozen=True)
class Vocabulary:
    """Contiguous ranges: specials, position bins, room types, layout codes, polygon codes."""
    bits: int
    num_types: int
    layout_size: int
    polygon_size: int

    @property
    def num_bins(self) -> int:
        return 2 ** self.bits

    @property
    def pos_start(self) -> int:
        return NUM_SPECIALS

    @property
    def type_start(self) -> int:
        return self.pos_start + self.num_bins

    @property
    def layout_start(self) -> int:
        return self.type_start + self.num_types

    @property
    def polygon_start(self) -> int:
        return self.layout_start + self.layout_size

    @property
    def size(self) -> int:
        return self.polygon_start + self.polygon_size

    def _check(self, token: int) -> None:
        if not 0 <= token < self.size:
            raise DomainError(f"Token {token} outside vocabulary of size {self.size}")

    def token_class(self, token: int) -> TokenClass:
        """Class of a token id."""
        self._check(token)
        if token < self.pos_start:
            return TokenClass.SPECIAL
        if token < self.type_start:
            return TokenClass.POS
        if token < self.layout_start:
            return TokenClass.TYPE
        return TokenClass.CODE

    def pos_token(self, value: int) -> int:
        if not 0 <= value < self.num_bins:
            raise DomainError(f"Coordinate {value} outside [0, {self.num_bins - 1}]")
        return self.pos_start + value

    def pos_value(self, token: int) -> int:
        if self.token_class(token) is not TokenClass.POS:
            raise DomainError(f"Token {token} is not a position bin")
        return token - self.pos_start

    def type_token(self, type_id: int) -> int:
        if not 0 <= type_id < self.num_types:
            raise DomainError(f"Room type {type_id} outside [0, {self.num_types})")
        return self.type_start + type_id

    def type_value(self, token: int) -> int:
        if self.token_class(token) is not TokenClass.TYPE:
            raise DomainError(f"Token {token} is not a room type")
        return token - self.type_start

    def layout_token(self, code: int) -> int:
        if not 0 <= code < self.layout_size:
            raise DomainError(f"Layout code {code} outside [0, {self.layout_size})")
        return self.layout_start + code

    def layout_value(self, token: int) -> int:
        if not self.layout_start <= token < self.polygon_start:
            raise DomainError(f"Token {token} is not a layout code")
        return token - self.layout_start

    def polygon_token(self, code: int) -> int:
        if not 0 <= code < self.polygon_size:
            raise DomainError(f"Polygon code {code} outside [0, {self.polygon_size})")
        return self.polygon_start + code

    def polygon_value(self, token: int) -> int:
        if not self.polygon_start <= token < self.size:
            raise DomainError(f"Token {token} is not a polygon code")
        return token - self.polygon_start

    def range_mask(self, start: int, stop: int) -> torch.Tensor:
        mask = torch.zeros(self.size, dtype=torch.bool)
        mask[start:stop] = True
        return mask

    def pos_mask(self) -> torch.Tensor:
        return self.range_mask(self.pos_start, self.type_start)

    def type_mask(self) -> torch.Tensor:
        return self.range_mask(self.type_start, self.layout_start)

    def layout_mask(self) -> torch.Tensor:
        return self.range_mask(self.layout_start, self.polygon_start)

    def polygon_mask(self) -> torch.Tensor:
        return self.range_mask(self.polygon_start, self.size)

    def to_dict(self) -> Dict[str, Any]:
        return asdict(self)

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> "Vocabulary":
        return cls(**data)


def build_vocab(bits: int, num_types: int, layout_size: int, polygon_size: int) -> Vocabulary:
    """
    Build the vocabulary of size 5 + 2^bits + num_types + layout_size + polygon_size.

    Raises:
        DomainError: If any size is not positive
    """
    for name, value in (("bits", bits), ("num_types", num_types), ("layout_size", layout_size), ("polygon_size", polygon_size)):
        if value < 1:
            raise DomainError(f"{name} must be positive, got {value}")
    return Vocabulary(bits=bits, num_types=num_types, layout_size=layout_size, polygon_size=polygon_size)
