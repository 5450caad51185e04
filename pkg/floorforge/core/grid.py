"""Coordinate quantization on the 2^bits grid."""

import math

from ..exceptions import DomainError
from .models import SUPPORTED_BITS


def grid_size(bits: int) -> int:
    """Number of bins per axis."""
    if bits not in SUPPORTED_BITS:
        raise DomainError(f"Unsupported bit width {bits}; expected one of {SUPPORTED_BITS}")
    return 2 ** bits


def quantize_coord(v: float, bits: int) -> int:
    """Map a normalized coordinate in [0, 1] to its grid bin (floor binning, top bin clamped)."""
    size = grid_size(bits)
    if not (0.0 <= v <= 1.0) or math.isnan(v):
        raise DomainError(f"Coordinate {v} outside [0, 1]")
    return min(max(int(math.floor(v * size)), 0), size - 1)


def dequantize_coord(g: int, bits: int) -> float:
    """Return the midpoint of grid bin g."""
    size = grid_size(bits)
    if not 0 <= g < size:
        raise DomainError(f"Grid coordinate {g} outside [0, {size - 1}]")
    return (g + 0.5) / size
