"""
Exceptions for FloorForge.
"""

from typing import Any, Dict, Optional


class FloorForgeError(Exception):
    """Base exception for all FloorForge errors."""
    pass


class DomainError(FloorForgeError, ValueError):
    """Exception raised when an argument lies outside an operation's domain."""
    pass


class GeometryError(FloorForgeError):
    """Exception raised for degenerate or self-intersecting polygons."""
    pass


class FloorplanValidationError(FloorForgeError):
    """Exception raised when a floorplan breaks an invariant an operation relies on."""
    pass


class DocumentParseError(FloorForgeError):
    """Exception raised when a floorplan document cannot be parsed."""

    def __init__(
        self,
        message: str,
        field: Optional[str] = None,
        line: Optional[int] = None,
        column: Optional[int] = None,
    ):
        self.field = field
        self.line = line
        self.column = column
        context = []
        if line is not None:
            context.append(f"line {line}")
            if column is not None:
                context.append(f"column {column}")
        if field:
            context.append(f"field '{field}'")
        if context:
            message = f"{message} ({', '.join(context)})"
        super().__init__(message)


class GenerationError(FloorForgeError):
    """Exception raised when synthesis or generation cannot produce a result."""
    pass


class CodeTreeCapError(GenerationError):
    """Exception raised when a supervision CodeTree exceeds the length cap."""

    def __init__(self, length: int, cap: int):
        self.length = length
        self.cap = cap
        super().__init__(f"CodeTree length {length} exceeds cap {cap}")


class ShapeError(FloorForgeError, ValueError):
    """Exception raised for tensor shape or length mismatches."""
    pass


class DivergenceError(FloorForgeError):
    """Exception raised when a training loss becomes non-finite."""

    def __init__(
        self,
        epoch: int,
        step: int,
        components: Optional[Dict[str, Any]] = None,
    ):
        self.epoch = epoch
        self.step = step
        self.components = dict(components or {})
        details = ", ".join(f"{k}={v}" for k, v in self.components.items())
        super().__init__(
            f"Non-finite loss at epoch {epoch}, step {step}" + (f": {details}" if details else "")
        )


class ConfigError(FloorForgeError):
    """Exception raised for invalid or incomplete run configuration."""
    pass


class MetricsError(FloorForgeError, ValueError):
    """Exception raised for empty or misaligned evaluation inputs."""
    pass
