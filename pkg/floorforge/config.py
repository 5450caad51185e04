"""
Run configuration: presets, YAML overlays, flag overrides and the resolved echo.

Resolution order is preset, then named ablation overlays, then the --config overlay
(deep merge), then CLI flags, then FLOORFORGE_OUTPUT_ROOT for the output root.
"""

import copy
import logging
import os
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path
from typing import Any, Dict, List, Optional, Union

import yaml

from .codebook.model import Level, VQVAEConfig
from .core.models import DEFAULT_BITS, DEFAULT_ROOM_TYPES, LIVING_LABEL, MAX_ROOMS, MAX_VERTICES, SUPPORTED_BITS
from .data.synth import SynthParams
from .exceptions import ConfigError
from .generator.model import GenConfig
from .metrics.adjacency import DEFAULT_MIN_SHARED

logger = logging.getLogger("floorforge.config")

PRESET_DIR = Path(__file__).parent / "presets"
ABLATION_DIR = PRESET_DIR / "ablations"
PRESETS = ("desk", "paper")
OUTPUT_ROOT_ENV = "FLOORFORGE_OUTPUT_ROOT"
RESOLVED_NAME = "resolved_config.yaml"


@dataclass
class GridConfig:
    bits: int = DEFAULT_BITS
    room_types: List[str] = field(default_factory=lambda: list(DEFAULT_ROOM_TYPES))
    max_rooms: int = MAX_ROOMS
    max_vertices: int = MAX_VERTICES


@dataclass
class SynthConfig:
    num_plans: int = 1000
    augment: bool = False
    room_count_range: List[int] = field(default_factory=lambda: [3, 8])
    boundary_notches: int = 2
    min_room_extent: int = 4
    door_width: int = 2
    max_attempts: int = 20


@dataclass
class VQVAESection:
    """VQ-VAE settings shared by both levels; codebook sizes differ per level."""
    layout_codebook_size: int = 128
    polygon_codebook_size: int = 128
    model: Dict[str, Any] = field(default_factory=dict)


@dataclass
class MetricsConfig:
    min_shared: int = DEFAULT_MIN_SHARED


@dataclass
class PathsConfig:
    data_dir: Optional[str] = None
    layout_checkpoint: Optional[str] = None
    polygon_checkpoint: Optional[str] = None
    generator_checkpoint: Optional[str] = None


@dataclass
class RunConfig:
    """Fully resolved settings of one command."""
    preset: str = "desk"
    seed: int = 0
    output_root: str = "runs"
    progress: bool = True
    grid: GridConfig = field(default_factory=GridConfig)
    synth: SynthConfig = field(default_factory=SynthConfig)
    vqvae: VQVAESection = field(default_factory=VQVAESection)
    generator: Dict[str, Any] = field(default_factory=dict)
    metrics: MetricsConfig = field(default_factory=MetricsConfig)
    paths: PathsConfig = field(default_factory=PathsConfig)

    def synth_params(self) -> SynthParams:
        return SynthParams(
            room_count_range=tuple(self.synth.room_count_range),
            boundary_notches=self.synth.boundary_notches,
            min_room_extent=self.synth.min_room_extent,
            seed=self.seed,
            bits=self.grid.bits,
            door_width=self.synth.door_width,
            max_attempts=self.synth.max_attempts,
            room_types=tuple(self.grid.room_types),
        )

    def vqvae_config(self, level: Union[Level, str]) -> VQVAEConfig:
        """VQ-VAE settings for one level, with the grid bits and that level's codebook size."""
        size = (
            self.vqvae.layout_codebook_size
            if Level(level) is Level.LAYOUT
            else self.vqvae.polygon_codebook_size
        )
        settings = dict(self.vqvae.model)
        for key in ("bits", "codebook_size", "max_layout_len", "max_polygon_len"):
            if key in settings:
                raise ConfigError(f"vqvae.model.{key} is derived from the grid and codebook sections")
        settings.update(
            bits=self.grid.bits,
            codebook_size=size,
            max_layout_len=self.grid.max_rooms,
            max_polygon_len=self.grid.max_vertices,
        )
        return VQVAEConfig.from_dict(settings)

    def generator_config(self) -> GenConfig:
        settings = dict(self.generator)
        for key in ("max_rooms", "max_vertices"):
            if key in settings:
                raise ConfigError(f"generator.{key} is derived from the grid section")
        settings.update(max_rooms=self.grid.max_rooms, max_vertices=self.grid.max_vertices)
        return GenConfig.from_dict(settings)

    def check(self) -> None:
        """
        Validate every section eagerly.

        Raises:
            ConfigError: On the first invalid value
        """
        if self.grid.bits not in SUPPORTED_BITS:
            raise ConfigError(f"grid.bits must be one of {SUPPORTED_BITS}")
        if LIVING_LABEL not in self.grid.room_types:
            raise ConfigError(f"grid.room_types must include '{LIVING_LABEL}'")
        if self.synth.num_plans < 1:
            raise ConfigError("synth.num_plans must be positive")
        try:
            self.synth_params()
        except Exception as e:
            raise ConfigError(f"Invalid synth section: {e}") from e
        self.vqvae_config(Level.LAYOUT)
        self.vqvae_config(Level.POLYGON)
        self.generator_config()

    def to_dict(self) -> Dict[str, Any]:
        return asdict(self)

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> "RunConfig":
        """
        Build a config from nested dictionaries.

        Raises:
            ConfigError: On unknown keys or invalid values
        """
        sections = {
            "grid": GridConfig,
            "synth": SynthConfig,
            "vqvae": VQVAESection,
            "metrics": MetricsConfig,
            "paths": PathsConfig,
        }
        _reject_unknown(data, cls, "")
        kwargs: Dict[str, Any] = {}
        for key, value in data.items():
            if key in sections:
                if not isinstance(value, dict):
                    raise ConfigError(f"Section '{key}' must be a mapping")
                _reject_unknown(value, sections[key], f"{key}.")
                kwargs[key] = sections[key](**value)
            elif key == "generator" and not isinstance(value, dict):
                raise ConfigError("Section 'generator' must be a mapping")
            else:
                kwargs[key] = value
        config = cls(**kwargs)
        config.check()
        return config


def _reject_unknown(data: Dict[str, Any], schema, prefix: str) -> None:
    known = {f.name for f in fields(schema)}
    unknown = sorted(set(data) - known)
    if unknown:
        raise ConfigError(f"Unknown configuration keys: {', '.join(prefix + k for k in unknown)}")


def deep_merge(base: Dict[str, Any], overlay: Dict[str, Any]) -> Dict[str, Any]:
    """Merge overlay into a copy of base; nested mappings merge, everything else replaces."""
    merged = copy.deepcopy(base)
    for key, value in overlay.items():
        if isinstance(value, dict) and isinstance(merged.get(key), dict):
            merged[key] = deep_merge(merged[key], value)
        else:
            merged[key] = copy.deepcopy(value)
    return merged


def load_yaml(path: Union[str, Path]) -> Dict[str, Any]:
    """
    Read a YAML mapping.

    Raises:
        ConfigError: If the file is missing, malformed or not a mapping
    """
    path = Path(path)
    if not path.exists():
        raise ConfigError(f"Config file not found: {path}")
    try:
        with open(path, "r", encoding="utf-8") as f:
            data = yaml.safe_load(f) or {}
    except yaml.YAMLError as e:
        raise ConfigError(f"Malformed YAML in {path}: {e}") from e
    if not isinstance(data, dict):
        raise ConfigError(f"Expected a mapping at the top of {path}")
    return data


def load_preset(name: str) -> Dict[str, Any]:
    """Load a shipped preset (desk or paper) or an ablation overlay by name."""
    if name in PRESETS:
        data = load_yaml(PRESET_DIR / f"{name}.yaml")
        data["preset"] = name
        return data
    path = ABLATION_DIR / f"{name}.yaml"
    if not path.exists():
        available = ", ".join(list(PRESETS) + list_ablations())
        raise ConfigError(f"Unknown preset '{name}'. Available: {available}")
    return load_yaml(path)


def list_ablations() -> List[str]:
    return sorted(p.stem for p in ABLATION_DIR.glob("*.yaml"))


def resolve_config(
    preset: str = "desk",
    config_path: Optional[Union[str, Path]] = None,
    overrides: Optional[Dict[str, Any]] = None,
    ablations: Optional[List[str]] = None,
) -> RunConfig:
    """
    Resolve a run configuration.

    Args:
        preset: desk or paper
        config_path: Optional YAML overlay, deep-merged onto the preset
        overrides: Flag values keyed by dotted path, None values skipped
        ablations: Names of ablation overlays applied after the preset

    Raises:
        ConfigError: On unknown presets, unknown keys or invalid values
    """
    if preset not in PRESETS:
        raise ConfigError(f"Unknown preset '{preset}', expected one of {PRESETS}")
    data = load_preset(preset)
    for name in ablations or []:
        data = deep_merge(data, load_preset(name))
    if config_path:
        data = deep_merge(data, load_yaml(config_path))
    for dotted, value in (overrides or {}).items():
        if value is None:
            continue
        target = data
        *parents, leaf = dotted.split(".")
        for part in parents:
            target = target.setdefault(part, {})
        target[leaf] = value
    env_root = os.getenv(OUTPUT_ROOT_ENV)
    if env_root:
        data["output_root"] = env_root
    return RunConfig.from_dict(data)


def write_resolved(config: RunConfig, out_dir: Union[str, Path]) -> Path:
    """Echo the resolved config into the output directory."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    path = out_dir / RESOLVED_NAME
    with open(path, "w", encoding="utf-8") as f:
        yaml.safe_dump(config.to_dict(), f, sort_keys=False)
    logger.info(f"Resolved config written to {path} (seed {config.seed})")
    return path
