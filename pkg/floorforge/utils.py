"""Utility functions for FloorForge."""

import logging
import os
import random
from pathlib import Path
from typing import Union

import numpy as np
import torch

LOG_FORMAT = "%(asctime)s - %(name)s - %(levelname)s - %(message)s"


def setup_logging(log_level: int = logging.INFO) -> logging.Logger:
    """Configure the package logger once and return it."""
    logger = logging.getLogger("floorforge")

    if not logger.handlers:
        handler = logging.StreamHandler()
        handler.setFormatter(logging.Formatter(LOG_FORMAT))
        logger.addHandler(handler)

    logger.setLevel(log_level)
    return logger


def set_seed(seed: int, deterministic: bool = True) -> None:
    """Seed every RNG a run touches."""
    random.seed(seed)
    np.random.seed(seed % (2**32))
    torch.manual_seed(seed)
    if deterministic:
        os.environ.setdefault("CUBLAS_WORKSPACE_CONFIG", ":4096:8")
        torch.use_deterministic_algorithms(True, warn_only=True)
        if torch.backends.cudnn.is_available():
            torch.backends.cudnn.deterministic = True
            torch.backends.cudnn.benchmark = False


def torch_generator(seed: int) -> torch.Generator:
    """Create a CPU generator seeded for sampling."""
    generator = torch.Generator()
    generator.manual_seed(seed)
    return generator


def ensure_dir(path: Union[str, Path]) -> Path:
    """Create a directory if it doesn't exist and return it."""
    path = Path(path)
    path.mkdir(parents=True, exist_ok=True)
    return path
