"""
Masked VQ-VAE codebooks for layouts and polygons.
"""

from .embedding import (
    EmbeddingTables,
    LayoutTokenizer,
    PolygonTokenizer,
    TokenBatch,
    TypeEncoding,
    collate,
    layout_fields,
    polygon_fields,
    tokenize_layout,
    tokenize_polygon,
)
from .quantizer import Codebook, ema_update, restart_dead_entries, vector_quantize
from .losses import VQVAELoss, emd_loss, reconstruction_loss, vqvae_loss
from .model import Level, MaskedVQVAE, VQVAEConfig, apply_mask, sample_mask
from .trainer import CodebookStats, build_samples, load_codebook, save_codebook, train_codebook
