"""
Boundary-conditioned CodeTree generation.
"""

from .vocab import BOS, EOS, PAD, SEP_ROOM, SEP_SECTION, TokenClass, Vocabulary, build_vocab
from .codetree import (
    CodeTree,
    CodeTreeFormat,
    CodeTreeGrammar,
    GeneratorVariant,
    PolygonGrammar,
    TypedPolygonGrammar,
    build_supervision_codetree,
    build_supervision_codetrees,
    parse_polygon_stream,
    parse_typed_polygon_stream,
    polygon_stream,
    typed_polygon_stream,
)
from .model import FloorplanGenerator, GenConfig
from .losses import GeneratorLoss, generator_loss, loss_classes, weighted_class_loss
from .sampling import (
    GenerationReport,
    codetree_next,
    decode_flat_polygons,
    decode_polygons,
    generate,
    nucleus,
    sample_codetree,
    top_p_sample,
)
from .trainer import GeneratorStats, build_examples, load_generator, save_generator, train_generator
