"""Deterministic ViT-Base forward pass producing one embedding per image."""

from .config import ModelConfig
from .encoder import (
    Embedding,
    ViTEncoder,
    attention,
    classify,
    embed_tokens,
    encoder_layer,
    forward,
    layer_norm,
    normalize,
    patchify,
)
from .preprocess import preprocess
from .weights import ModelWeights, expected_shapes, load_weights, save_weights

__all__ = [
    "ModelConfig",
    "ModelWeights",
    "expected_shapes",
    "load_weights",
    "save_weights",
    "preprocess",
    "patchify",
    "embed_tokens",
    "attention",
    "encoder_layer",
    "layer_norm",
    "forward",
    "classify",
    "normalize",
    "Embedding",
    "ViTEncoder",
]
