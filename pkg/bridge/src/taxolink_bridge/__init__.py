"""JSON-lines bridge serving embedding and token-classification models."""

from .backends import (
    BackendError,
    DemoLabeler,
    HashEmbedder,
    collapse_word_labels,
    guard_vocabulary,
    make_embedder,
    make_labeler,
)
from .server import Bridge, BridgeConfig

__version__ = "0.1.0"

__all__ = [
    "BackendError",
    "Bridge",
    "BridgeConfig",
    "DemoLabeler",
    "HashEmbedder",
    "collapse_word_labels",
    "guard_vocabulary",
    "make_embedder",
    "make_labeler",
]
