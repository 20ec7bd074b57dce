"""Wire-protocol token-classification server.

Speaks newline-delimited JSON over stdio or TCP: ``{id, tokens}``
answers ``{id, labels}`` (BIO over PER/LOC/ORG, one label per token),
``{id, tokens, span, candidate}`` answers ``{id, similarity}``.
Intended as an external plausibility scorer for augmentation pipelines;
the real model rides in the transformers backend, while the lexicon and
all-O backends keep the protocol testable offline.
"""

from .backends import (
    AllOBackend,
    Backend,
    LexiconBackend,
    TransformersBackend,
    load_lexicon,
    surface_similarity,
)
from .config import DEFAULT_MAX_SEQ_LEN, SidecarConfig
from .server import SidecarServer, handle_record, serve

__version__ = "0.1.0"

__all__ = [
    "AllOBackend",
    "Backend",
    "DEFAULT_MAX_SEQ_LEN",
    "LexiconBackend",
    "SidecarConfig",
    "SidecarServer",
    "TransformersBackend",
    "handle_record",
    "load_lexicon",
    "serve",
    "surface_similarity",
    "__version__",
]
