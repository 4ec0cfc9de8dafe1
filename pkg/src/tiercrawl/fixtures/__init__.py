"""Generated fixture pages with ground-truth manifests, and a loopback server for them."""
from .generator import (
    DEFERRED,
    KINDS,
    NON_DEFERRED,
    CorpusSpec,
    FixturePage,
    Manifest,
    generate_corpus,
)
from .server import FixtureServer, serve

__all__ = [
    "DEFERRED", "KINDS", "NON_DEFERRED", "CorpusSpec", "FixturePage", "Manifest",
    "generate_corpus", "FixtureServer", "serve",
]
