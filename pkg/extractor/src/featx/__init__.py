"""featx: export penultimate-layer embeddings of frozen image
backbones into FSET1 feature files."""

__version__ = "0.1.0"

from .extract import collect_images, extract
from .registry import REGISTRY, BackboneRegistryEntry, RegistryError, all_ids, lookup

__all__ = [
    "REGISTRY", "BackboneRegistryEntry", "RegistryError", "all_ids",
    "collect_images", "extract", "lookup",
]
