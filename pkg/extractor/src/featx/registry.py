"""Registry of the 25 frozen backbones the exporter knows how to run.

Each entry carries the public extractor id, the input resolution the
backbone expects, the width of its penultimate-layer embedding, and the
architecture family key used downstream for diversity filtering.
"""

from __future__ import annotations

from dataclasses import dataclass


class RegistryError(KeyError):
    """Unknown extractor id."""


@dataclass(frozen=True)
class BackboneRegistryEntry:
    extractor_id: str
    input_resolution: int
    feature_dim: int
    family_key: str
    kind: str  # "cnn" (torchvision) or "vit" (in-package transformer)

    def __post_init__(self):
        if self.feature_dim <= 0:
            raise ValueError(f"{self.extractor_id}: feature_dim must be positive")
        suffix = self.extractor_id.rsplit("_", 1)[-1]
        if suffix in ("224", "384") and int(suffix) != self.input_resolution:
            raise ValueError(
                f"{self.extractor_id}: id says {suffix}, "
                f"resolution is {self.input_resolution}"
            )


def _cnn(extractor_id, dim, family):
    return BackboneRegistryEntry(extractor_id, 224, dim, family, "cnn")


def _vit(extractor_id, resolution, dim, family):
    return BackboneRegistryEntry(extractor_id, resolution, dim, family, "vit")


_ENTRIES = [
    _cnn("resnet50", 2048, "resnet"),
    _cnn("resnet101", 2048, "resnet"),
    _cnn("densenet121", 1024, "densenet"),
    _cnn("densenet169", 1664, "densenet"),
    _cnn("vgg16", 4096, "vgg"),
    _cnn("vgg19", 4096, "vgg"),
    _cnn("alexnet", 4096, "alexnet"),
    _cnn("resnext50_32x4d", 2048, "resnext"),
    _cnn("resnext101_32x8d", 2048, "resnext"),
    _cnn("shufflenet_v2_x1_0", 1024, "shufflenet"),
    _cnn("mobilenet_v2", 1280, "mobilenet"),
    _cnn("mnasnet0_5", 1280, "mnasnet"),
    _vit("vit_base_patch16_224", 224, 768, "vit_base_patch16"),
    _vit("vit_base_patch32_224", 224, 768, "vit_base_patch32"),
    _vit("vit_large_patch16_224", 224, 1024, "vit_large_patch16"),
    _vit("vit_small_patch32_224", 224, 384, "vit_small_patch32"),
    _vit("deit3_small_patch16_224", 224, 384, "deit3_small_patch16"),
    _vit("vit_base_patch8_224", 224, 768, "vit_base_patch8"),
    _vit("vit_tiny_patch16_224", 224, 192, "vit_tiny_patch16"),
    _vit("vit_small_patch16_224", 224, 384, "vit_small_patch16"),
    _vit("vit_base_patch16_384", 384, 768, "vit_base_patch16"),
    _vit("vit_tiny_patch16_384", 384, 192, "vit_tiny_patch16"),
    _vit("vit_small_patch32_384", 384, 384, "vit_small_patch32"),
    _vit("vit_small_patch16_384", 384, 384, "vit_small_patch16"),
    _vit("vit_base_patch32_384", 384, 768, "vit_base_patch32"),
]

REGISTRY: dict[str, BackboneRegistryEntry] = {e.extractor_id: e for e in _ENTRIES}


def lookup(extractor_id: str) -> BackboneRegistryEntry:
    try:
        return REGISTRY[extractor_id]
    except KeyError:
        raise RegistryError(
            f"unknown extractor id {extractor_id!r}; "
            f"known ids: {', '.join(sorted(REGISTRY))}"
        ) from None


def all_ids() -> list[str]:
    return [e.extractor_id for e in _ENTRIES]
