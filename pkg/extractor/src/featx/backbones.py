"""Backbone construction and the penultimate-layer feature tap.

CNN ids map to torchvision architectures with their classification head
replaced by identity, so the forward pass ends at the pooled embedding.
Transformer ids run on the in-package encoder below (patch embedding,
class token, pre-norm attention/MLP blocks, final layer norm, class
token readout).

Weights: `pretrained=True` asks torchvision for its published ImageNet
weights (requires download access); the default builds deterministic
seeded random weights, which keeps exports reproducible on machines
without the weight files. Either way the backbone is frozen and run in
eval mode.
"""

from __future__ import annotations

import hashlib

import torch
from torch import nn

from .registry import BackboneRegistryEntry, lookup

IMAGENET_MEAN = (0.485, 0.456, 0.406)
IMAGENET_STD = (0.229, 0.224, 0.225)

_VIT_SHAPES = {
    "tiny": (192, 12, 3),
    "small": (384, 12, 6),
    "base": (768, 12, 12),
    "large": (1024, 24, 16),
}


class TransformerEncoder(nn.Module):
    """Minimal image transformer: conv patch embedding, learned class
    token and position embeddings, pre-norm blocks, class-token output."""

    def __init__(self, resolution: int, patch: int, dim: int, depth: int,
                 heads: int):
        super().__init__()
        n_patches = (resolution // patch) ** 2
        self.patch_embed = nn.Conv2d(3, dim, kernel_size=patch, stride=patch)
        self.cls_token = nn.Parameter(torch.zeros(1, 1, dim))
        self.pos_embed = nn.Parameter(torch.zeros(1, n_patches + 1, dim))
        nn.init.trunc_normal_(self.pos_embed, std=0.02)
        nn.init.trunc_normal_(self.cls_token, std=0.02)
        self.blocks = nn.ModuleList(
            [_Block(dim, heads) for _ in range(depth)]
        )
        self.norm = nn.LayerNorm(dim)

    def forward(self, x: torch.Tensor) -> torch.Tensor:
        tokens = self.patch_embed(x).flatten(2).transpose(1, 2)
        cls = self.cls_token.expand(tokens.shape[0], -1, -1)
        tokens = torch.cat([cls, tokens], dim=1) + self.pos_embed
        for block in self.blocks:
            tokens = block(tokens)
        return self.norm(tokens)[:, 0]


class _Block(nn.Module):
    def __init__(self, dim: int, heads: int):
        super().__init__()
        self.norm1 = nn.LayerNorm(dim)
        self.attn = nn.MultiheadAttention(dim, heads, batch_first=True)
        self.norm2 = nn.LayerNorm(dim)
        self.mlp = nn.Sequential(
            nn.Linear(dim, dim * 4), nn.GELU(), nn.Linear(dim * 4, dim)
        )

    def forward(self, tokens: torch.Tensor) -> torch.Tensor:
        normed = self.norm1(tokens)
        attended, _ = self.attn(normed, normed, normed, need_weights=False)
        tokens = tokens + attended
        return tokens + self.mlp(self.norm2(tokens))


def _build_vit(entry: BackboneRegistryEntry) -> nn.Module:
    tokens = entry.extractor_id.split("_")
    size = tokens[1]
    patch = int(tokens[2].removeprefix("patch"))
    dim, depth, heads = _VIT_SHAPES[size]
    assert dim == entry.feature_dim
    return TransformerEncoder(entry.input_resolution, patch, dim, depth, heads)


def _build_cnn(entry: BackboneRegistryEntry, pretrained: bool) -> nn.Module:
    import torchvision.models as tvm

    factory = getattr(tvm, entry.extractor_id)
    model = factory(weights="IMAGENET1K_V1" if pretrained else None)
    name = entry.extractor_id
    if name.startswith(("resnet", "resnext", "shufflenet")):
        model.fc = nn.Identity()
    elif name.startswith(("densenet", "mnasnet", "mobilenet")):
        model.classifier = nn.Identity()
    elif name.startswith(("vgg", "alexnet")):
        model.classifier[-1] = nn.Identity()
    else:
        raise ValueError(f"no feature tap defined for {name}")
    return model


def _seed_for(extractor_id: str) -> int:
    digest = hashlib.sha256(extractor_id.encode("ascii")).digest()
    return int.from_bytes(digest[:7], "big")


def build_backbone(extractor_id: str, pretrained: bool = False) -> nn.Module:
    """Frozen eval-mode backbone whose forward pass yields the
    penultimate-layer embedding (rows match the registry feature_dim)."""
    entry = lookup(extractor_id)
    torch.manual_seed(_seed_for(extractor_id))
    if entry.kind == "vit":
        if pretrained:
            raise ValueError(
                f"{extractor_id}: no pretrained weight source is wired for "
                "the in-package transformer; use the default seeded weights"
            )
        model = _build_vit(entry)
    else:
        model = _build_cnn(entry, pretrained)
    model.eval()
    for p in model.parameters():
        p.requires_grad_(False)
    return model


def preprocess_batch(gray_batch: torch.Tensor) -> torch.Tensor:
    """Grayscale [0,1] (N,H,W) -> normalized 3-channel (N,3,H,W):
    channels replicated, then the published ImageNet mean/std applied."""
    rgb = gray_batch.unsqueeze(1).repeat(1, 3, 1, 1)
    mean = torch.tensor(IMAGENET_MEAN).view(1, 3, 1, 1)
    std = torch.tensor(IMAGENET_STD).view(1, 3, 1, 1)
    return (rgb - mean) / std
