"""Batch export: image directory -> one FSET1 row per image.

The dataset directory holds one subdirectory per class; class names in
sorted order become label ids 0..K-1. Images are normalized through the
classification engine's own crop/resize CLI (`fusevote prep`) so both
components share a single preprocessing truth, then replicated to three
channels, ImageNet-normalized, and pushed through the frozen backbone.

Images that fail to decode are skipped and listed in a sidecar
`<extractor_id>.skipped` log next to the output.
"""

from __future__ import annotations

import shutil
import subprocess
import sys
import tempfile
from pathlib import Path

import numpy as np
import torch

from .backbones import build_backbone, preprocess_batch
from .fsio import FormatError, read_pgm, write_fset, write_pgm
from .registry import BackboneRegistryEntry, lookup

IMAGE_SUFFIXES = {".pgm", ".png", ".jpg", ".jpeg", ".bmp"}


def _to_pgm(src: Path, dst: Path) -> None:
    """Convert any supported image to grayscale PGM."""
    if src.suffix.lower() == ".pgm":
        shutil.copyfile(src, dst)
        return
    from PIL import Image

    with Image.open(src) as img:
        gray = np.asarray(img.convert("L"), dtype=np.uint8)
    write_pgm(gray, dst)


def _run_prep(in_dir: Path, out_dir: Path, size: int) -> None:
    cmd = [sys.executable, "-m", "fusevote.cli", "prep",
           "--input", str(in_dir), "--size", str(size),
           "--out", str(out_dir)]
    done = subprocess.run(cmd, capture_output=True, text=True)
    if done.returncode != 0:
        raise RuntimeError(
            f"preprocessing CLI failed ({done.returncode}): {done.stderr.strip()}"
        )


def collect_images(dataset_dir: Path) -> list[tuple[Path, int, str]]:
    """(path, label id, class name) triples; classes are the sorted
    subdirectory names."""
    dataset_dir = Path(dataset_dir)
    classes = sorted(p.name for p in dataset_dir.iterdir() if p.is_dir())
    if not classes:
        raise FileNotFoundError(f"{dataset_dir}: no class subdirectories")
    out = []
    for label, cls in enumerate(classes):
        for path in sorted((dataset_dir / cls).iterdir()):
            if path.suffix.lower() in IMAGE_SUFFIXES:
                out.append((path, label, cls))
    if not out:
        raise FileNotFoundError(f"{dataset_dir}: no images in class directories")
    return out


def extract(dataset_dir: Path, entry: BackboneRegistryEntry | str, out_dir: Path,
            pretrained: bool = False, batch_size: int = 8,
            skip_prep: bool = False) -> Path:
    """Export deep features for every image under dataset_dir.

    Returns the path of the written FSET1 file; its labels sibling and
    (when images were skipped) a `.skipped` log land next to it.
    `skip_prep=True` bypasses the crop CLI for inputs that are already
    at the backbone's resolution.
    """
    if isinstance(entry, str):
        entry = lookup(entry)
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    triples = collect_images(Path(dataset_dir))

    skipped: list[str] = []
    with tempfile.TemporaryDirectory(prefix="featx_") as tmp:
        staged = Path(tmp) / "staged"
        staged.mkdir()
        usable: list[tuple[str, int]] = []
        for i, (path, label, _cls) in enumerate(triples):
            name = f"{i:06d}.pgm"
            try:
                _to_pgm(path, staged / name)
            except Exception as exc:
                skipped.append(f"{path}\t{exc}")
                continue
            usable.append((name, label))
        if not usable:
            raise FormatError(f"{dataset_dir}: every image failed to decode")

        if skip_prep:
            prepped = staged
        else:
            prepped = Path(tmp) / "prepped"
            _run_prep(staged, prepped, entry.input_resolution)

        model = build_backbone(entry.extractor_id, pretrained=pretrained)
        rows, labels = [], []
        with torch.inference_mode():
            for start in range(0, len(usable), batch_size):
                chunk = usable[start:start + batch_size]
                grays = np.stack([
                    read_pgm(prepped / name).astype(np.float32) / 255.0
                    for name, _ in chunk
                ])
                batch = preprocess_batch(torch.from_numpy(grays))
                rows.append(model(batch).numpy().astype(np.float32))
                labels.extend(label for _, label in chunk)
        features = np.vstack(rows)

    if features.shape[1] != entry.feature_dim:
        raise FormatError(
            f"{entry.extractor_id}: backbone emitted {features.shape[1]} "
            f"columns, registry says {entry.feature_dim}"
        )
    out_path = write_fset(out_dir / f"{entry.extractor_id}.fset",
                          entry.extractor_id, features,
                          np.asarray(labels, dtype=np.int64))
    if skipped:
        (out_dir / f"{entry.extractor_id}.skipped").write_text(
            "".join(line + "\n" for line in skipped), encoding="utf-8")
    return out_path
