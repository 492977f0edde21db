"""FSET1 and PGM file handling, matching the interchange definitions
shared with the classification engine byte for byte:

    FSET1 <extractor_id> <rows> <cols> f32le\\n + float32-LE payload
    sibling `<stem>.labels` with one integer label per line
    PGM: binary P5, maxval 255
"""

from __future__ import annotations

from pathlib import Path

import numpy as np


class FormatError(ValueError):
    pass


def write_fset(path: Path, extractor_id: str, features: np.ndarray,
               labels: np.ndarray) -> Path:
    features = np.ascontiguousarray(features, dtype="<f4")
    if features.ndim != 2:
        raise FormatError(f"features must be 2-D, got {features.shape}")
    if labels.shape[0] != features.shape[0]:
        raise FormatError(
            f"{labels.shape[0]} labels for {features.shape[0]} rows"
        )
    path = Path(path)
    header = (f"FSET1 {extractor_id} {features.shape[0]} "
              f"{features.shape[1]} f32le\n").encode("ascii")
    with open(path, "wb") as fh:
        fh.write(header)
        fh.write(features.tobytes(order="C"))
    path.with_suffix(".labels").write_text(
        "".join(f"{int(v)}\n" for v in labels), encoding="ascii")
    return path


def read_pgm(path: Path) -> np.ndarray:
    data = Path(path).read_bytes()
    tokens, pos = [], 0
    while len(tokens) < 4:
        while pos < len(data) and data[pos:pos + 1].isspace():
            pos += 1
        if pos < len(data) and data[pos:pos + 1] == b"#":
            while pos < len(data) and data[pos] != 0x0A:
                pos += 1
            continue
        start = pos
        while pos < len(data) and not data[pos:pos + 1].isspace():
            pos += 1
        if start == pos:
            raise FormatError(f"{path}: truncated PGM header")
        tokens.append(data[start:pos])
    if tokens[0] != b"P5" or int(tokens[3]) != 255:
        raise FormatError(f"{path}: need binary P5 with maxval 255")
    width, height = int(tokens[1]), int(tokens[2])
    pos += 1
    pixels = data[pos:pos + width * height]
    if len(pixels) != width * height:
        raise FormatError(f"{path}: PGM payload truncated")
    return np.frombuffer(pixels, dtype=np.uint8).reshape(height, width).copy()


def write_pgm(img: np.ndarray, path: Path) -> None:
    img = np.asarray(img, dtype=np.uint8)
    with open(path, "wb") as fh:
        fh.write(f"P5\n{img.shape[1]} {img.shape[0]}\n255\n".encode("ascii"))
        fh.write(img.tobytes(order="C"))
