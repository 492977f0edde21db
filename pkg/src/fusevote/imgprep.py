"""Grayscale raster preprocessing: threshold, morphology, largest
connected component, extreme-point cropping, bicubic resize, and
rotate/flip augmentation.

Images are uint8 ndarrays of shape (height, width), row-major, values
0..255. All operations are pure functions; nothing here mutates its
input, so batches can be processed in parallel freely.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass

import numpy as np

from .errors import CropError, DataError, FormatError, ShapeError

MIN_CROP_SIZE = 8


def ensure_gray(img) -> np.ndarray:
    a = np.asarray(img)
    if a.ndim != 2:
        raise ShapeError(f"grayscale image must be 2-D, got shape {a.shape}")
    if a.dtype != np.uint8:
        if a.min() < 0 or a.max() > 255:
            raise DataError("intensities must lie in [0, 255]")
        a = a.astype(np.uint8)
    return a


@dataclass(frozen=True)
class CropParams:
    """Knobs for the foreground-cropping chain.

    Defaults: blur radius 2, threshold 45, two dilations followed by
    two erosions with a 3x3 cross element, resize to 224x224.
    """

    threshold: int = 45
    morph_iterations: int = 2
    blur_radius: int = 2
    target_size: tuple[int, int] | None = (224, 224)

    def __post_init__(self):
        if not 0 < self.threshold < 255:
            raise DataError(f"threshold must be in (0, 255), got {self.threshold}")
        if self.morph_iterations < 0:
            raise DataError("morph_iterations must be >= 0")
        if self.blur_radius < 0:
            raise DataError("blur_radius must be >= 0")


def box_blur(img: np.ndarray, radius: int) -> np.ndarray:
    """Mean filter over a (2r+1)^2 window with edge-clamped borders."""
    img = ensure_gray(img)
    if radius == 0:
        return img.copy()
    acc = img.astype(np.float64)
    for axis in (0, 1):
        padded = np.concatenate(
            [np.repeat(acc.take([0], axis=axis), radius, axis=axis), acc,
             np.repeat(acc.take([-1], axis=axis), radius, axis=axis)],
            axis=axis,
        )
        csum = np.cumsum(padded, axis=axis)
        zero = np.zeros_like(csum.take([0], axis=axis))
        csum = np.concatenate([zero, csum], axis=axis)
        width = 2 * radius + 1
        n = acc.shape[axis]
        hi = csum.take(range(width, width + n), axis=axis)
        lo = csum.take(range(0, n), axis=axis)
        acc = (hi - lo) / width
    return np.clip(np.rint(acc), 0, 255).astype(np.uint8)


def threshold_mask(img: np.ndarray, threshold: int) -> np.ndarray:
    """Foreground = intensity strictly above the threshold."""
    return ensure_gray(img) > threshold


_CROSS_SHIFTS = ((-1, 0), (1, 0), (0, -1), (0, 1))


def _shift(mask: np.ndarray, dr: int, dc: int, fill: bool) -> np.ndarray:
    out = np.full_like(mask, fill)
    h, w = mask.shape
    rs, re = max(dr, 0), h + min(dr, 0)
    cs, ce = max(dc, 0), w + min(dc, 0)
    out[rs:re, cs:ce] = mask[rs - dr:re - dr, cs - dc:ce - dc]
    return out


def dilate(mask: np.ndarray, iterations: int = 1) -> np.ndarray:
    """Binary dilation with a 3x3 cross structuring element."""
    out = mask.copy()
    for _ in range(iterations):
        acc = out.copy()
        for dr, dc in _CROSS_SHIFTS:
            acc |= _shift(out, dr, dc, False)
        out = acc
    return out

def erode(mask: np.ndarray, iterations: int = 1) -> np.ndarray:
    """Binary erosion with a 3x3 cross structuring element."""
    out = mask.copy()
    for _ in range(iterations):
        acc = out.copy()
        for dr, dc in _CROSS_SHIFTS:
            acc &= _shift(out, dr, dc, False)
        out = acc
    return out


def largest_component(mask: np.ndarray) -> np.ndarray:
    """Boolean mask of the largest 4-connected foreground component.

    Ties break toward the component whose first pixel in row-major
    order comes earliest. Raises CropError when the mask is empty.
    """
    if not mask.any():
        raise CropError("no foreground pixels above threshold")
    h, w = mask.shape
    labels = np.zeros((h, w), dtype=np.int32)
    best_label, best_area = 0, 0
    current = 0
    for r0, c0 in zip(*np.nonzero(mask)):
        if labels[r0, c0]:
            continue
        current += 1
        area = 0
        queue = deque([(int(r0), int(c0))])
        labels[r0, c0] = current
        while queue:
            r, c = queue.popleft()
            area += 1
            for dr, dc in _CROSS_SHIFTS:
                nr, nc = r + dr, c + dc
                if 0 <= nr < h and 0 <= nc < w and mask[nr, nc] and not labels[nr, nc]:
                    labels[nr, nc] = current
                    queue.append((nr, nc))
        if area > best_area:  # first-seen component wins ties
            best_area, best_label = area, current
    return labels == best_label


def extreme_points(mask: np.ndarray) -> tuple[int, int, int, int]:
    """(top, bottom, left, right) bounds, inclusive, of the true pixels."""
    rows, cols = np.nonzero(mask)
    if rows.size == 0:
        raise CropError("empty mask has no extreme points")
    return int(rows.min()), int(rows.max()), int(cols.min()), int(cols.max())


def compute_crop_bounds(img: np.ndarray, params: CropParams) -> tuple[int, int, int, int]:
    """Extreme-point bounds of the largest foreground component after
    blur, threshold and dilate/erode cleanup."""
    img = ensure_gray(img)
    if img.shape[0] < MIN_CROP_SIZE or img.shape[1] < MIN_CROP_SIZE:
        raise ShapeError(
            f"image {img.shape} smaller than {MIN_CROP_SIZE}x{MIN_CROP_SIZE} crop minimum"
        )
    work = box_blur(img, params.blur_radius)
    mask = threshold_mask(work, params.threshold)
    if params.morph_iterations:
        mask = dilate(mask, params.morph_iterations)
        mask = erode(mask, params.morph_iterations)
    return extreme_points(largest_component(mask))


def crop_extreme_points(img: np.ndarray, params: CropParams) -> np.ndarray:
    """Crop to the foreground's extreme points, then resize.

    Raises CropError when thresholding leaves nothing; use
    crop_or_resize for the whole-image fallback.
    """
    top, bottom, left, right = compute_crop_bounds(img, params)
    cropped = ensure_gray(img)[top:bottom + 1, left:right + 1]
    if params.target_size is None:
        return cropped.copy()
    return resize_bicubic(cropped, params.target_size)


def crop_or_resize(img: np.ndarray, params: CropParams) -> np.ndarray:
    """crop_extreme_points with the documented empty-foreground
    fallback: resize the whole image instead."""
    try:
        return crop_extreme_points(img, params)
    except CropError:
        if params.target_size is None:
            return ensure_gray(img).copy()
        return resize_bicubic(img, params.target_size)


def _cubic_kernel(x: np.ndarray, a: float = -0.5) -> np.ndarray:
    ax = np.abs(x)
    out = np.where(
        ax <= 1.0,
        (a + 2.0) * ax**3 - (a + 3.0) * ax**2 + 1.0,
        np.where(ax < 2.0, a * ax**3 - 5.0 * a * ax**2 + 8.0 * a * ax - 4.0 * a, 0.0),
    )
    return out


def _resize_axis_weights(n_src: int, n_dst: int) -> tuple[np.ndarray, np.ndarray]:
    scale = n_src / n_dst
    dst = np.arange(n_dst, dtype=np.float64)
    src = (dst + 0.5) * scale - 0.5
    base = np.floor(src).astype(np.int64)
    frac = src - base
    offsets = np.arange(-1, 3)
    taps = base[:, None] + offsets[None, :]
    weights = _cubic_kernel(frac[:, None] - offsets[None, :])
    taps = np.clip(taps, 0, n_src - 1)
    return taps, weights


def resize_bicubic(img: np.ndarray, size: tuple[int, int]) -> np.ndarray:
    """Bicubic resize (convolution kernel a = -0.5, edges clamped).

    `size` is (height, width). Output intensities are clamped to
    [0, 255]; resizing to the source dimensions is the identity.
    """
    img = ensure_gray(img)
    out_h, out_w = int(size[0]), int(size[1])
    if out_h < 1 or out_w < 1:
        raise ShapeError(f"target size must be positive, got {size}")
    acc = img.astype(np.float64)
    taps_r, w_r = _resize_axis_weights(img.shape[0], out_h)
    acc = np.einsum("rtc,rt->rc", acc[taps_r, :], w_r)
    taps_c, w_c = _resize_axis_weights(img.shape[1], out_w)
    acc = np.einsum("rct,ct->rc", acc[:, taps_c], w_c)
    return np.clip(np.rint(acc), 0, 255).astype(np.uint8)


def augment(img: np.ndarray, k_rot: int, hflip: bool) -> np.ndarray:
    """k_rot successive 90-degree clockwise rotations, then an optional
    horizontal mirror."""
    img = ensure_gray(img)
    if not 0 <= k_rot <= 3:
        raise DataError(f"k_rot must be in 0..3, got {k_rot}")
    out = np.rot90(img, -k_rot)
    if hflip:
        out = np.fliplr(out)
    return out.copy()


def augment_expand(img: np.ndarray) -> list[np.ndarray]:
    """The original plus its three rotations, each unflipped and
    flipped: seven images per input, in a fixed order."""
    variants = [augment(img, 0, False)]
    for k in (1, 2, 3):
        variants.append(augment(img, k, False))
        variants.append(augment(img, k, True))
    return variants


def read_pgm(path) -> np.ndarray:
    """Read a binary PGM (P5, maxval 255) file."""
    with open(path, "rb") as fh:
        data = fh.read()
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
    if tokens[0] != b"P5":
        raise FormatError(f"{path}: not a P5 PGM file")
    try:
        width, height, maxval = int(tokens[1]), int(tokens[2]), int(tokens[3])
    except ValueError as exc:
        raise FormatError(f"{path}: malformed PGM header") from exc
    if maxval != 255:
        raise FormatError(f"{path}: only maxval 255 supported, got {maxval}")
    pos += 1  # single whitespace byte after maxval
    pixels = data[pos:pos + width * height]
    if len(pixels) != width * height:
        raise FormatError(f"{path}: PGM payload truncated")
    return np.frombuffer(pixels, dtype=np.uint8).reshape(height, width).copy()


def write_pgm(img: np.ndarray, path) -> None:
    """Write a binary PGM (P5, maxval 255) file."""
    img = ensure_gray(img)
    with open(path, "wb") as fh:
        fh.write(f"P5\n{img.shape[1]} {img.shape[0]}\n255\n".encode("ascii"))
        fh.write(img.tobytes(order="C"))
