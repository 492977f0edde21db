"""Core numeric containers, deterministic splitting, and the FSET1
feature interchange format.

A feature matrix is a plain float64 ndarray of shape (rows, cols); the
helpers here validate it once at the boundary. `LabeledDataset` bundles
a matrix with dense integer class labels and a provenance tag and is
frozen after construction, so instances are safe to share across
threads and processes.

FSET1 on-disk format (shared, bit-exact, with any feature producer):

    FSET1 <extractor_id> <rows> <cols> f32le\\n
    <rows * cols * 4 bytes of little-endian float32, row-major>

plus a sibling text file `<stem>.labels` holding one integer per line.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import (
    AlignmentError,
    ConsistencyError,
    DataError,
    FormatError,
    ShapeError,
    SplitError,
)
from ._rng import rng_for

FSET_MAGIC = "FSET1"
FSET_DTYPE = "f32le"
FSET_SUFFIX = ".fset"
LABELS_SUFFIX = ".labels"


def ensure_features(values, *, name: str = "features") -> np.ndarray:
    """Validate and return a feature matrix as a float64 C-order array.

    Raises ShapeError for wrong dimensionality or empty axes, DataError
    for non-finite entries.
    """
    x = np.asarray(values, dtype=np.float64)
    if x.ndim != 2:
        raise ShapeError(f"{name} must be 2-D, got shape {x.shape}")
    if x.shape[0] < 1 or x.shape[1] < 1:
        raise ShapeError(f"{name} must have at least one row and column, got {x.shape}")
    if not np.isfinite(x).all():
        raise DataError(f"{name} contains NaN or Inf")
    return np.ascontiguousarray(x)


def _freeze(a: np.ndarray) -> np.ndarray:
    a = a.copy()
    a.flags.writeable = False
    return a


@dataclass(frozen=True)
class LabeledDataset:
    """A feature matrix plus dense class labels 0..class_count-1.

    Every class must occur at least once; `source_tag` records which
    extractor (or fusion of extractors) produced the features.
    """

    features: np.ndarray
    labels: np.ndarray
    class_count: int
    source_tag: str = ""

    def __post_init__(self):
        feats = ensure_features(self.features)
        labels = np.asarray(self.labels, dtype=np.int64).reshape(-1)
        if labels.shape[0] != feats.shape[0]:
            raise ConsistencyError(
                f"{labels.shape[0]} labels for {feats.shape[0]} feature rows"
            )
        k = int(self.class_count)
        if k < 1:
            raise DataError("class_count must be positive")
        if labels.min() < 0 or labels.max() >= k:
            raise DataError(f"labels must lie in [0, {k}), got range "
                            f"[{labels.min()}, {labels.max()}]")
        present = np.bincount(labels, minlength=k) > 0
        if not present.all():
            missing = np.flatnonzero(~present).tolist()
            raise DataError(f"classes {missing} have no samples")
        object.__setattr__(self, "features", _freeze(feats))
        object.__setattr__(self, "labels", _freeze(labels))
        object.__setattr__(self, "class_count", k)

    @property
    def rows(self) -> int:
        return self.features.shape[0]

    @property
    def cols(self) -> int:
        return self.features.shape[1]

    def class_sizes(self) -> np.ndarray:
        return np.bincount(self.labels, minlength=self.class_count)

    def take(self, indices: np.ndarray, *, source_tag: str | None = None) -> "LabeledDataset":
        """Row-subset dataset; indices keep their given order."""
        idx = np.asarray(indices, dtype=np.int64)
        return LabeledDataset(
            self.features[idx],
            self.labels[idx],
            self.class_count,
            self.source_tag if source_tag is None else source_tag,
        )

    def with_features(self, features: np.ndarray) -> "LabeledDataset":
        """Same labels and tag over a transformed feature matrix."""
        return LabeledDataset(features, self.labels, self.class_count, self.source_tag)


@dataclass(frozen=True)
class SplitSpec:
    """Train/test partition request: fraction, seed, stratification flag."""

    train_fraction: float
    seed: int
    stratified: bool = True

    def __post_init__(self):
        if not 0.0 < self.train_fraction < 1.0:
            raise SplitError(f"train_fraction must be in (0,1), got {self.train_fraction}")


def split_indices(labels: np.ndarray, spec: SplitSpec) -> tuple[np.ndarray, np.ndarray]:
    """Deterministic (train, test) index arrays for the given labels.

    Stratified mode assigns floor(fraction * class_size) per class and
    hands out the remaining seats (up to floor(fraction * n) total) to
    classes with a nonzero fractional part, largest class first, so the
    per-class train fraction always deviates from the target by less
    than one sample. Indices come back sorted, preserving row order.
    """
    labels = np.asarray(labels, dtype=np.int64)
    n = labels.shape[0]
    rng = rng_for(spec.seed, 0xD5)
    if not spec.stratified:
        perm = rng.permutation(n)
        n_train = int(np.floor(spec.train_fraction * n))
        return np.sort(perm[:n_train]), np.sort(perm[n_train:])

    classes = np.unique(labels)
    sizes = {int(c): int((labels == c).sum()) for c in classes}
    for c, sz in sizes.items():
        if sz < 2:
            raise SplitError(f"class {c} has {sz} sample(s); stratified split needs >= 2")

    base = {c: int(np.floor(spec.train_fraction * sz)) for c, sz in sizes.items()}
    frac = {c: spec.train_fraction * sz - base[c] for c, sz in sizes.items()}
    target = int(np.floor(spec.train_fraction * n))
    extras = target - sum(base.values())
    eligible = sorted(
        (c for c in sizes if frac[c] > 0.0),
        key=lambda c: (-sizes[c], c),
    )
    for c in eligible[:max(extras, 0)]:
        base[c] += 1
    # keep at least one sample of every class on each side
    counts = {c: min(max(base[c], 1), sizes[c] - 1) for c in sizes}

    train_parts, test_parts = [], []
    for c in classes:
        idx = np.flatnonzero(labels == c)
        perm = idx[rng.permutation(idx.shape[0])]
        k = counts[int(c)]
        train_parts.append(perm[:k])
        test_parts.append(perm[k:])
    return np.sort(np.concatenate(train_parts)), np.sort(np.concatenate(test_parts))


def split(ds: LabeledDataset, spec: SplitSpec) -> tuple[LabeledDataset, LabeledDataset]:
    """Partition a dataset into disjoint, exhaustive train/test parts.

    Deterministic given the seed: two datasets with identical labels
    split with the same spec receive identical index partitions, which
    keeps rows aligned across feature sets from different extractors.
    """
    train_idx, test_idx = split_indices(ds.labels, spec)
    return ds.take(train_idx), ds.take(test_idx)


def concat_columns(sets: list[LabeledDataset]) -> LabeledDataset:
    """Column-wise fusion of feature sets sharing labels and row order.

    The fused tag joins the member tags with '+', in input order.
    """
    if not sets:
        raise ShapeError("concat_columns needs at least one dataset")
    first = sets[0]
    for other in sets[1:]:
        if other.rows != first.rows or not np.array_equal(other.labels, first.labels):
            raise AlignmentError(
                f"label vectors of {first.source_tag!r} and {other.source_tag!r} differ"
            )
    if len(sets) == 1:
        return first
    fused = np.hstack([s.features for s in sets])
    tag = "+".join(s.source_tag for s in sets)
    return LabeledDataset(fused, first.labels, first.class_count, tag)


@dataclass(frozen=True)
class FeatureSetHeader:
    """Parsed FSET1 header line."""

    extractor_id: str
    rows: int
    cols: int
    magic: str = FSET_MAGIC
    dtype: str = FSET_DTYPE

    def encode(self) -> bytes:
        return f"{self.magic} {self.extractor_id} {self.rows} {self.cols} {self.dtype}\n".encode("ascii")


def labels_path_for(path: Path | str) -> Path:
    """Sibling labels file: same stem, `.labels` suffix."""
    p = Path(path)
    return p.with_suffix(LABELS_SUFFIX) if p.suffix else p.with_name(p.name + LABELS_SUFFIX)


def read_header(path: Path | str) -> FeatureSetHeader:
    with open(path, "rb") as fh:
        line = fh.readline(4096)
    return _parse_header(line, path)


def _parse_header(line: bytes, path) -> FeatureSetHeader:
    try:
        text = line.decode("ascii").rstrip("\n")
    except UnicodeDecodeError as exc:
        raise FormatError(f"{path}: header is not ASCII") from exc
    parts = text.split(" ")
    if len(parts) != 5 or parts[0] != FSET_MAGIC:
        raise FormatError(f"{path}: bad magic or malformed header: {text!r}")
    if parts[4] != FSET_DTYPE:
        raise FormatError(f"{path}: unsupported dtype {parts[4]!r}")
    try:
        rows, cols = int(parts[2]), int(parts[3])
    except ValueError as exc:
        raise FormatError(f"{path}: non-integer dimensions in header") from exc
    if rows < 1 or cols < 1:
        raise FormatError(f"{path}: dimensions must be positive, got {rows}x{cols}")
    return FeatureSetHeader(extractor_id=parts[1], rows=rows, cols=cols)


def save_feature_set(ds: LabeledDataset, path: Path | str) -> Path:
    """Write features as FSET1 (float32 LE) plus the labels sibling."""
    path = Path(path)
    if " " in ds.source_tag or not ds.source_tag:
        raise DataError(f"source_tag {ds.source_tag!r} is not a valid extractor id")
    header = FeatureSetHeader(ds.source_tag, ds.rows, ds.cols)
    payload = ds.features.astype("<f4").tobytes(order="C")
    with open(path, "wb") as fh:
        fh.write(header.encode())
        fh.write(payload)
    with open(labels_path_for(path), "w", encoding="ascii") as fh:
        fh.writelines(f"{int(label)}\n" for label in ds.labels)
    return path


def load_feature_set(path: Path | str) -> LabeledDataset:
    """Read an FSET1 file and its labels sibling into a dataset.

    Values are promoted to float64; source_tag is the header's
    extractor id. Raises FormatError (bad magic/truncated payload),
    ConsistencyError (label count mismatch) or DataError (non-finite
    values, bad label set).
    """
    path = Path(path)
    with open(path, "rb") as fh:
        header = _parse_header(fh.readline(4096), path)
        payload = fh.read()
    expected = header.rows * header.cols * 4
    if len(payload) != expected:
        raise FormatError(
            f"{path}: payload is {len(payload)} bytes, header implies {expected}"
        )
    values = np.frombuffer(payload, dtype="<f4").reshape(header.rows, header.cols)
    if not np.isfinite(values).all():
        raise DataError(f"{path}: payload contains non-finite values")

    lpath = labels_path_for(path)
    if not lpath.exists():
        raise ConsistencyError(f"{path}: missing labels sibling {lpath.name}")
    raw = [ln.strip() for ln in lpath.read_text(encoding="ascii").splitlines() if ln.strip()]
    try:
        labels = np.array([int(tok) for tok in raw], dtype=np.int64)
    except ValueError as exc:
        raise FormatError(f"{lpath}: labels must be integers") from exc
    if labels.shape[0] != header.rows:
        raise ConsistencyError(
            f"{lpath}: {labels.shape[0]} labels for {header.rows} feature rows"
        )
    class_count = int(labels.max()) + 1 if labels.size else 0
    try:
        return LabeledDataset(values.astype(np.float64), labels, class_count,
                              source_tag=header.extractor_id)
    except (ShapeError, DataError) as exc:
        raise DataError(f"{path}: {exc}") from exc
