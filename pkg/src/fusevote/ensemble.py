"""Double-ensemble machinery: score every feature set against every
classifier family, select the top rows under a family-diversity rule,
fuse the winners by column concatenation, and combine classifiers by
majority vote.

The evaluation table mirrors the usual published layout (extractor
rows, classifier columns, trailing Average), so transcribed result
tables can be replayed through the selection rule as fixtures.
"""

from __future__ import annotations

import csv
import re
from dataclasses import dataclass, field
from pathlib import Path
from typing import Mapping, Sequence

import numpy as np

from .classifiers import ClassifierSpec, FittedModel
from .classifiers.base import (
    ADABOOST, FAMILIES, GAUSSIAN_NB, GBT, KNN, MLP,
    RANDOM_FOREST, SVM_LINEAR, SVM_RBF, SVM_SIGMOID,
)
from .data import LabeledDataset, concat_columns
from .errors import AlignmentError, ConfigError, ParseError, SelectionError, ShapeError
from .hpo import GridSpec, grid_search, stock_grid
from ._rng import derive_seed

# Header spellings seen in published accuracy tables -> family names.
FAMILY_ALIASES = {
    "xgboost": GBT,
    "gbt": GBT,
    "mlp": MLP,
    "gaussiannb": GAUSSIAN_NB,
    "gaussian-nb": GAUSSIAN_NB,
    "adaboost": ADABOOST,
    "knn": KNN,
    "rfclassifier": RANDOM_FOREST,
    "rf-classifier": RANDOM_FOREST,
    "randomforest": RANDOM_FOREST,
    "rf": RANDOM_FOREST,
    "svm-linear": SVM_LINEAR,
    "svm-sigmoid": SVM_SIGMOID,
    "svm-rbf": SVM_RBF,
}


def normalize_family(name: str) -> str:
    key = name.strip().lower().replace("_", "-").replace(" ", "-")
    if key in FAMILY_ALIASES:
        return FAMILY_ALIASES[key]
    raise ConfigError(f"unknown classifier family name {name!r}")


def infer_family_key(extractor_id: str) -> str:
    """Architecture family of an extractor id.

    Transformer-style ids keep everything up to and including their
    patch token (the input resolution suffix is dropped), so e.g. the
    patch-16 and patch-32 small models count as different families
    while the 224 and 384 renditions of one model do not. Other ids
    reduce to the leading alphabetic stem, which pools depth/width
    variants of one architecture.
    """
    tokens = extractor_id.lower().split("_")
    for pos, tok in enumerate(tokens):
        if tok.startswith("patch"):
            return "_".join(tokens[: pos + 1])
    stem = re.match(r"[a-z]+", tokens[0])
    return stem.group(0) if stem else tokens[0]


@dataclass(frozen=True)
class FamilyRule:
    """Total mapping from extractor ids to family keys.

    Ids absent from the explicit mapping fall back to
    infer_family_key, keeping the function total.
    """

    mapping: Mapping[str, str] = field(default_factory=dict)

    def key_for(self, extractor_id: str) -> str:
        return self.mapping.get(extractor_id) or infer_family_key(extractor_id)

    @classmethod
    def for_ids(cls, ids: Sequence[str]) -> "FamilyRule":
        return cls({i: infer_family_key(i) for i in ids})


@dataclass
class EvaluationTable:
    """Extractors x classifier-families accuracy matrix."""

    extractor_ids: list[str]
    families: list[str]
    cells: np.ndarray
    best_specs: dict = field(default_factory=dict, repr=False)

    def __post_init__(self):
        cells = np.asarray(self.cells, dtype=np.float64)
        if cells.shape != (len(self.extractor_ids), len(self.families)):
            raise ShapeError(
                f"cells shape {cells.shape} does not match "
                f"{len(self.extractor_ids)} extractors x {len(self.families)} families"
            )
        if ((cells < 0) | (cells > 1)).any():
            raise ShapeError("accuracies must lie in [0, 1]")
        self.cells = cells

    def row_means(self) -> np.ndarray:
        return self.cells.mean(axis=1)

    def row_stds(self) -> np.ndarray:
        return self.cells.std(axis=1)  # population std

    def col_means(self) -> np.ndarray:
        return self.cells.mean(axis=0)

    def top_families(self, k: int) -> list[str]:
        """Best k classifier columns by mean accuracy."""
        means = self.col_means()
        order = sorted(range(len(self.families)), key=lambda j: (-means[j], j))
        return [self.families[j] for j in order[:k]]

    def to_csv(self, path: Path | str) -> Path:
        path = Path(path)
        with open(path, "w", newline="", encoding="ascii") as fh:
            writer = csv.writer(fh)
            writer.writerow(["extractor", *self.families, "Average"])
            for i, ident in enumerate(self.extractor_ids):
                row = [repr(float(v)) for v in self.cells[i]]
                writer.writerow([ident, *row, repr(float(self.cells[i].mean()))])
        return path

    @classmethod
    def from_csv(cls, path: Path | str) -> "EvaluationTable":
        """Parse the external table layout; a trailing Average column
        is ignored (means are always recomputed from the cells)."""
        path = Path(path)
        with open(path, newline="", encoding="utf-8") as fh:
            rows = list(csv.reader(fh))
        if not rows:
            raise ParseError(f"{path}: empty table", line=1)
        header = [c.strip() for c in rows[0]]
        if len(header) < 2:
            raise ParseError(f"{path}: header needs id plus family columns", line=1)
        names = header[1:]
        drop_average = names and names[-1].lower() == "average"
        if drop_average:
            names = names[:-1]
        try:
            families = [normalize_family(n) for n in names]
        except ConfigError as exc:
            raise ParseError(f"{path}: {exc}", line=1) from exc
        ids, cells = [], []
        for lineno, row in enumerate(rows[1:], start=2):
            if not row or all(not c.strip() for c in row):
                continue
            values = row[1:len(header)]
            if drop_average:
                values = values[:-1]
            if len(values) != len(families):
                raise ParseError(
                    f"{path}: expected {len(families)} accuracies, got {len(values)}",
                    line=lineno,
                )
            try:
                cells.append([float(v) for v in values])
            except ValueError as exc:
                raise ParseError(f"{path}: {exc}", line=lineno) from exc
            ids.append(row[0].strip())
        if not ids:
            raise ParseError(f"{path}: table has no rows", line=2)
        try:
            return cls(ids, families, np.asarray(cells))
        except ShapeError as exc:
            raise ParseError(f"{path}: {exc}", line=2) from exc


def evaluation_cell_seed(seed: int, set_index: int, family_index: int) -> int:
    return derive_seed(seed, 0xE7, set_index, family_index)


def evaluate_feature_sets(sets: Sequence[LabeledDataset], families: Sequence[str],
                          folds: int, seed: int,
                          grids: Mapping[str, GridSpec] | None = None,
                          n_jobs: int = 1) -> EvaluationTable:
    """Cell (i, j) = tuned CV accuracy of family j on feature set i.

    Tuning runs a full grid search per cell (stock grids unless
    overridden); the winning spec for each cell is kept in
    `best_specs[(extractor_id, family)]`.
    """
    if not sets:
        raise ConfigError("no feature sets to evaluate")
    reference = sets[0]
    for ds in sets[1:]:
        if not np.array_equal(ds.labels, reference.labels):
            raise AlignmentError(
                f"feature sets {reference.source_tag!r} and {ds.source_tag!r} "
                "must share labels"
            )
    cells = np.zeros((len(sets), len(families)))
    best_specs: dict = {}
    for i, ds in enumerate(sets):
        for j, family in enumerate(families):
            grid = grids[family] if grids and family in grids else stock_grid(
                family, ds.class_count)
            best, trials = grid_search(
                ds, grid, folds=folds, seed=evaluation_cell_seed(seed, i, j),
                n_jobs=n_jobs,
            )
            cells[i, j] = max(t.mean for t in trials)
            best_specs[(ds.source_tag, family)] = best
    table = EvaluationTable([ds.source_tag for ds in sets], list(families), cells)
    table.best_specs = best_specs
    return table


@dataclass(frozen=True)
class SelectionStep:
    """One row visited while walking the accuracy ranking."""

    extractor_id: str
    mean: float
    std: float
    family_key: str | None
    action: str  # "selected" or "skipped-duplicate-family"


def selection_trace(table: EvaluationTable, k: int,
                    rule: FamilyRule | None) -> list[SelectionStep]:
    """Walk rows by mean desc (ties: std asc, then row order), selecting
    ids whose family key is new and skipping repeats, until k are
    chosen."""
    if k > len(table.extractor_ids):
        raise SelectionError(
            f"cannot select {k} from {len(table.extractor_ids)} rows"
        )
    means = table.row_means()
    stds = table.row_stds()
    order = sorted(range(len(table.extractor_ids)),
                   key=lambda i: (-means[i], stds[i], i))
    steps: list[SelectionStep] = []
    seen: set[str] = set()
    chosen = 0
    for i in order:
        ident = table.extractor_ids[i]
        key = rule.key_for(ident) if rule is not None else None
        if key is not None and key in seen:
            steps.append(SelectionStep(ident, means[i], stds[i], key,
                                       "skipped-duplicate-family"))
            continue
        steps.append(SelectionStep(ident, means[i], stds[i], key, "selected"))
        if key is not None:
            seen.add(key)
        chosen += 1
        if chosen == k:
            return steps
    families = "distinct families" if rule is not None else "rows"
    raise SelectionError(f"table has fewer than {k} {families}")


def select_top_k(table: EvaluationTable, k: int,
                 rule: FamilyRule | None = None) -> list[str]:
    """Top-k extractor ids by row mean with the diversity rule applied.

    With rule=None the ranking is used as-is (no family skipping).
    """
    return [s.extractor_id for s in selection_trace(table, k, rule)
            if s.action == "selected"]


def fuse(sets: Sequence[LabeledDataset]) -> list[LabeledDataset]:
    """Fused candidates from the selected sets.

    Two sets yield their single concatenation; three yield every pair
    plus the triple (four candidates), pairs first in index order.
    """
    if len(sets) == 2:
        return [concat_columns(list(sets))]
    if len(sets) == 3:
        return [
            concat_columns([sets[0], sets[1]]),
            concat_columns([sets[0], sets[2]]),
            concat_columns([sets[1], sets[2]]),
            concat_columns(list(sets)),
        ]
    raise ConfigError(f"fusion expects 2 or 3 selected sets, got {len(sets)}")


@dataclass(frozen=True)
class VoteSpec:
    """Hard-majority vote over 2 or 3 member classifiers.

    Vote ties go to the label with the highest mean predicted
    probability among the tied labels; an exact residual tie falls to
    the earliest member's prediction.
    """

    member_specs: tuple[ClassifierSpec, ...]
    mode: str = "hard-majority"

    def __post_init__(self):
        if len(self.member_specs) not in (2, 3):
            raise ConfigError(
                f"vote needs 2 or 3 members, got {len(self.member_specs)}"
            )
        if self.mode != "hard-majority":
            raise ConfigError(f"unsupported vote mode {self.mode!r}")

    @classmethod
    def for_members(cls, members: Sequence[FittedModel]) -> "VoteSpec":
        return cls(tuple(m.spec for m in members))


def vote_predict(members: Sequence[FittedModel], x, spec: VoteSpec) -> np.ndarray:
    """Per-sample modal label across the members."""
    if len(members) != len(spec.member_specs):
        raise ConfigError(
            f"{len(members)} members for a {len(spec.member_specs)}-member vote"
        )
    widths = {m.n_features for m in members}
    if len(widths) != 1:
        raise ShapeError(f"members disagree on feature width: {sorted(widths)}")
    k = members[0].class_count
    preds = np.stack([m.predict(x) for m in members])          # (M, n)
    probas = np.stack([m.predict_proba(x) for m in members])   # (M, n, K)
    n = preds.shape[1]

    counts = np.zeros((n, k))
    for m in range(preds.shape[0]):
        counts[np.arange(n), preds[m]] += 1.0
    out = np.argmax(counts, axis=1).astype(np.int64)

    top = counts.max(axis=1, keepdims=True)
    tied_rows = np.flatnonzero((counts == top).sum(axis=1) > 1)
    if tied_rows.size:
        mean_proba = probas.mean(axis=0)
        for r in tied_rows:
            tied = np.flatnonzero(counts[r] == counts[r].max())
            scores = mean_proba[r, tied]
            best = tied[scores == scores.max()]
            if best.size == 1:
                out[r] = best[0]
                continue
            for m in range(preds.shape[0]):  # residual tie: earliest member
                if preds[m, r] in best:
                    out[r] = preds[m, r]
                    break
    return out
