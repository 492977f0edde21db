"""End-to-end experiment orchestration.

`run_pipeline` ingests FSET1 feature sets, holds out a test split once,
scores every extractor against every classifier family with tuned
cross-validation, selects the top feature sets, fuses them, tunes
classifiers on each fused candidate, and finally votes the top
classifier families over the leading individual feature sets. Every
reported accuracy is backed by a persisted prediction file, and a rerun
with the same seed reproduces every payload byte for byte (wall-clock
time lives only in the summary).

Configs are flat `key = value` text files; unknown keys are hard
errors. The four ablation variants gate the train-fitted transforms:
simple (none), norm_pca, smote, norm_pca_smote.
"""

from __future__ import annotations

import itertools
import json
import time
from contextlib import contextmanager
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import __version__
from .classifiers import ClassifierSpec, fit
from .classifiers.base import FAMILIES
from .data import (
    LabeledDataset,
    SplitSpec,
    concat_columns,
    load_feature_set,
    split,
)
from .ensemble import (
    EvaluationTable,
    FamilyRule,
    SelectionStep,
    VoteSpec,
    evaluate_feature_sets,
    evaluation_cell_seed,
    normalize_family,
    select_top_k,
    selection_trace,
    vote_predict,
)
from .errors import ConfigError, DataError, FusevoteError
from .hpo import GridSpec, cross_validate_predictions, grid_search, stock_grid
from .transforms import (
    SmoteConfig,
    minmax_apply,
    minmax_fit,
    pca_apply,
    pca_fit,
    smote_oversample,
)
from ._rng import derive_seed

VARIANTS = {
    "simple": (),
    "norm_pca": ("minmax", "pca"),
    "smote": ("smote",),
    "norm_pca_smote": ("minmax", "pca", "smote"),
}


@dataclass
class ExperimentConfig:
    features_dir: Path
    labels: Path
    output_dir: Path
    variant: str = "simple"
    k_top: int = 3
    folds: int = 5
    seed: int = 0
    families: tuple[str, ...] = FAMILIES
    train_fraction: float = 0.8
    smote_k: int = 5
    vote_extractors: int = 5
    n_jobs: int = 1
    emit_plot_data: bool = False
    grid_overrides: dict[str, dict[str, list]] = field(default_factory=dict)

    def __post_init__(self):
        if self.variant not in VARIANTS:
            raise ConfigError(
                f"variant must be one of {sorted(VARIANTS)}, got {self.variant!r}"
            )
        if self.k_top not in (2, 3):
            raise ConfigError(f"k_top must be 2 or 3, got {self.k_top}")
        if self.folds < 2:
            raise ConfigError(f"folds must be >= 2, got {self.folds}")
        bad = [f for f in self.families if f not in FAMILIES]
        if bad:
            raise ConfigError(f"unknown families {bad}")
        if not self.families:
            raise ConfigError("families must not be empty")

    def grids(self) -> dict[str, GridSpec]:
        return {
            family: GridSpec(family, axes)
            for family, axes in self.grid_overrides.items()
        }


_SCALAR_KEYS = {
    "features_dir": ("features_dir", Path),
    "labels": ("labels", Path),
    "output_dir": ("output_dir", Path),
    "variant": ("variant", str),
    "k_top": ("k_top", int),
    "folds": ("folds", int),
    "seed": ("seed", int),
    "train_fraction": ("train_fraction", float),
    "smote_k": ("smote_k", int),
    "vote_extractors": ("vote_extractors", int),
    "n_jobs": ("n_jobs", int),
    "emit_plot_data": ("emit_plot_data", bool),
}


def _parse_scalar(token: str):
    token = token.strip()
    lowered = token.lower()
    if lowered == "none":
        return None
    if lowered in ("true", "false"):
        return lowered == "true"
    if token.startswith("(") and token.endswith(")"):
        inner = token[1:-1].replace(",", " ").split()
        return tuple(int(t) for t in inner)
    try:
        return int(token)
    except ValueError:
        pass
    try:
        return float(token)
    except ValueError:
        pass
    return token


def _split_values(raw: str) -> list[str]:
    """Split a comma-separated value list, keeping (...) groups whole."""
    parts, depth, current = [], 0, []
    for ch in raw:
        if ch == "(":
            depth += 1
        elif ch == ")":
            depth -= 1
        if ch == "," and depth == 0:
            parts.append("".join(current))
            current = []
        else:
            current.append(ch)
    parts.append("".join(current))
    return [p.strip() for p in parts if p.strip()]


def parse_config(path: Path | str, overrides: dict | None = None,
                 require_paths: bool = True) -> ExperimentConfig:
    """Read a flat key=value config file; unknown keys are hard errors.

    `require_paths=False` lets standalone subcommands reuse a config for
    its tuning settings without the pipeline's directory keys.
    """
    path = Path(path)
    if not path.exists():
        raise ConfigError(f"config file {path} does not exist")
    values: dict = {}
    grid_overrides: dict[str, dict[str, list]] = {}
    for lineno, line in enumerate(path.read_text(encoding="utf-8").splitlines(), 1):
        stripped = line.strip()
        if not stripped or stripped.startswith("#"):
            continue
        if "=" not in stripped:
            raise ConfigError(f"{path}:{lineno}: expected 'key = value'")
        key, _, raw = stripped.partition("=")
        key, raw = key.strip(), raw.strip()
        if key in _SCALAR_KEYS:
            attr, caster = _SCALAR_KEYS[key]
            if caster is bool:
                if raw.lower() not in ("true", "false"):
                    raise ConfigError(f"{path}:{lineno}: {key} must be true/false")
                values[attr] = raw.lower() == "true"
            else:
                try:
                    values[attr] = caster(raw)
                except ValueError as exc:
                    raise ConfigError(f"{path}:{lineno}: bad value for {key}: {exc}")
        elif key == "families":
            try:
                values["families"] = tuple(
                    normalize_family(tok) for tok in _split_values(raw)
                )
            except ConfigError as exc:
                raise ConfigError(f"{path}:{lineno}: {exc}") from exc
        elif key.startswith("grid."):
            parts = key.split(".")
            if len(parts) != 3:
                raise ConfigError(
                    f"{path}:{lineno}: grid overrides look like grid.<family>.<param>"
                )
            family = normalize_family(parts[1])
            param = parts[2]
            grid_overrides.setdefault(family, {})[param] = [
                _parse_scalar(tok) for tok in _split_values(raw)
            ]
        else:
            raise ConfigError(f"{path}:{lineno}: unknown key {key!r}")
    values.update(overrides or {})
    for required in ("features_dir", "labels", "output_dir"):
        if required not in values:
            if require_paths:
                raise ConfigError(f"{path}: missing required key {required!r}")
            values[required] = Path(".")
    cfg = ExperimentConfig(grid_overrides=grid_overrides, **values)
    return cfg


def read_labels_file(path: Path | str) -> np.ndarray:
    lines = [ln.strip() for ln in Path(path).read_text().splitlines() if ln.strip()]
    try:
        return np.array([int(tok) for tok in lines], dtype=np.int64)
    except ValueError as exc:
        raise DataError(f"{path}: labels must be integers") from exc


def apply_variant(train: LabeledDataset, test: LabeledDataset, variant: str,
                  smote_cfg: SmoteConfig) -> tuple[LabeledDataset, LabeledDataset, list[str]]:
    """Fit the variant's transforms on train and apply them; SMOTE
    resamples the training partition only. Returns the transform log."""
    log: list[str] = []
    for step in VARIANTS[variant]:
        if step == "minmax":
            stats = minmax_fit(train.features)
            train = train.with_features(minmax_apply(train.features, stats))
            test = test.with_features(minmax_apply(test.features, stats))
        elif step == "pca":
            model = pca_fit(train.features)
            train = train.with_features(pca_apply(train.features, model))
            test = test.with_features(pca_apply(test.features, model))
        elif step == "smote":
            train = smote_oversample(train, smote_cfg)
        log.append(step)
    return train, test, log


@dataclass
class RunReport:
    """Everything run_pipeline produced, plus where it was persisted."""

    output_dir: Path
    seed: int
    variant: str
    selected_extractors: list[str]
    evaluation: EvaluationTable
    fusion_rows: dict[str, dict[str, float]]
    vote_rows: dict[str, dict[str, float]]
    chosen_hyperparams: dict[str, dict]
    transform_log: dict[str, list[str]]
    wall_seconds: float


def _write_predictions(path: Path, indices: np.ndarray, truth: np.ndarray,
                       pred: np.ndarray, fold: np.ndarray | None = None) -> None:
    with open(path, "w", encoding="ascii") as fh:
        if fold is None:
            fh.write("row,true,pred\n")
            for i, t, p in zip(indices, truth, pred):
                fh.write(f"{int(i)},{int(t)},{int(p)}\n")
        else:
            fh.write("fold,row,true,pred\n")
            for f, i, t, p in zip(fold, indices, truth, pred):
                fh.write(f"{int(f)},{int(i)},{int(t)},{int(p)}\n")


def _safe_name(tag: str) -> str:
    return tag.replace("+", "_PLUS_").replace("/", "_")


def _accuracy(truth: np.ndarray, pred: np.ndarray) -> float:
    return float(np.mean(truth == pred))


@contextmanager
def _coords(**where):
    """Re-raise package errors with the experiment coordinates attached."""
    try:
        yield
    except FusevoteError as exc:
        tag = ", ".join(f"{k}={v}" for k, v in where.items())
        raise type(exc)(f"[{tag}] {exc}") from exc


def _matrix_csv(path: Path, row_label: str, col_names: list[str],
                rows: dict[str, dict[str, float]]) -> None:
    with open(path, "w", encoding="ascii") as fh:
        fh.write(",".join([row_label, *col_names, "Average"]) + "\n")
        for name, cols in rows.items():
            values = [cols[c] for c in col_names]
            cells = ",".join(repr(v) for v in values)
            fh.write(f"{name},{cells},{repr(float(np.mean(values)))}\n")


def run_pipeline(cfg: ExperimentConfig) -> RunReport:
    """Execute evaluate -> select -> fuse -> tune -> vote for one
    variant and persist every table, trial list, and prediction file."""
    started = time.perf_counter()
    out = Path(cfg.output_dir)
    pred_dir = out / "predictions"
    pred_dir.mkdir(parents=True, exist_ok=True)

    if not Path(cfg.features_dir).is_dir():
        raise ConfigError(f"features_dir {cfg.features_dir} does not exist")
    paths = sorted(Path(cfg.features_dir).glob("*.fset"))
    if len(paths) < 2:
        raise ConfigError(
            f"fusion experiments need at least 2 feature sets, found {len(paths)}"
        )
    if not Path(cfg.labels).exists():
        raise ConfigError(f"labels file {cfg.labels} does not exist")
    reference_labels = read_labels_file(cfg.labels)
    sets = []
    for p in paths:
        ds = load_feature_set(p)
        if not np.array_equal(ds.labels, reference_labels):
            raise DataError(f"{p}: labels disagree with {cfg.labels}")
        sets.append(ds)

    split_spec = SplitSpec(cfg.train_fraction, cfg.seed, stratified=True)
    train_by_id: dict[str, LabeledDataset] = {}
    test_by_id: dict[str, LabeledDataset] = {}
    for ds in sets:
        tr, te = split(ds, split_spec)
        train_by_id[ds.source_tag] = tr
        test_by_id[ds.source_tag] = te

    grids = cfg.grids()
    chosen: dict[str, dict] = {}
    transform_log: dict[str, list[str]] = {}
    smote_cfg = SmoteConfig(cfg.smote_k, derive_seed(cfg.seed, 0x51))

    # evaluate: tuned CV accuracy per (extractor, family)
    train_sets = [train_by_id[ds.source_tag] for ds in sets]
    with _coords(stage="evaluate"):
        table = evaluate_feature_sets(train_sets, list(cfg.families), cfg.folds,
                                      cfg.seed, grids=grids, n_jobs=cfg.n_jobs)
    table.to_csv(out / "evaluation.csv")
    for i, ds in enumerate(sets):
        for j, family in enumerate(cfg.families):
            spec = table.best_specs[(ds.source_tag, family)]
            chosen[f"evaluate/{ds.source_tag}/{family}"] = dict(spec.hyperparams)
            with _coords(stage="evaluate", extractor=ds.source_tag, family=family):
                trial, fold_preds = cross_validate_predictions(
                    train_by_id[ds.source_tag], spec, cfg.folds,
                    evaluation_cell_seed(cfg.seed, i, j))
            folds = np.concatenate([
                np.full(idx.shape[0], fi, dtype=np.int64)
                for fi, (idx, _) in enumerate(fold_preds)
            ])
            indices = np.concatenate([idx for idx, _ in fold_preds])
            preds = np.concatenate([p for _, p in fold_preds])
            truth = train_by_id[ds.source_tag].labels[indices]
            _write_predictions(
                pred_dir / f"eval_{_safe_name(ds.source_tag)}_{family}.csv",
                indices, truth, preds, fold=folds)

    # select: rank rows, enforce family diversity
    rule = FamilyRule.for_ids([ds.source_tag for ds in sets])
    steps = selection_trace(table, cfg.k_top, rule)
    selected = [s.extractor_id for s in steps if s.action == "selected"]
    with open(out / "selection.txt", "w", encoding="ascii") as fh:
        for s in steps:
            fh.write(
                f"{s.extractor_id}\tmean={s.mean:.6f}\tstd={s.std:.6f}"
                f"\tfamily={s.family_key}\t{s.action}\n"
            )

    # fuse + tune: every pair (and the triple for k_top=3)
    combos: list[tuple[str, ...]] = list(itertools.combinations(selected, 2))
    if len(selected) == 3:
        combos.append(tuple(selected))
    fusion_rows: dict[str, dict[str, float]] = {}
    for ci, combo in enumerate(combos):
        tag = "+".join(combo)
        fused_train = concat_columns([train_by_id[i] for i in combo])
        fused_test = concat_columns([test_by_id[i] for i in combo])
        tr, te, log = apply_variant(fused_train, fused_test, cfg.variant, smote_cfg)
        transform_log[tag] = log
        row: dict[str, float] = {}
        for fj, family in enumerate(cfg.families):
            grid = grids.get(family) or stock_grid(family, tr.class_count)
            with _coords(stage="fusion", candidate=tag, family=family):
                best, _ = grid_search(tr, grid, folds=cfg.folds,
                                      seed=derive_seed(cfg.seed, 0xF5, ci, fj),
                                      n_jobs=cfg.n_jobs)
                model = fit(tr, best)
            pred = model.predict(te.features)
            row[family] = _accuracy(te.labels, pred)
            chosen[f"fusion/{tag}/{family}"] = dict(best.hyperparams)
            _write_predictions(
                pred_dir / f"fusion_{_safe_name(tag)}_{family}.csv",
                np.arange(te.rows), te.labels, pred)
        fusion_rows[tag] = row
    _matrix_csv(out / "fusion.csv", "fused_features", list(cfg.families), fusion_rows)

    # vote: top classifier families over the leading individual sets
    vote_rows: dict[str, dict[str, float]] = {}
    n_member_families = min(3, len(cfg.families))
    top_extractors = select_top_k(table, min(cfg.vote_extractors, len(sets)),
                                  rule=None)
    if n_member_families >= 2:
        member_families = table.top_families(n_member_families)
        member_combos: list[tuple[str, ...]] = list(
            itertools.combinations(member_families, 2))
        if len(member_families) == 3:
            member_combos.append(tuple(member_families))
        for ei, ident in enumerate(top_extractors):
            tr, te, log = apply_variant(train_by_id[ident], test_by_id[ident],
                                        cfg.variant, smote_cfg)
            transform_log[f"vote/{ident}"] = log
            members_by_family = {}
            for fj, family in enumerate(member_families):
                grid = grids.get(family) or stock_grid(family, tr.class_count)
                with _coords(stage="vote", extractor=ident, family=family):
                    best, _ = grid_search(tr, grid, folds=cfg.folds,
                                          seed=derive_seed(cfg.seed, 0xF6, ei, fj),
                                          n_jobs=cfg.n_jobs)
                    members_by_family[family] = fit(tr, best)
                chosen[f"vote/{ident}/{family}"] = dict(best.hyperparams)
            for combo in member_combos:
                members = [members_by_family[f] for f in combo]
                spec = VoteSpec.for_members(members)
                pred = vote_predict(members, te.features, spec)
                combo_tag = "+".join(combo)
                vote_rows.setdefault(combo_tag, {})[ident] = _accuracy(te.labels, pred)
                _write_predictions(
                    pred_dir / f"vote_{_safe_name(combo_tag)}_{_safe_name(ident)}.csv",
                    np.arange(te.rows), te.labels, pred)
        _matrix_csv(out / "vote.csv", "classifier_combo", top_extractors, vote_rows)

    wall = time.perf_counter() - started
    report = RunReport(
        output_dir=out,
        seed=cfg.seed,
        variant=cfg.variant,
        selected_extractors=selected,
        evaluation=table,
        fusion_rows=fusion_rows,
        vote_rows=vote_rows,
        chosen_hyperparams=chosen,
        transform_log=transform_log,
        wall_seconds=wall,
    )
    _write_report_files(cfg, report, steps)
    if cfg.emit_plot_data:
        _write_plot_data(out, report)
    return report


def _json_ready(value):
    if isinstance(value, (np.integer,)):
        return int(value)
    if isinstance(value, (np.floating,)):
        return float(value)
    if isinstance(value, np.ndarray):
        return [_json_ready(v) for v in value.tolist()]
    if isinstance(value, dict):
        return {str(k): _json_ready(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_json_ready(v) for v in value]
    if isinstance(value, Path):
        return str(value)
    return value


def _write_report_files(cfg: ExperimentConfig, report: RunReport,
                        steps: list[SelectionStep]) -> None:
    payload = {
        "artifact_version": __version__,
        "seed": report.seed,
        "variant": report.variant,
        "folds": cfg.folds,
        "k_top": cfg.k_top,
        "families": list(cfg.families),
        "selected_extractors": report.selected_extractors,
        "selection_trace": [
            {"extractor": s.extractor_id, "mean": s.mean, "std": s.std,
             "family": s.family_key, "action": s.action}
            for s in steps
        ],
        "evaluation": {
            "extractors": report.evaluation.extractor_ids,
            "families": report.evaluation.families,
            "cells": report.evaluation.cells,
        },
        "fusion": report.fusion_rows,
        "vote": report.vote_rows,
        "chosen_hyperparams": report.chosen_hyperparams,
        "transform_log": report.transform_log,
        "wall_seconds": report.wall_seconds,
    }
    with open(report.output_dir / "report.json", "w", encoding="ascii") as fh:
        json.dump(_json_ready(payload), fh, indent=2, sort_keys=True)
        fh.write("\n")

    lines = [
        f"fusevote {__version__} run summary",
        f"variant: {report.variant}   seed: {report.seed}   folds: {cfg.folds}",
        f"feature sets evaluated: {len(report.evaluation.extractor_ids)}",
        f"selected extractors: {', '.join(report.selected_extractors)}",
        "",
        "fused-candidate test accuracy:",
    ]
    for tag, row in report.fusion_rows.items():
        avg = float(np.mean(list(row.values())))
        lines.append(f"  {tag}: average {avg:.4f}")
    if report.vote_rows:
        lines.append("classifier-vote test accuracy:")
        for tag, row in report.vote_rows.items():
            avg = float(np.mean(list(row.values())))
            lines.append(f"  {tag}: average {avg:.4f}")
    lines.append("")
    lines.append(f"wall seconds: {report.wall_seconds:.2f}")
    (report.output_dir / "summary.txt").write_text("\n".join(lines) + "\n",
                                                   encoding="ascii")


def _write_plot_data(out: Path, report: RunReport) -> None:
    """gnuplot-ready whitespace tables, one block per report table."""
    plot_dir = out / "plots"
    plot_dir.mkdir(exist_ok=True)
    with open(plot_dir / "evaluation.dat", "w", encoding="ascii") as fh:
        fh.write("# extractor_index row_mean row_std\n")
        means = report.evaluation.row_means()
        stds = report.evaluation.row_stds()
        for i, _ in enumerate(report.evaluation.extractor_ids):
            fh.write(f"{i} {float(means[i])!r} {float(stds[i])!r}\n")
    for name, rows in (("fusion", report.fusion_rows), ("vote", report.vote_rows)):
        if not rows:
            continue
        with open(plot_dir / f"{name}.dat", "w", encoding="ascii") as fh:
            fh.write("# row_index average\n")
            for i, (tag, row) in enumerate(rows.items()):
                fh.write(f"{i} {float(np.mean(list(row.values())))!r}\n")


def replay_selection(table_csv: Path | str, k: int,
                     rule: FamilyRule | None = None) -> list[str]:
    """Run the selection rule over an exported table and print the rank
    trace (mean, std, family skips). Returns the selected ids."""
    table = EvaluationTable.from_csv(table_csv)
    if rule is None:
        rule = FamilyRule.for_ids(table.extractor_ids)
    steps = selection_trace(table, k, rule)
    for rank, s in enumerate(steps, start=1):
        print(f"{rank:3d}. {s.extractor_id:40s} mean={s.mean:.6f} "
              f"std={s.std:.6f} family={s.family_key} -> {s.action}")
    return [s.extractor_id for s in steps if s.action == "selected"]
