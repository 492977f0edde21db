"""Exhaustive grid search scored by stratified cross-validation.

The search expands a cartesian hyperparameter grid in lexicographic
order over the axes as listed, scores every assignment by mean CV
accuracy on the training partition, and returns the argmax (loss is
one minus accuracy). Ties prefer the lower fold-accuracy standard
deviation, then the earlier grid position, so runs are comparable
across machines and worker counts.
"""

from __future__ import annotations

import csv
import itertools
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Mapping, Sequence

import numpy as np

from .classifiers import ClassifierSpec, fit
from .classifiers.base import FAMILIES, validate_hyperparams
from .data import LabeledDataset
from .errors import ConfigError, FoldError, GridSizeError
from ._rng import derive_seed, rng_for

DEFAULT_FOLDS = 5
GRID_CAP = 100_000


@dataclass(frozen=True)
class GridSpec:
    """Cartesian search space: ordered axes of candidate values."""

    family: str
    axes: Mapping[str, Sequence[Any]]

    def __post_init__(self):
        if self.family not in FAMILIES:
            raise ConfigError(f"unknown classifier family {self.family!r}")
        if not self.axes:
            raise ConfigError(f"{self.family}: grid must have at least one axis")
        axes = {str(k): list(v) for k, v in self.axes.items()}
        for name, values in axes.items():
            if not values:
                raise ConfigError(f"{self.family}: axis {name!r} is empty")
            for v in values:
                validate_hyperparams(self.family, {name: v})
        object.__setattr__(self, "axes", axes)

    @property
    def size(self) -> int:
        out = 1
        for values in self.axes.values():
            out *= len(values)
        return out


def expand_grid(grid: GridSpec, cap: int = GRID_CAP) -> list[dict[str, Any]]:
    """All assignments, lexicographic over the axes as listed."""
    if grid.size > cap:
        raise GridSizeError(
            f"{grid.family}: grid has {grid.size} assignments, cap is {cap}"
        )
    names = list(grid.axes)
    return [
        dict(zip(names, combo))
        for combo in itertools.product(*(grid.axes[n] for n in names))
    ]


@dataclass(frozen=True)
class TrialResult:
    """CV outcome of one hyperparameter assignment."""

    assignment: dict[str, Any]
    fold_accuracies: tuple[float, ...]
    mean: float
    std: float


def stratified_fold_indices(labels: np.ndarray, folds: int, seed: int) -> list[np.ndarray]:
    """Disjoint exhaustive fold assignment preserving class ratios.

    Each class's indices are shuffled (seeded) and dealt round-robin,
    so fold sizes and per-class counts differ by at most one.
    """
    labels = np.asarray(labels, dtype=np.int64)
    if folds < 2:
        raise FoldError(f"need at least 2 folds, got {folds}")
    rng = rng_for(seed, 0xF0)
    buckets: list[list[int]] = [[] for _ in range(folds)]
    for cls in np.unique(labels):
        idx = np.flatnonzero(labels == cls)
        if idx.shape[0] < folds:
            raise FoldError(
                f"class {int(cls)} has {idx.shape[0]} samples, fewer than "
                f"{folds} folds"
            )
        perm = idx[rng.permutation(idx.shape[0])]
        for pos, sample in enumerate(perm):
            buckets[pos % folds].append(int(sample))
    return [np.sort(np.array(b, dtype=np.int64)) for b in buckets]


def _fold_run(train: LabeledDataset, spec: ClassifierSpec,
              fold_sets: list[np.ndarray]) -> tuple[list[float], list[np.ndarray]]:
    accuracies, predictions = [], []
    all_idx = np.arange(train.rows)
    for held_out in fold_sets:
        mask = np.ones(train.rows, dtype=bool)
        mask[held_out] = False
        model = fit(train.take(all_idx[mask]), spec)
        pred = model.predict(train.features[held_out])
        accuracies.append(float(np.mean(pred == train.labels[held_out])))
        predictions.append(pred)
    return accuracies, predictions


def cross_validate(train: LabeledDataset, spec: ClassifierSpec, folds: int,
                   seed: int) -> TrialResult:
    """Stratified k-fold accuracy of one spec; deterministic given the
    seed and independent of execution order."""
    fold_sets = stratified_fold_indices(train.labels, folds, seed)
    accuracies, _ = _fold_run(train, spec, fold_sets)
    arr = np.asarray(accuracies)
    return TrialResult(dict(spec.hyperparams), tuple(accuracies),
                       float(arr.mean()), float(arr.std()))


def cross_validate_predictions(
    train: LabeledDataset, spec: ClassifierSpec, folds: int, seed: int
) -> tuple[TrialResult, list[tuple[np.ndarray, np.ndarray]]]:
    """cross_validate plus the held-out (indices, predictions) pairs,
    for persisting recomputable evidence of each fold accuracy."""
    fold_sets = stratified_fold_indices(train.labels, folds, seed)
    accuracies, predictions = _fold_run(train, spec, fold_sets)
    arr = np.asarray(accuracies)
    trial = TrialResult(dict(spec.hyperparams), tuple(accuracies),
                        float(arr.mean()), float(arr.std()))
    return trial, list(zip(fold_sets, predictions))


def _trial_spec(grid: GridSpec, assignment: dict, seed: int, index: int) -> ClassifierSpec:
    return ClassifierSpec(grid.family, assignment,
                          seed=derive_seed(seed, 0x7A, index))


def _run_trial(payload) -> TrialResult:
    train, grid, assignment, folds, seed, index = payload
    return cross_validate(train, _trial_spec(grid, assignment, seed, index),
                          folds, seed)


def grid_search(train: LabeledDataset, grid: GridSpec, folds: int = DEFAULT_FOLDS,
                seed: int = 0, n_jobs: int = 1,
                cap: int = GRID_CAP) -> tuple[ClassifierSpec, list[TrialResult]]:
    """Evaluate every assignment; return the winner and all trials.

    Per-trial model seeds derive from (seed, trial index), so serial
    and parallel runs produce identical trial lists.
    """
    assignments = expand_grid(grid, cap=cap)
    payloads = [
        (train, grid, assignment, folds, seed, i)
        for i, assignment in enumerate(assignments)
    ]
    if n_jobs > 1:
        with ProcessPoolExecutor(max_workers=n_jobs) as pool:
            trials = list(pool.map(_run_trial, payloads, chunksize=8))
    else:
        trials = [_run_trial(p) for p in payloads]

    best_index = best_trial_index(trials)
    return _trial_spec(grid, assignments[best_index], seed, best_index), trials


def best_trial_index(trials: Sequence[TrialResult]) -> int:
    """Highest mean accuracy; ties by lower std, then earlier position."""
    best = 0
    for i, trial in enumerate(trials[1:], start=1):
        leader = trials[best]
        if (trial.mean, -trial.std) > (leader.mean, -leader.std):
            best = i
    return best


def trials_to_csv(grid: GridSpec, trials: list[TrialResult], path: Path | str) -> Path:
    """One row per assignment: axis values, fold accuracies, mean, std."""
    path = Path(path)
    names = list(grid.axes)
    folds = len(trials[0].fold_accuracies) if trials else 0
    with open(path, "w", newline="", encoding="ascii") as fh:
        writer = csv.writer(fh)
        writer.writerow(names + [f"fold_{i}" for i in range(folds)] + ["mean", "std"])
        for trial in trials:
            row = [_csv_value(trial.assignment[n]) for n in names]
            row += [repr(a) for a in trial.fold_accuracies]
            row += [repr(trial.mean), repr(trial.std)]
            writer.writerow(row)
    return path


def _csv_value(v) -> str:
    if isinstance(v, str):
        return v
    if isinstance(v, (tuple, list)):
        return "(" + " ".join(str(int(s)) for s in v) + ")"
    if isinstance(v, np.generic):
        v = v.item()
    return repr(v)


# Stock search spaces per family. `for_dataset` prunes values that are
# structurally invalid for a dataset (e.g. binary priors on 4 classes).
STOCK_GRIDS: dict[str, dict[str, list]] = {
    "GBT": {
        "max_depth": [3, 5, 7],
        "learning_rate": [0.1, 0.01, 0.001],
        "subsample": [0.5, 0.7, 1],
        "n_estimators": [100, 200, 300],
    },
    "MLP": {
        "hidden_layer_sizes": [
            (50,), (100, 22), (100, 100, 50), (100, 50, 36, 30),
            (100, 100, 200, 150, 100),
        ],
        "activation": ["relu", "tanh", "logistic"],
        "solver": ["adam", "sgd", "lbfgs"],
        "max_iter": [1000],
        "momentum": [0.9, 0.95, 0.99],
    },
    "GaussianNB": {
        "var_smoothing": [1e-9, 1e-8, 1e-7, 1e-6, 1e-5],
        "priors": [None, (0.3, 0.7), (0.4, 0.6), (0.5, 0.5)],
    },
    "AdaBoost": {
        "n_estimators": [50, 70, 90, 120, 180, 200],
        "learning_rate": [0.001, 0.01, 0.1, 1, 10],
    },
    "KNN": {
        "n_neighbors": list(range(1, 31)),
        "weights": ["uniform", "distance"],
        "algorithm": ["auto", "ball_tree", "kd_tree", "brute"],
        "leaf_size": list(range(10, 51, 5)),
        "p": [1, 2],
        "metric": ["euclidean", "manhattan", "minkowski"],
        "n_jobs": [-1],
    },
    "RandomForest": {
        "n_estimators": [100, 200, 300, 400, 500],
        "max_depth": [None, 10, 20, 30, 40, 50],
        "min_samples_split": [2, 5, 10],
        "min_samples_leaf": [1, 2, 4],
        "max_features": ["auto", "sqrt", "log2"],
        "bootstrap": [True, False],
        "criterion": ["gini", "entropy"],
        "oob_score": [True, False],
        "random_state": [42],
    },
    "SVM-linear": {
        "C": [0.1, 1, 10, 100, 1000],
        "kernel": ["linear"],
        "tol": [1e-3, 1e-4, 1e-5],
        "class_weight": [None, "balanced"],
        "random_state": [42],
    },
    "SVM-sigmoid": {
        "kernel": ["sigmoid"],
        "C": [0.1, 1, 10, 100],
        "gamma": ["scale", "auto"],
        "coef0": [0.0, 0.1, 0.5, 1.0],
        "tol": [1e-3, 1e-4, 1e-5],
        "class_weight": [None, "balanced"],
        "shrinking": [True, False],
        "probability": [True, False],
        "cache_size": [200.0, 500.0, 100.0],
        "random_state": [42],
    },
    "SVM-RBF": {
        "C": [0.1, 1, 10, 100],
        "gamma": ["scale", "auto", 0.1, 1, 10],
        "kernel": ["rbf"],
        "class_weight": [None, "balanced"],
        "shrinking": [True, False],
        "probability": [True, False],
        "tol": [1e-3, 1e-4],
        "cache_size": [200, 500, 1000],
        "max_iter": [-1, 1000, 5000],
    },
}


def stock_grid(family: str, n_classes: int | None = None) -> GridSpec:
    """The family's stock search space, pruned for the dataset shape."""
    if family not in STOCK_GRIDS:
        raise ConfigError(f"no stock grid for family {family!r}")
    axes = {k: list(v) for k, v in STOCK_GRIDS[family].items()}
    if family == "GaussianNB" and n_classes is not None:
        axes["priors"] = [
            p for p in axes["priors"] if p is None or len(p) == n_classes
        ]
    return GridSpec(family, axes)
