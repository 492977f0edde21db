"""Shared classifier contract: family registry, hyperparameter
validation, the immutable fitted-model base class, and model
serialization.

Labels are dense integers 0..K-1 throughout. Ties in any argmax-style
decision resolve toward the lower class id.
"""

from __future__ import annotations

import abc
import pickle
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Mapping

import numpy as np

from ..data import LabeledDataset, ensure_features
from ..errors import ConfigError, FormatError, ShapeError

GBT = "GBT"
MLP = "MLP"
GAUSSIAN_NB = "GaussianNB"
ADABOOST = "AdaBoost"
KNN = "KNN"
RANDOM_FOREST = "RandomForest"
SVM_LINEAR = "SVM-linear"
SVM_SIGMOID = "SVM-sigmoid"
SVM_RBF = "SVM-RBF"

FAMILIES = (
    GBT, MLP, GAUSSIAN_NB, ADABOOST, KNN,
    RANDOM_FOREST, SVM_LINEAR, SVM_SIGMOID, SVM_RBF,
)


def _is_int(v) -> bool:
    return isinstance(v, (int, np.integer)) and not isinstance(v, bool)


def _is_num(v) -> bool:
    return _is_int(v) or isinstance(v, (float, np.floating))


def _pos_int(v) -> bool:
    return _is_int(v) and v >= 1


def _pos_num(v) -> bool:
    return _is_num(v) and v > 0


def _choice(*options):
    return lambda v: v in options


def _opt_int(v) -> bool:
    return v is None or _is_int(v)


def _gamma_ok(v) -> bool:
    return v in ("scale", "auto") or (_is_num(v) and v > 0)


def _priors_ok(v) -> bool:
    if v is None:
        return True
    try:
        arr = np.asarray(v, dtype=np.float64)
    except (TypeError, ValueError):
        return False
    return arr.ndim == 1 and arr.size >= 2 and (arr >= 0).all()


def _layers_ok(v) -> bool:
    return (
        isinstance(v, (tuple, list))
        and len(v) >= 1
        and all(_pos_int(s) for s in v)
    )


def _bool(v) -> bool:
    return isinstance(v, (bool, np.bool_))


# name -> predicate accepting a candidate value; unlisted names are rejected
PARAM_SPACES: dict[str, dict[str, Any]] = {
    GBT: {
        "max_depth": _pos_int,
        "learning_rate": _pos_num,
        "subsample": lambda v: _is_num(v) and 0 < v <= 1,
        "n_estimators": _pos_int,
    },
    MLP: {
        "hidden_layer_sizes": _layers_ok,
        "activation": _choice("relu", "tanh", "logistic"),
        "solver": _choice("adam", "sgd", "lbfgs"),
        "max_iter": _pos_int,
        "momentum": lambda v: _is_num(v) and 0 <= v < 1,
        "learning_rate_init": _pos_num,
        "loss": _choice("squared_error", "cross_entropy"),
    },
    GAUSSIAN_NB: {
        "var_smoothing": lambda v: _is_num(v) and v >= 0,
        "priors": _priors_ok,
    },
    ADABOOST: {
        "n_estimators": _pos_int,
        "learning_rate": _pos_num,
    },
    KNN: {
        "n_neighbors": _pos_int,
        "weights": _choice("uniform", "distance"),
        "algorithm": _choice("auto", "ball_tree", "kd_tree", "brute"),
        "leaf_size": _pos_int,
        "p": _pos_int,
        "metric": _choice("euclidean", "manhattan", "minkowski"),
        "n_jobs": _is_int,
    },
    RANDOM_FOREST: {
        "n_estimators": _pos_int,
        "max_depth": lambda v: v is None or _pos_int(v),
        "min_samples_split": lambda v: _is_int(v) and v >= 2,
        "min_samples_leaf": _pos_int,
        "max_features": _choice("auto", "sqrt", "log2", None),
        "bootstrap": _bool,
        "criterion": _choice("gini", "entropy"),
        "oob_score": _bool,
        "random_state": _opt_int,
    },
    SVM_LINEAR: {
        "C": _pos_num,
        "kernel": _choice("linear"),
        "tol": _pos_num,
        "class_weight": _choice(None, "balanced"),
        "random_state": _opt_int,
    },
    SVM_SIGMOID: {
        "kernel": _choice("sigmoid"),
        "C": _pos_num,
        "gamma": _gamma_ok,
        "coef0": _is_num,
        "tol": _pos_num,
        "class_weight": _choice(None, "balanced"),
        "shrinking": _bool,
        "probability": _bool,
        "cache_size": _pos_num,
        "random_state": _opt_int,
    },
    SVM_RBF: {
        "C": _pos_num,
        "gamma": _gamma_ok,
        "kernel": _choice("rbf"),
        "class_weight": _choice(None, "balanced"),
        "shrinking": _bool,
        "probability": _bool,
        "tol": _pos_num,
        "cache_size": _pos_num,
        "max_iter": lambda v: _is_int(v) and (v == -1 or v >= 1),
        "random_state": _opt_int,
    },
}


def validate_hyperparams(family: str, params: Mapping[str, Any]) -> None:
    if family not in PARAM_SPACES:
        raise ConfigError(f"unknown classifier family {family!r}")
    space = PARAM_SPACES[family]
    for name, value in params.items():
        if name not in space:
            raise ConfigError(f"{family}: unknown hyperparameter {name!r}")
        if not space[name](value):
            raise ConfigError(f"{family}: invalid value {value!r} for {name!r}")


def _canonical(params: Mapping[str, Any]) -> tuple:
    def freeze(v):
        if isinstance(v, (list, tuple)):
            return tuple(freeze(x) for x in v)
        if isinstance(v, np.generic):
            return v.item()
        return v

    return tuple(sorted((k, freeze(v)) for k, v in params.items()))


@dataclass(frozen=True)
class ClassifierSpec:
    """A classifier family with hyperparameters and a fit seed."""

    family: str
    hyperparams: Mapping[str, Any] = field(default_factory=dict)
    seed: int = 0

    def __post_init__(self):
        validate_hyperparams(self.family, self.hyperparams)
        object.__setattr__(self, "hyperparams", dict(self.hyperparams))

    def get(self, name: str, default=None):
        return self.hyperparams.get(name, default)

    @property
    def effective_seed(self) -> int:
        """random_state hyperparameter wins over the spec seed."""
        rs = self.hyperparams.get("random_state")
        return int(rs) if rs is not None else int(self.seed)

    def key(self) -> tuple:
        return (self.family, _canonical(self.hyperparams), self.seed)


class FittedModel(abc.ABC):
    """Immutable trained classifier exposing predict / predict_proba.

    Subclasses implement `predict_proba`; `predict` is its argmax, so
    the two are consistent by construction (ties fall to the lower
    class id).
    """

    def __init__(self, spec: ClassifierSpec, class_count: int, n_features: int):
        self.spec = spec
        self.class_count = int(class_count)
        self.n_features = int(n_features)

    def _check_input(self, x) -> np.ndarray:
        x = ensure_features(x, name="query")
        if x.shape[1] != self.n_features:
            raise ShapeError(
                f"{self.spec.family}: query has {x.shape[1]} features, "
                f"model was trained on {self.n_features}"
            )
        return x

    @abc.abstractmethod
    def predict_proba(self, x) -> np.ndarray:
        """Per-class probabilities; each row sums to 1."""

    def predict(self, x) -> np.ndarray:
        return np.argmax(self.predict_proba(x), axis=1).astype(np.int64)

    def accuracy(self, ds: LabeledDataset) -> float:
        return float(np.mean(self.predict(ds.features) == ds.labels))


def softmax(scores: np.ndarray) -> np.ndarray:
    z = scores - scores.max(axis=1, keepdims=True)
    e = np.exp(z)
    return e / e.sum(axis=1, keepdims=True)


MODEL_MAGIC = b"FVM1"


def save_model(model: FittedModel, path: Path | str) -> Path:
    """Serialize a fitted model (versioned binary blob, format private
    to this package)."""
    path = Path(path)
    with open(path, "wb") as fh:
        fh.write(MODEL_MAGIC)
        pickle.dump(model, fh, protocol=4)
    return path


def load_model(path: Path | str) -> FittedModel:
    with open(path, "rb") as fh:
        magic = fh.read(len(MODEL_MAGIC))
        if magic != MODEL_MAGIC:
            raise FormatError(f"{path}: not a serialized model")
        model = pickle.load(fh)
    if not isinstance(model, FittedModel):
        raise FormatError(f"{path}: blob does not contain a fitted model")
    return model
