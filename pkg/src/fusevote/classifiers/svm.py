"""Support vector machines with linear, sigmoid and RBF kernels,
solved by two-variable coordinate ascent on the dual (SMO with
maximal-violating-pair working sets).

Binary problems decide by the sign of the kernel expansion
f(x) = sum_n alpha_n y_n K(x_n, x) + b; multiclass uses one-vs-rest
argmax over the per-class decision values. Probabilities are a softmax
over decision values (a stand-in: the dual solver produces margins,
not calibrated probabilities).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..data import LabeledDataset, ensure_features
from ..errors import ConvergenceError, FitError, ShapeError
from .base import ClassifierSpec, FittedModel, softmax

DEFAULT_TOL = 1e-3
DEFAULT_MAX_PAIR_UPDATES = 1_000_000

KERNELS = ("linear", "sigmoid", "rbf")


def kernel_eval(kind: str, x, z, gamma: float = 1.0, coef0: float = 0.0) -> float:
    """Kernel value for a single pair of equal-length vectors.

    linear: <x, z>; sigmoid: tanh(gamma * <x, z> + coef0);
    rbf: exp(-gamma * ||x - z||^2).
    """
    x = np.asarray(x, dtype=np.float64).reshape(-1)
    z = np.asarray(z, dtype=np.float64).reshape(-1)
    if x.shape != z.shape:
        raise ShapeError(f"kernel operands differ in length: {x.shape} vs {z.shape}")
    return float(kernel_matrix(kind, x[None, :], z[None, :], gamma, coef0)[0, 0])


def kernel_matrix(kind: str, a: np.ndarray, b: np.ndarray,
                  gamma: float, coef0: float) -> np.ndarray:
    """Gram matrix K[i, j] = k(a_i, b_j)."""
    if kind == "linear":
        return a @ b.T
    if kind == "sigmoid":
        return np.tanh(gamma * (a @ b.T) + coef0)
    if kind == "rbf":
        sq = (
            np.einsum("ij,ij->i", a, a)[:, None]
            - 2.0 * (a @ b.T)
            + np.einsum("ij,ij->i", b, b)[None, :]
        )
        return np.exp(-gamma * np.maximum(sq, 0.0))
    raise ShapeError(f"unknown kernel {kind!r}")


def resolve_gamma(gamma, x: np.ndarray) -> float:
    """'scale' -> 1 / (d * var(X)), 'auto' -> 1 / d, numbers pass through."""
    d = x.shape[1]
    if gamma == "scale":
        var = float(x.var())
        return 1.0 / (d * var) if var > 0 else 1.0 / d
    if gamma == "auto":
        return 1.0 / d
    return float(gamma)


@dataclass
class _BinarySolution:
    """Dual solution of one +1/-1 subproblem.

    `dual_coef` holds alpha_n * y_n for the support vectors only.
    """

    support: np.ndarray        # indices into the training set
    dual_coef: np.ndarray
    bias: float
    kkt_residual: float
    pair_updates: int


def _smo_solve(K: np.ndarray, y: np.ndarray, C: np.ndarray,
               tol: float, max_updates: int) -> _BinarySolution:
    """Maximal-violating-pair SMO on the soft-margin dual.

    Works on beta_t = alpha_t * y_t constrained to [A_t, B_t] with
    A_t = min(0, y_t C_t), B_t = max(0, y_t C_t), which keeps
    sum(alpha * y) = 0 invariant under every pair update. The KKT
    residual reported is max(crit over I_up) - min(crit over I_low)
    where crit_t = y_t - sum_s beta_s K_st.
    """
    n = y.shape[0]
    beta = np.zeros(n)
    lo = np.minimum(0.0, y * C)
    hi = np.maximum(0.0, y * C)
    crit = y.astype(np.float64).copy()  # y_t - K @ beta, with beta = 0

    updates = 0
    while True:
        up = beta < hi - 1e-12
        down = beta > lo + 1e-12
        if not up.any() or not down.any():
            residual = 0.0
            break
        i = int(np.flatnonzero(up)[np.argmax(crit[up])])
        j = int(np.flatnonzero(down)[np.argmin(crit[down])])
        residual = crit[i] - crit[j]
        if residual <= tol:
            break
        if updates >= max_updates:
            raise ConvergenceError(
                f"SMO hit {max_updates} pair updates with KKT residual "
                f"{residual:.3e} > tol {tol:.1e}",
                residual=float(residual),
            )
        quad = K[i, i] + K[j, j] - 2.0 * K[i, j]
        step = min(hi[i] - beta[i], beta[j] - lo[j])
        if quad > 1e-12:
            step = min(step, residual / quad)
        beta[i] = min(beta[i] + step, hi[i])
        beta[j] = max(beta[j] - step, lo[j])
        crit -= step * (K[i] - K[j])
        updates += 1

    free = (beta > lo + 1e-9) & (beta < hi - 1e-9)
    if free.any():
        bias = float(crit[free].mean())
    else:
        up = beta < hi - 1e-12
        down = beta > lo + 1e-12
        top = crit[up].max() if up.any() else 0.0
        bot = crit[down].min() if down.any() else top
        bias = float((top + bot) / 2.0)

    support = np.flatnonzero(np.abs(beta) > 1e-12)
    return _BinarySolution(
        support=support,
        dual_coef=beta[support],
        bias=bias,
        kkt_residual=float(max(residual, 0.0)),
        pair_updates=updates,
    )


def _per_sample_C(y: np.ndarray, C: float, class_weight) -> np.ndarray:
    out = np.full(y.shape[0], float(C))
    if class_weight == "balanced":
        n = y.shape[0]
        for sign in (-1.0, 1.0):
            count = int((y == sign).sum())
            out[y == sign] *= n / (2.0 * count)
    return out


class SVMModel(FittedModel):
    """One-vs-rest set of kernel expansions over shared support data."""

    def __init__(self, spec, class_count, n_features, kernel, gamma, coef0,
                 train_x, solutions):
        super().__init__(spec, class_count, n_features)
        self.kernel = kernel
        self.gamma = gamma
        self.coef0 = coef0
        self._train_x = train_x
        self._solutions = solutions

    @property
    def kkt_residual(self) -> float:
        return max(sol.kkt_residual for sol in self._solutions)

    def decision_values(self, x) -> np.ndarray:
        """Column c holds f_c(x) for the class-c-vs-rest expansion
        (a single column for binary problems)."""
        x = self._check_input(x)
        cols = []
        for sol in self._solutions:
            sv = self._train_x[sol.support]
            K = kernel_matrix(self.kernel, x, sv, self.gamma, self.coef0)
            cols.append(K @ sol.dual_coef + sol.bias)
        return np.column_stack(cols)

    def predict_proba(self, x) -> np.ndarray:
        values = self.decision_values(x)
        if self.class_count == 2:
            values = np.column_stack([-values[:, 0], values[:, 0]])
        return softmax(values)

    def predict(self, x) -> np.ndarray:
        values = self.decision_values(x)
        if self.class_count == 2:
            return (values[:, 0] > 0).astype(np.int64)
        return np.argmax(values, axis=1).astype(np.int64)


def svm_fit(train: LabeledDataset, spec: ClassifierSpec) -> SVMModel:
    """Fit an SVM; kernel comes from the family (linear / sigmoid /
    rbf), box constraint from C and class_weight.

    Binary data trains one subproblem with class 1 mapped to +1;
    multiclass trains one subproblem per class (one-vs-rest). Raises
    ConvergenceError when a subproblem exhausts its pair-update cap
    (max_iter hyperparameter; -1 means the default cap of 1e6).
    """
    if train.class_count < 2:
        raise FitError("SVM needs at least 2 classes")
    x = ensure_features(train.features)
    kernel = {"SVM-linear": "linear", "SVM-sigmoid": "sigmoid", "SVM-RBF": "rbf"}[spec.family]
    gamma = resolve_gamma(spec.get("gamma", "scale"), x) if kernel != "linear" else 1.0
    coef0 = float(spec.get("coef0", 0.0))
    C = float(spec.get("C", 1.0))
    tol = float(spec.get("tol", DEFAULT_TOL))
    cap = int(spec.get("max_iter", -1))
    if cap == -1:
        cap = DEFAULT_MAX_PAIR_UPDATES

    K = kernel_matrix(kernel, x, x, gamma, coef0)
    targets = [1] if train.class_count == 2 else list(range(train.class_count))
    solutions = []
    for cls in targets:
        y = np.where(train.labels == cls, 1.0, -1.0)
        Cvec = _per_sample_C(y, C, spec.get("class_weight"))
        solutions.append(_smo_solve(K, y, Cvec, tol, cap))
    return SVMModel(spec, train.class_count, x.shape[1], kernel, gamma, coef0,
                    x.copy(), solutions)


def kkt_residual_from_scratch(model: SVMModel, train: LabeledDataset) -> float:
    """Recompute the worst KKT violation over the training points from
    the stored dual coefficients (independent of solver bookkeeping)."""
    x = ensure_features(train.features)
    worst = 0.0
    targets = [1] if model.class_count == 2 else list(range(model.class_count))
    for cls, sol in zip(targets, model._solutions):
        y = np.where(train.labels == cls, 1.0, -1.0)
        C = _per_sample_C(y, float(model.spec.get("C", 1.0)),
                          model.spec.get("class_weight"))
        beta = np.zeros(x.shape[0])
        beta[sol.support] = sol.dual_coef
        K = kernel_matrix(model.kernel, x, x, model.gamma, model.coef0)
        crit = y - K @ beta
        lo = np.minimum(0.0, y * C)
        hi = np.maximum(0.0, y * C)
        up = beta < hi - 1e-12
        down = beta > lo + 1e-12
        if up.any() and down.any():
            worst = max(worst, float(crit[up].max() - crit[down].min()))
    return worst
