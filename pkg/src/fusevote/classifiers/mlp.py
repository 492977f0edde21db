"""Multilayer perceptron trained full-batch with Adam (default),
momentum SGD, or L-BFGS.

Forward pass per layer: y = W h + b with the configured activation on
hidden layers and a linear output layer. The default loss is the mean
squared error against one-hot targets, (1/N) sum_i ||y_i - yhat_i||^2;
softmax cross-entropy is available through the `loss` hyperparameter.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..data import LabeledDataset, ensure_features
from ..errors import TrainingError
from .base import ClassifierSpec, FittedModel, softmax
from .._rng import rng_for

DEFAULT_LEARNING_RATE = 1e-3
ADAM_BETA1 = 0.9
ADAM_BETA2 = 0.999
ADAM_EPS = 1e-8


@dataclass
class AdamState:
    """First/second moment accumulators and the step counter."""

    m: np.ndarray
    v: np.ndarray
    t: int = 0


def adam_step(state: AdamState, params: np.ndarray, grad: np.ndarray,
              lr: float, beta1: float = ADAM_BETA1, beta2: float = ADAM_BETA2,
              eps: float = ADAM_EPS) -> np.ndarray:
    """One Adam update: decay the moment estimates, correct their
    startup bias, and scale the step by the corrected RMS."""
    state.t += 1
    state.m = beta1 * state.m + (1.0 - beta1) * grad
    state.v = beta2 * state.v + (1.0 - beta2) * grad**2
    m_hat = state.m / (1.0 - beta1**state.t)
    v_hat = state.v / (1.0 - beta2**state.t)
    return params - lr * m_hat / (np.sqrt(v_hat) + eps)


def _activate(z: np.ndarray, kind: str) -> np.ndarray:
    if kind == "relu":
        return np.maximum(z, 0.0)
    if kind == "tanh":
        return np.tanh(z)
    return 1.0 / (1.0 + np.exp(-np.clip(z, -500, 500)))  # logistic


def _activate_grad(h: np.ndarray, kind: str) -> np.ndarray:
    # expressed in terms of the activation output h
    if kind == "relu":
        return (h > 0.0).astype(np.float64)
    if kind == "tanh":
        return 1.0 - h**2
    return h * (1.0 - h)


class _Net:
    """Weight shapes and flat-vector packing for a fixed architecture."""

    def __init__(self, sizes: list[int], activation: str, loss: str):
        self.sizes = sizes
        self.activation = activation
        self.loss = loss
        self.shapes = []
        for fan_in, fan_out in zip(sizes, sizes[1:]):
            self.shapes.append((fan_out, fan_in))
            self.shapes.append((fan_out,))
        self.n_params = sum(int(np.prod(s)) for s in self.shapes)

    def init_params(self, rng: np.random.Generator) -> np.ndarray:
        chunks = []
        for shape in self.shapes:
            if len(shape) == 2:
                bound = np.sqrt(6.0 / (shape[0] + shape[1]))
                chunks.append(rng.uniform(-bound, bound, size=shape).ravel())
            else:
                chunks.append(np.zeros(shape))
        return np.concatenate(chunks)

    def unpack(self, flat: np.ndarray) -> list[tuple[np.ndarray, np.ndarray]]:
        layers, pos = [], 0
        for i in range(0, len(self.shapes), 2):
            w_shape, b_shape = self.shapes[i], self.shapes[i + 1]
            w = flat[pos:pos + w_shape[0] * w_shape[1]].reshape(w_shape)
            pos += w.size
            b = flat[pos:pos + b_shape[0]]
            pos += b.size
            layers.append((w, b))
        return layers

    def forward(self, flat: np.ndarray, x: np.ndarray) -> np.ndarray:
        h = x
        layers = self.unpack(flat)
        for w, b in layers[:-1]:
            h = _activate(h @ w.T + b, self.activation)
        w, b = layers[-1]
        return h @ w.T + b

    def loss_and_grad(self, flat: np.ndarray, x: np.ndarray,
                      onehot: np.ndarray) -> tuple[float, np.ndarray]:
        # overflow here is how divergence shows up; the trainers detect
        # the resulting non-finite loss and raise TrainingError
        with np.errstate(over="ignore", invalid="ignore"):
            return self._loss_and_grad(flat, x, onehot)

    def _loss_and_grad(self, flat: np.ndarray, x: np.ndarray,
                       onehot: np.ndarray) -> tuple[float, np.ndarray]:
        n = x.shape[0]
        layers = self.unpack(flat)
        hs = [x]
        for w, b in layers[:-1]:
            hs.append(_activate(hs[-1] @ w.T + b, self.activation))
        w, b = layers[-1]
        out = hs[-1] @ w.T + b

        if self.loss == "cross_entropy":
            p = softmax(out)
            eps = 1e-12
            loss = float(-np.sum(onehot * np.log(p + eps)) / n)
            delta = (p - onehot) / n
        else:  # squared error on the linear outputs
            diff = out - onehot
            loss = float(np.sum(diff**2) / n)
            delta = 2.0 * diff / n

        grads = [None] * len(layers)
        for li in range(len(layers) - 1, -1, -1):
            w, b = layers[li]
            gw = delta.T @ hs[li]
            gb = delta.sum(axis=0)
            grads[li] = (gw, gb)
            if li > 0:
                delta = (delta @ w) * _activate_grad(hs[li], self.activation)
        flat_grad = np.concatenate([np.concatenate([gw.ravel(), gb]) for gw, gb in grads])
        return loss, flat_grad


def _train_adam(net: _Net, params: np.ndarray, x, onehot, lr, epochs) -> np.ndarray:
    state = AdamState(np.zeros_like(params), np.zeros_like(params))
    for _ in range(epochs):
        loss, grad = net.loss_and_grad(params, x, onehot)
        if not np.isfinite(loss):
            raise TrainingError(f"MLP loss diverged (loss={loss})")
        params = adam_step(state, params, grad, lr)
    return params


def _train_sgd(net: _Net, params: np.ndarray, x, onehot, lr, epochs,
               momentum: float) -> np.ndarray:
    velocity = np.zeros_like(params)
    for _ in range(epochs):
        loss, grad = net.loss_and_grad(params, x, onehot)
        if not np.isfinite(loss):
            raise TrainingError(f"MLP loss diverged (loss={loss})")
        velocity = momentum * velocity - lr * grad
        params = params + velocity
    return params


def _train_lbfgs(net: _Net, params: np.ndarray, x, onehot, max_iter,
                 history: int = 10) -> np.ndarray:
    """Two-loop-recursion L-BFGS with backtracking line search."""
    s_list: list[np.ndarray] = []
    y_list: list[np.ndarray] = []
    loss, grad = net.loss_and_grad(params, x, onehot)
    for _ in range(max_iter):
        if not np.isfinite(loss):
            raise TrainingError(f"MLP loss diverged (loss={loss})")
        if np.linalg.norm(grad) < 1e-8:
            break
        q = grad.copy()
        alphas = []
        for s, y in reversed(list(zip(s_list, y_list))):
            rho = 1.0 / (y @ s)
            a = rho * (s @ q)
            alphas.append((a, rho, s, y))
            q -= a * y
        if y_list:
            y_last, s_last = y_list[-1], s_list[-1]
            q *= (s_last @ y_last) / (y_last @ y_last)
        for a, rho, s, y in reversed(alphas):
            q += s * (a - rho * (y @ q))
        direction = -q
        slope = grad @ direction
        if slope >= 0:  # not a descent direction, restart from steepest
            direction = -grad
            slope = -(grad @ grad)
        step = 1.0
        for _ in range(30):
            cand = params + step * direction
            new_loss, new_grad = net.loss_and_grad(cand, x, onehot)
            if np.isfinite(new_loss) and new_loss <= loss + 1e-4 * step * slope:
                break
            step *= 0.5
        else:
            break
        s_vec, y_vec = cand - params, new_grad - grad
        if s_vec @ y_vec > 1e-12:
            s_list.append(s_vec)
            y_list.append(y_vec)
            if len(s_list) > history:
                s_list.pop(0)
                y_list.pop(0)
        params, loss, grad = cand, new_loss, new_grad
    return params


class MLPModel(FittedModel):
    def __init__(self, spec, class_count, n_features, net: _Net, params: np.ndarray):
        super().__init__(spec, class_count, n_features)
        self.net = net
        self.params = params

    def decision_values(self, x) -> np.ndarray:
        return self.net.forward(self.params, self._check_input(x))

    def predict_proba(self, x) -> np.ndarray:
        return softmax(self.decision_values(x))


def mlp_fit(train: LabeledDataset, spec: ClassifierSpec) -> MLPModel:
    """Train on one-hot targets with the configured solver.

    Training is full-batch for max_iter epochs with a fixed learning
    rate (default 1e-3); there is no early stopping. Raises
    TrainingError if the loss leaves the reals.
    """
    x = ensure_features(train.features)
    hidden = tuple(spec.get("hidden_layer_sizes", (100,)))
    activation = spec.get("activation", "relu")
    solver = spec.get("solver", "adam")
    epochs = int(spec.get("max_iter", 1000))
    lr = float(spec.get("learning_rate_init", DEFAULT_LEARNING_RATE))
    momentum = float(spec.get("momentum", 0.9))
    loss_kind = spec.get("loss", "squared_error")

    k = train.class_count
    net = _Net([x.shape[1], *hidden, k], activation, loss_kind)
    onehot = np.eye(k)[train.labels]
    params = net.init_params(rng_for(spec.effective_seed, 0x3F))
    if solver == "adam":
        params = _train_adam(net, params, x, onehot, lr, epochs)
    elif solver == "sgd":
        params = _train_sgd(net, params, x, onehot, lr, epochs, momentum)
    else:
        params = _train_lbfgs(net, params, x, onehot, epochs)
    return MLPModel(spec, k, x.shape[1], net, params)
