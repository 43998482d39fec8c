"""Dense feed-forward kernel for the assistive controller.

A fixed family of small MLPs: GELU hidden layers, a width-6 bottleneck
followed by tanh, and a linear output that stacks per-dimension heads.
Reverse-mode gradients and the SGD loop are written out directly on numpy
arrays; no ML framework is involved.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

import numpy as np

from .rng import Xoshiro256

BOTTLENECK_WIDTH = 6

_GELU_C = math.sqrt(2.0 / math.pi)
_GELU_A = 0.044715


class InputDimensionError(ValueError):
    """Raised when an input vector does not match the model's input width."""


class TrainingDivergedError(RuntimeError):
    """Raised when the training loss becomes non-finite."""

    def __init__(self, epoch: int, loss_value: float):
        super().__init__(f"training diverged at epoch {epoch} (loss={loss_value!r})")
        self.epoch = epoch


def gelu(x: np.ndarray) -> np.ndarray:
    """GELU, tanh approximation: 0.5*x*(1 + tanh(sqrt(2/pi)*(x + 0.044715*x^3)))."""
    return 0.5 * x * (1.0 + np.tanh(_GELU_C * (x + _GELU_A * x ** 3)))


def gelu_grad(x: np.ndarray) -> np.ndarray:
    u = _GELU_C * (x + _GELU_A * x ** 3)
    t = np.tanh(u)
    return 0.5 * (1.0 + t) + 0.5 * x * (1.0 - t ** 2) * _GELU_C * (1.0 + 3.0 * _GELU_A * x ** 2)


@dataclass
class Mlp:
    """Feed-forward net with a designated width-6 bottleneck.

    ``layer_dims`` chains input -> hidden... -> bottleneck(6) -> output, where
    the output width is ``n_heads * n_a`` stacked head blocks. Quantile
    controllers use 3 heads (mean, lower, upper); Gaussian ensemble members
    use 2 (mean, log-variance).
    """

    layer_dims: list[int]
    n_a: int
    weights: list[np.ndarray] = field(repr=False)
    biases: list[np.ndarray] = field(repr=False)
    seed: int = 0
    alpha: float = 0.1

    def __post_init__(self):
        dims = self.layer_dims
        if len(dims) < 3:
            raise ValueError("layer_dims needs at least [input, bottleneck, output]")
        if dims[-2] != BOTTLENECK_WIDTH:
            raise ValueError(f"bottleneck (second-to-last layer) must have width {BOTTLENECK_WIDTH}, got {dims[-2]}")
        if dims[-1] % self.n_a != 0:
            raise ValueError(f"output width {dims[-1]} is not a multiple of n_a={self.n_a}")
        if len(self.weights) != len(dims) - 1 or len(self.biases) != len(dims) - 1:
            raise ValueError("weights/biases must have one entry per layer transition")
        for k, (w, b) in enumerate(zip(self.weights, self.biases)):
            if w.shape != (dims[k], dims[k + 1]) or b.shape != (dims[k + 1],):
                raise ValueError(f"layer {k} shape mismatch: {w.shape} vs {(dims[k], dims[k+1])}")

    @property
    def n_in(self) -> int:
        return self.layer_dims[0]

    @property
    def n_heads(self) -> int:
        return self.layer_dims[-1] // self.n_a

    @property
    def n_layers(self) -> int:
        return len(self.layer_dims) - 1

    def copy(self) -> "Mlp":
        return Mlp(
            layer_dims=list(self.layer_dims),
            n_a=self.n_a,
            weights=[w.copy() for w in self.weights],
            biases=[b.copy() for b in self.biases],
            seed=self.seed,
            alpha=self.alpha,
        )


@dataclass
class TrainConfig:
    learning_rate: float = 0.01
    epochs: int = 150
    batch_size: int = 32
    seed: int = 0
    alpha: float = 0.1

    def __post_init__(self):
        if self.learning_rate <= 0:
            raise ValueError("learning_rate must be positive")
        if self.epochs < 0:
            raise ValueError("epochs must be nonnegative")
        if self.batch_size < 1:
            raise ValueError("batch_size must be >= 1")
        if not 0.0 < self.alpha < 1.0:
            raise ValueError("alpha must be in (0, 1)")

    @property
    def tau_lo(self) -> float:
        return self.alpha / 2.0

    @property
    def tau_hi(self) -> float:
        return 1.0 - self.alpha / 2.0


def initialize(layer_dims: list[int], n_a: int, seed: int, alpha: float = 0.1) -> Mlp:
    """Build an Mlp with Glorot-uniform weights and zero biases, seeded."""
    rng = Xoshiro256(seed)
    weights, biases = [], []
    for k in range(len(layer_dims) - 1):
        fan_in, fan_out = layer_dims[k], layer_dims[k + 1]
        limit = math.sqrt(6.0 / (fan_in + fan_out))
        w = np.empty((fan_in, fan_out))
        for i in range(fan_in):
            for j in range(fan_out):
                w[i, j] = rng.uniform(-limit, limit)
        weights.append(w)
        biases.append(np.zeros(fan_out))
    return Mlp(layer_dims=layer_dims, n_a=n_a, weights=weights, biases=biases, seed=seed, alpha=alpha)


def default_layer_dims(n_in: int, n_a: int, n_heads: int = 3) -> list[int]:
    """Default architecture: two 64-wide GELU layers, the tanh bottleneck, linear heads."""
    return [n_in, 64, 64, BOTTLENECK_WIDTH, n_heads * n_a]


def _activation_kind(model: Mlp, k: int) -> str:
    if k == model.n_layers - 1:
        return "linear"
    if k == model.n_layers - 2:
        return "tanh"  # applied to the bottleneck layer's output
    return "gelu"


def _forward_cached(model: Mlp, x: np.ndarray) -> tuple[np.ndarray, list[np.ndarray], list[np.ndarray]]:
    """Batched forward pass keeping pre-activations for backprop.

    Returns (output [B, out], pre_acts per layer, activations per layer where
    activations[0] is the input batch).
    """
    acts = [x]
    pres = []
    h = x
    for k in range(model.n_layers):
        z = h @ model.weights[k] + model.biases[k]
        pres.append(z)
        kind = _activation_kind(model, k)
        if kind == "gelu":
            h = gelu(z)
        elif kind == "tanh":
            h = np.tanh(z)
        else:
            h = z
        acts.append(h)
    return h, pres, acts


def _backprop(model: Mlp, pres: list[np.ndarray], acts: list[np.ndarray],
              d_out: np.ndarray) -> tuple[list[np.ndarray], list[np.ndarray]]:
    """Gradients of a scalar loss given dL/d(output batch)."""
    d_ws = [np.zeros_like(w) for w in model.weights]
    d_bs = [np.zeros_like(b) for b in model.biases]
    delta = d_out
    for k in range(model.n_layers - 1, -1, -1):
        kind = _activation_kind(model, k)
        if kind == "gelu":
            delta = delta * gelu_grad(pres[k])
        elif kind == "tanh":
            delta = delta * (1.0 - np.tanh(pres[k]) ** 2)
        d_ws[k] = acts[k].T @ delta
        d_bs[k] = delta.sum(axis=0)
        if k > 0:
            delta = delta @ model.weights[k].T
    return d_ws, d_bs


def forward(model: Mlp, x) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Evaluate the quantile controller on one input vector.

    Returns (a_hat, q_lo, q_hi), each of length n_a. No ordering between the
    heads is enforced; crossed quantiles are handled by the calibration layer.
    """
    x = np.asarray(x, dtype=float)
    if x.shape != (model.n_in,):
        raise InputDimensionError(f"expected input of length {model.n_in}, got shape {x.shape}")
    if not np.all(np.isfinite(x)):
        raise InputDimensionError("input contains non-finite entries")
    if model.n_heads != 3:
        raise ValueError("forward() expects a 3-head quantile model")
    out, _, _ = _forward_cached(model, x[None, :])
    out = out[0]
    n = model.n_a
    return out[:n].copy(), out[n:2 * n].copy(), out[2 * n:].copy()


def forward_batch(model: Mlp, x: np.ndarray) -> np.ndarray:
    """Raw batched outputs [B, n_heads * n_a], no head split."""
    out, _, _ = _forward_cached(model, np.asarray(x, dtype=float))
    return out


def pinball(pred: float, target: float, tau: float) -> float:
    """Quantile (pinball) loss max(tau*(y-p), (tau-1)*(y-p))."""
    if not 0.0 < tau < 1.0:
        raise ValueError("tau must lie in (0, 1)")
    r = target - pred
    return max(tau * r, (tau - 1.0) * r)


def _pinball_arr(pred: np.ndarray, target: np.ndarray, tau: float) -> np.ndarray:
    r = target - pred
    return np.maximum(tau * r, (tau - 1.0) * r)


def _pinball_dpred(pred: np.ndarray, target: np.ndarray, tau: float) -> np.ndarray:
    # Subgradient: -tau when r > 0, (1-tau) when r < 0, and 0 exactly at the
    # kink (a valid choice that makes a perfect fit a true stationary point).
    r = target - pred
    return np.where(r > 0.0, -tau, np.where(r < 0.0, 1.0 - tau, 0.0))


def loss(pred: tuple, target, tau_lo: float, tau_hi: float) -> tuple[float, dict]:
    """Composite training loss for one sample: MSE + two pinball terms.

    ``pred`` is the (a_hat, q_lo, q_hi) triple; every term is averaged over
    the action dimensions, and the parts add up exactly to the total.
    """
    a_hat, q_lo, q_hi = (np.asarray(p, dtype=float) for p in pred)
    y = np.asarray(target, dtype=float)
    if not (a_hat.shape == q_lo.shape == q_hi.shape == y.shape):
        raise ValueError("prediction heads and target must share one shape")
    mse = float(np.mean((a_hat - y) ** 2))
    pin_lo = float(np.mean(_pinball_arr(q_lo, y, tau_lo)))
    pin_hi = float(np.mean(_pinball_arr(q_hi, y, tau_hi)))
    total = mse + pin_lo + pin_hi
    return total, {"mse": mse, "pin_lo": pin_lo, "pin_hi": pin_hi}


class QuantileObjective:
    """Mean-batch QR loss and its gradient w.r.t. raw network outputs."""

    def __init__(self, tau_lo: float, tau_hi: float):
        self.tau_lo = tau_lo
        self.tau_hi = tau_hi

    def __call__(self, outputs: np.ndarray, targets: np.ndarray) -> tuple[float, np.ndarray]:
        b, n_a = targets.shape
        a_hat = outputs[:, :n_a]
        q_lo = outputs[:, n_a:2 * n_a]
        q_hi = outputs[:, 2 * n_a:]
        mse = np.mean((a_hat - targets) ** 2)
        pin_lo = np.mean(_pinball_arr(q_lo, targets, self.tau_lo))
        pin_hi = np.mean(_pinball_arr(q_hi, targets, self.tau_hi))
        total = float(mse + pin_lo + pin_hi)

        scale = 1.0 / (b * n_a)
        d_out = np.empty_like(outputs)
        d_out[:, :n_a] = 2.0 * (a_hat - targets) * scale
        d_out[:, n_a:2 * n_a] = _pinball_dpred(q_lo, targets, self.tau_lo) * scale
        d_out[:, 2 * n_a:] = _pinball_dpred(q_hi, targets, self.tau_hi) * scale
        return total, d_out


def loss_and_grad(model: Mlp, inputs: np.ndarray, targets: np.ndarray,
                  objective) -> tuple[float, list[np.ndarray], list[np.ndarray]]:
    inputs = np.asarray(inputs, dtype=float)
    targets = np.asarray(targets, dtype=float)
    out, pres, acts = _forward_cached(model, inputs)
    value, d_out = objective(out, targets)
    d_ws, d_bs = _backprop(model, pres, acts, d_out)
    return value, d_ws, d_bs


def grad(model: Mlp, inputs, targets, tau_lo: float, tau_hi: float) -> tuple[list[np.ndarray], list[np.ndarray]]:
    """Gradient of the mean QR batch loss, shaped like (weights, biases)."""
    inputs = np.atleast_2d(np.asarray(inputs, dtype=float))
    targets = np.atleast_2d(np.asarray(targets, dtype=float))
    if len(inputs) == 0:
        raise ValueError("batch must be non-empty")
    _, d_ws, d_bs = loss_and_grad(model, inputs, targets, QuantileObjective(tau_lo, tau_hi))
    return d_ws, d_bs


def train(model: Mlp, dataset: tuple[np.ndarray, np.ndarray], config: TrainConfig,
          objective=None) -> tuple[Mlp, list[float]]:
    """Plain SGD over shuffled minibatches; deterministic given config.seed.

    ``dataset`` is an (inputs [N, n_in], targets [N, n_a]) pair. Returns the
    trained copy of the model and the per-epoch mean batch loss curve.
    """
    inputs = np.asarray(dataset[0], dtype=float)
    targets = np.asarray(dataset[1], dtype=float)
    if inputs.ndim != 2 or len(inputs) == 0:
        raise ValueError("dataset must be a non-empty [N, n_in] array")
    if inputs.shape[1] != model.n_in:
        raise InputDimensionError(f"dataset input width {inputs.shape[1]} != model input {model.n_in}")
    if targets.shape != (len(inputs), model.n_a):
        raise ValueError(f"targets must be [N, {model.n_a}]")

    if objective is None:
        objective = QuantileObjective(config.tau_lo, config.tau_hi)

    model = model.copy()
    rng = Xoshiro256(config.seed)
    curve: list[float] = []
    n = len(inputs)
    lr = config.learning_rate
    for epoch in range(config.epochs):
        order = list(range(n))
        rng.shuffle(order)
        batch_losses = []
        for start in range(0, n, config.batch_size):
            idx = order[start:start + config.batch_size]
            value, d_ws, d_bs = loss_and_grad(model, inputs[idx], targets[idx], objective)
            if not math.isfinite(value):
                raise TrainingDivergedError(epoch, value)
            for k in range(model.n_layers):
                model.weights[k] -= lr * d_ws[k]
                model.biases[k] -= lr * d_bs[k]
            batch_losses.append(value)
        curve.append(float(np.mean(batch_losses)))
    return model, curve


def save_model(model: Mlp, path=None, kind: str = "qr") -> dict:
    """Serialize to the JSON document {kind, meta, weights}.

    Floats go through Python's shortest round-trip repr, so a load/save cycle
    reproduces bit-identical forward outputs.
    """
    doc = {
        "kind": kind,
        "meta": {
            "layer_dims": list(model.layer_dims),
            "n_a": model.n_a,
            "seed": model.seed,
            "alpha": model.alpha,
        },
        "weights": [
            {"w": w.tolist(), "b": b.tolist()}
            for w, b in zip(model.weights, model.biases)
        ],
    }
    if path is not None:
        with open(path, "w") as fh:
            json.dump(doc, fh, sort_keys=True, separators=(",", ":"))
    return doc


def load_model(source) -> tuple[Mlp, str]:
    """Load a model from a path or an already-parsed document dict."""
    if isinstance(source, dict):
        doc = source
    else:
        with open(source) as fh:
            doc = json.load(fh)
    meta = doc["meta"]
    weights = [np.asarray(layer["w"], dtype=float) for layer in doc["weights"]]
    biases = [np.asarray(layer["b"], dtype=float) for layer in doc["weights"]]
    model = Mlp(
        layer_dims=list(meta["layer_dims"]),
        n_a=int(meta["n_a"]),
        weights=weights,
        biases=biases,
        seed=int(meta["seed"]),
        alpha=float(meta["alpha"]),
    )
    return model, doc.get("kind", "qr")
