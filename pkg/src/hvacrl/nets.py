"""Minimal dense feed-forward network engine.

Everything downstream (the comfort predictor, the DDPG actor/critic, the
DQN baseline) runs on the same small stack implemented here: forward
evaluation, exact backpropagation, Adam, and soft target-network blending.
All arithmetic is float64 and all randomness goes through an explicit
numpy Generator, so training runs are bit-reproducible.

A network is a plain value (lists of weight matrices and bias vectors).
Nothing here is thread-aware: a net has a single writer, and read-only
evaluation from several threads is safe because forward() never mutates.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

ACTIVATIONS = ("tanh", "sigmoid", "linear")


class CheckpointError(ValueError):
    """Raised for unreadable, truncated, or version-incompatible checkpoint files."""


def _apply_activation(kind: str, z: np.ndarray) -> np.ndarray:
    if kind == "tanh":
        return np.tanh(z)
    if kind == "sigmoid":
        return 1.0 / (1.0 + np.exp(-z))
    if kind == "linear":
        return z
    raise ValueError(f"unknown activation {kind!r}")


def _activation_derivative(kind: str, a: np.ndarray) -> np.ndarray:
    # Derivative expressed through the activation value a = f(z).
    if kind == "tanh":
        return 1.0 - a * a
    if kind == "sigmoid":
        return a * (1.0 - a)
    if kind == "linear":
        return np.ones_like(a)
    raise ValueError(f"unknown activation {kind!r}")


@dataclass
class DenseNet:
    """Fully-connected network: weights[k] has shape (out_k, in_k).

    layer_sizes includes the input layer, so a 6-32-32-1 net has
    len(layer_sizes) == 4 and three weight matrices. activations holds one
    tag per weight layer, each of "tanh", "sigmoid", or "linear".
    """

    layer_sizes: list[int]
    weights: list[np.ndarray]
    biases: list[np.ndarray]
    activations: list[str]

    def __post_init__(self):
        n_layers = len(self.layer_sizes) - 1
        if n_layers < 1:
            raise ValueError("need at least one weight layer")
        if any(int(s) <= 0 for s in self.layer_sizes):
            raise ValueError("layer sizes must be positive")
        if not (len(self.weights) == len(self.biases) == len(self.activations) == n_layers):
            raise ValueError("weights/biases/activations length must match layer count")
        for k in range(n_layers):
            if self.activations[k] not in ACTIVATIONS:
                raise ValueError(f"unknown activation {self.activations[k]!r}")
            out_n, in_n = self.layer_sizes[k + 1], self.layer_sizes[k]
            if self.weights[k].shape != (out_n, in_n):
                raise ValueError(
                    f"layer {k}: weight shape {self.weights[k].shape} != ({out_n}, {in_n})"
                )
            if self.biases[k].shape != (out_n,):
                raise ValueError(f"layer {k}: bias shape {self.biases[k].shape} != ({out_n},)")

    @property
    def input_size(self) -> int:
        return self.layer_sizes[0]

    @property
    def output_size(self) -> int:
        return self.layer_sizes[-1]

    def num_params(self) -> int:
        return sum(w.size + b.size for w, b in zip(self.weights, self.biases))

    def copy(self) -> "DenseNet":
        return DenseNet(
            list(self.layer_sizes),
            [w.copy() for w in self.weights],
            [b.copy() for b in self.biases],
            list(self.activations),
        )

    def all_finite(self) -> bool:
        return all(np.all(np.isfinite(w)) for w in self.weights) and all(
            np.all(np.isfinite(b)) for b in self.biases
        )


def init_dense_net(
    layer_sizes: list[int], activations: list[str], rng: np.random.Generator
) -> DenseNet:
    """Random net with layer-k weights uniform in +-1/sqrt(fan_in). Biases start at zero."""
    weights, biases = [], []
    for k in range(len(layer_sizes) - 1):
        fan_in = layer_sizes[k]
        bound = 1.0 / math.sqrt(fan_in)
        weights.append(rng.uniform(-bound, bound, size=(layer_sizes[k + 1], fan_in)))
        biases.append(np.zeros(layer_sizes[k + 1]))
    return DenseNet(list(layer_sizes), weights, biases, list(activations))


def forward(net: DenseNet, x) -> np.ndarray:
    """Evaluate the net on a single input vector. Pure: no state is touched."""
    x = np.asarray(x, dtype=float)
    if x.shape != (net.input_size,):
        raise ValueError(f"input shape {x.shape} != ({net.input_size},)")
    if not np.all(np.isfinite(x)):
        raise ValueError("non-finite input")
    a = x
    for w, b, act in zip(net.weights, net.biases, net.activations):
        a = _apply_activation(act, w @ a + b)
    return a


def forward_batch(net: DenseNet, X) -> np.ndarray:
    """Evaluate a (n, input_size) batch, returning (n, output_size)."""
    Y, _ = _forward_cached(net, X)
    return Y


def _forward_cached(net: DenseNet, X):
    X = np.asarray(X, dtype=float)
    if X.ndim != 2 or X.shape[1] != net.input_size:
        raise ValueError(f"batch shape {X.shape} != (n, {net.input_size})")
    acts = [X]
    a = X
    for w, b, act in zip(net.weights, net.biases, net.activations):
        a = _apply_activation(act, a @ w.T + b)
        acts.append(a)
    return a, acts


@dataclass
class ParamGradient:
    """Gradient arrays shaped exactly like the weights/biases of the source net."""

    weights: list[np.ndarray]
    biases: list[np.ndarray]

    def all_finite(self) -> bool:
        return all(np.all(np.isfinite(w)) for w in self.weights) and all(
            np.all(np.isfinite(b)) for b in self.biases
        )

    def check_congruent(self, net: DenseNet) -> None:
        if len(self.weights) != len(net.weights):
            raise ValueError("gradient layer count differs from net")
        for gw, w in zip(self.weights, net.weights):
            if gw.shape != w.shape:
                raise ValueError(f"gradient shape {gw.shape} != weight shape {w.shape}")
        for gb, b in zip(self.biases, net.biases):
            if gb.shape != b.shape:
                raise ValueError(f"gradient shape {gb.shape} != bias shape {b.shape}")


def gradient(net: DenseNet, x, loss_grad_at_output) -> ParamGradient:
    """Exact dLoss/dparams via backprop, given dLoss/doutput at the final layer."""
    g = np.asarray(loss_grad_at_output, dtype=float)
    if g.shape != (net.output_size,):
        raise ValueError(f"output gradient shape {g.shape} != ({net.output_size},)")
    pg, _ = gradient_batch(net, np.asarray(x, dtype=float)[None, :], g[None, :])
    return pg


def gradient_batch(net: DenseNet, X, dLdY) -> tuple[ParamGradient, np.ndarray]:
    """Backprop a batch; parameter gradients are summed over the batch.

    Returns (param_gradient, dL/dX) so callers can also chain through the
    input (the actor update differentiates the critic w.r.t. its action
    inputs this way).
    """
    dLdY = np.asarray(dLdY, dtype=float)
    _, acts = _forward_cached(net, X)
    if dLdY.shape != acts[-1].shape:
        raise ValueError(f"upstream gradient shape {dLdY.shape} != {acts[-1].shape}")
    n_layers = len(net.weights)
    gw = [None] * n_layers
    gb = [None] * n_layers
    delta = dLdY
    for k in range(n_layers - 1, -1, -1):
        delta = delta * _activation_derivative(net.activations[k], acts[k + 1])
        gw[k] = delta.T @ acts[k]
        gb[k] = delta.sum(axis=0)
        delta = delta @ net.weights[k]
    return ParamGradient(gw, gb), delta


def finite_diff_gradient(net: DenseNet, x, loss, h: float = 1e-5) -> ParamGradient:
    """Central-difference gradient estimate; loss maps the output vector to a scalar.

    Deliberately routed through forward() only, so it stays an independent
    check on the backprop path.
    """
    x = np.asarray(x, dtype=float)

    def perturbed(arr, idx, eps):
        old = arr[idx]
        arr[idx] = old + eps
        value = float(loss(forward(net, x)))
        arr[idx] = old
        return value

    gw, gb = [], []
    for w in net.weights:
        g = np.zeros_like(w)
        for idx in np.ndindex(w.shape):
            g[idx] = (perturbed(w, idx, h) - perturbed(w, idx, -h)) / (2.0 * h)
        gw.append(g)
    for b in net.biases:
        g = np.zeros_like(b)
        for idx in np.ndindex(b.shape):
            g[idx] = (perturbed(b, idx, h) - perturbed(b, idx, -h)) / (2.0 * h)
        gb.append(g)
    return ParamGradient(gw, gb)


@dataclass
class OptimState:
    """Adam accumulators, shape-congruent with the net they were created for."""

    learning_rate: float
    m_weights: list[np.ndarray] = field(default_factory=list)
    v_weights: list[np.ndarray] = field(default_factory=list)
    m_biases: list[np.ndarray] = field(default_factory=list)
    v_biases: list[np.ndarray] = field(default_factory=list)
    step: int = 0


def adam_init(net: DenseNet, learning_rate: float = 0.001) -> OptimState:
    if learning_rate <= 0:
        raise ValueError("learning_rate must be positive")
    return OptimState(
        learning_rate=learning_rate,
        m_weights=[np.zeros_like(w) for w in net.weights],
        v_weights=[np.zeros_like(w) for w in net.weights],
        m_biases=[np.zeros_like(b) for b in net.biases],
        v_biases=[np.zeros_like(b) for b in net.biases],
    )


def adam_step(
    net: DenseNet,
    grad: ParamGradient,
    state: OptimState,
    beta1: float = 0.9,
    beta2: float = 0.999,
    eps: float = 1e-8,
) -> None:
    """One Adam update, in place on net and state."""
    grad.check_congruent(net)
    if not grad.all_finite():
        raise ValueError("non-finite gradient")
    state.step += 1
    t = state.step
    bc1 = 1.0 - beta1**t
    bc2 = 1.0 - beta2**t
    for k in range(len(net.weights)):
        for param, g, m, v in (
            (net.weights[k], grad.weights[k], state.m_weights[k], state.v_weights[k]),
            (net.biases[k], grad.biases[k], state.m_biases[k], state.v_biases[k]),
        ):
            m *= beta1
            m += (1.0 - beta1) * g
            v *= beta2
            v += (1.0 - beta2) * g * g
            param -= state.learning_rate * (m / bc1) / (np.sqrt(v / bc2) + eps)
    if not net.all_finite():
        raise ValueError("update produced non-finite parameters")


def soft_update(target: DenseNet, source: DenseNet, tau: float) -> None:
    """Blend source into target in place: theta_target <- tau*theta + (1-tau)*theta_target."""
    if not 0.0 <= tau <= 1.0:
        raise ValueError("tau must lie in [0, 1]")
    if target.layer_sizes != source.layer_sizes:
        raise ValueError("target and source layer sizes differ")
    for tw, sw in zip(target.weights, source.weights):
        tw *= 1.0 - tau
        tw += tau * sw
    for tb, sb in zip(target.biases, source.biases):
        tb *= 1.0 - tau
        tb += tau * sb


def save_dense_net(net: DenseNet, path) -> None:
    """Write the self-describing text checkpoint (round-trips bit-exactly)."""
    with open(path, "w") as f:
        f.write(format_dense_net(net))


def format_dense_net(net: DenseNet) -> str:
    sizes = ",".join(str(s) for s in net.layer_sizes)
    acts = ",".join(net.activations)
    lines = [f"densenet v1 {sizes} {acts}"]
    # 17 significant digits: enough to reproduce any float64 bit-for-bit.
    for w, b in zip(net.weights, net.biases):
        for row in w:
            lines.append(" ".join(f"{v:.16e}" for v in row))
        lines.append(" ".join(f"{v:.16e}" for v in b))
    return "\n".join(lines) + "\n"


def load_dense_net(path) -> DenseNet:
    with open(path) as f:
        text = f.read()
    return parse_dense_net(text)


def parse_dense_net(text: str) -> DenseNet:
    lines = [ln for ln in text.splitlines() if ln.strip()]
    if not lines:
        raise CheckpointError("empty checkpoint")
    header = lines[0].split()
    if len(header) != 4 or header[0] != "densenet":
        raise CheckpointError(f"bad checkpoint header: {lines[0]!r}")
    if header[1] != "v1":
        raise CheckpointError(f"unsupported checkpoint version {header[1]!r}")
    try:
        layer_sizes = [int(s) for s in header[2].split(",")]
    except ValueError as exc:
        raise CheckpointError(f"bad layer sizes in header: {header[2]!r}") from exc
    activations = header[3].split(",")
    n_layers = len(layer_sizes) - 1
    expected_lines = 1 + sum(layer_sizes[k + 1] + 1 for k in range(n_layers))
    if len(lines) != expected_lines:
        raise CheckpointError(
            f"truncated or oversized checkpoint: {len(lines)} lines, expected {expected_lines}"
        )
    weights, biases = [], []
    pos = 1

    def parse_row(line, n):
        parts = line.split()
        if len(parts) != n:
            raise CheckpointError(f"expected {n} values, got {len(parts)}: {line[:60]!r}")
        try:
            return np.array([float(p) for p in parts])
        except ValueError as exc:
            raise CheckpointError(f"unparseable number in line {line[:60]!r}") from exc

    for k in range(n_layers):
        out_n, in_n = layer_sizes[k + 1], layer_sizes[k]
        w = np.empty((out_n, in_n))
        for r in range(out_n):
            w[r] = parse_row(lines[pos], in_n)
            pos += 1
        weights.append(w)
        biases.append(parse_row(lines[pos], out_n))
        pos += 1
    try:
        return DenseNet(layer_sizes, weights, biases, activations)
    except ValueError as exc:
        raise CheckpointError(str(exc)) from exc
