"""Minimal dense network: forward, backprop, and plain SGD in float64 numpy.

Only what the Q-network needs: a chain of fully connected layers with relu
or identity activations, squared error on a single selected output, and
elementwise parameter updates. Everything is deterministic for a given seed.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

ACTIVATIONS = ("relu", "identity")


class DenseLayer:
    """One fully connected layer: weights [out, in], biases [out]."""

    def __init__(self, weights: np.ndarray, biases: np.ndarray, activation: str):
        weights = np.asarray(weights, dtype=np.float64)
        biases = np.asarray(biases, dtype=np.float64)
        if weights.ndim != 2 or biases.ndim != 1 or biases.shape[0] != weights.shape[0]:
            raise ValueError(
                f"inconsistent layer shapes: weights {weights.shape}, biases {biases.shape}"
            )
        if activation not in ACTIVATIONS:
            raise ValueError(f"activation must be one of {ACTIVATIONS}, got {activation!r}")
        if not (np.isfinite(weights).all() and np.isfinite(biases).all()):
            raise ValueError("layer parameters must be finite")
        self.weights = weights
        self.biases = biases
        self.activation = activation

    @property
    def in_dim(self) -> int:
        return self.weights.shape[1]

    @property
    def out_dim(self) -> int:
        return self.weights.shape[0]

    @classmethod
    def zeros(cls, in_dim: int, out_dim: int, activation: str) -> "DenseLayer":
        return cls(np.zeros((out_dim, in_dim)), np.zeros(out_dim), activation)


class Mlp:
    """Feed-forward chain of DenseLayers."""

    def __init__(self, layers: list[DenseLayer]):
        if not layers:
            raise ValueError("Mlp needs at least one layer")
        for prev, nxt in zip(layers, layers[1:]):
            if prev.out_dim != nxt.in_dim:
                raise ValueError(
                    f"layer dims do not chain: {prev.out_dim} -> {nxt.in_dim}"
                )
        self.layers = layers

    @property
    def input_dim(self) -> int:
        return self.layers[0].in_dim

    @property
    def output_dim(self) -> int:
        return self.layers[-1].out_dim

    @classmethod
    def q_network(cls, num_channels: int, hidden: int = 256) -> "Mlp":
        """Default architecture: input -> hidden relu -> hidden relu -> output identity."""
        return cls(
            [
                DenseLayer.zeros(num_channels, hidden, "relu"),
                DenseLayer.zeros(hidden, hidden, "relu"),
                DenseLayer.zeros(hidden, num_channels, "identity"),
            ]
        )

    def architecture(self) -> list[tuple[int, int, str]]:
        return [(l.in_dim, l.out_dim, l.activation) for l in self.layers]


@dataclass
class GradientSet:
    """Per-layer gradients, shape-identical to the owning Mlp."""

    weight_grads: list[np.ndarray]
    bias_grads: list[np.ndarray]

    def check_shapes(self, net: Mlp) -> None:
        if len(self.weight_grads) != len(net.layers) or len(self.bias_grads) != len(net.layers):
            raise ValueError("gradient layer count does not match network")
        for layer, gw, gb in zip(net.layers, self.weight_grads, self.bias_grads):
            if gw.shape != layer.weights.shape or gb.shape != layer.biases.shape:
                raise ValueError(
                    f"gradient shapes {gw.shape}/{gb.shape} do not match "
                    f"layer {layer.weights.shape}/{layer.biases.shape}"
                )

    def global_norm(self) -> float:
        total = 0.0
        for g in self.weight_grads + self.bias_grads:
            total += float(np.sum(g * g))
        return float(np.sqrt(total))

    def scale(self, factor: float) -> None:
        for g in self.weight_grads + self.bias_grads:
            g *= factor


def _apply_activation(z: np.ndarray, activation: str) -> np.ndarray:
    if activation == "relu":
        return np.maximum(0.0, z)
    return z


def forward(net: Mlp, x: np.ndarray) -> np.ndarray:
    """Pure forward pass for a single input vector."""
    x = np.asarray(x, dtype=np.float64)
    if x.shape != (net.input_dim,):
        raise ValueError(f"input shape {x.shape} does not match expected ({net.input_dim},)")
    h = x
    for layer in net.layers:
        h = _apply_activation(layer.weights @ h + layer.biases, layer.activation)
    return h


def forward_batch(net: Mlp, xs: np.ndarray) -> np.ndarray:
    """Forward pass for a [batch, in_dim] matrix."""
    xs = np.asarray(xs, dtype=np.float64)
    if xs.ndim != 2 or xs.shape[1] != net.input_dim:
        raise ValueError(f"batch shape {xs.shape} does not match expected (*, {net.input_dim})")
    h = xs
    for layer in net.layers:
        h = _apply_activation(h @ layer.weights.T + layer.biases, layer.activation)
    return h


def _backprop_from_output_grad(
    net: Mlp, activations: list[np.ndarray], zs: list[np.ndarray], g_out: np.ndarray
) -> GradientSet:
    # activations[i] is the input to layer i; zs[i] the pre-activation output.
    weight_grads = [np.empty(0)] * len(net.layers)
    bias_grads = [np.empty(0)] * len(net.layers)
    delta = g_out
    for i in range(len(net.layers) - 1, -1, -1):
        layer = net.layers[i]
        if layer.activation == "relu":
            delta = delta * (zs[i] > 0.0)
        if delta.ndim == 1:
            weight_grads[i] = np.outer(delta, activations[i])
            bias_grads[i] = delta.copy()
        else:
            weight_grads[i] = delta.T @ activations[i]
            bias_grads[i] = delta.sum(axis=0)
        if i > 0:
            delta = delta @ layer.weights
    return GradientSet(weight_grads, bias_grads)


def backward(net: Mlp, x: np.ndarray, action: int, target: float) -> tuple[float, GradientSet]:
    """Loss (Q(x)[action] - target)^2 and its gradients w.r.t. all parameters."""
    if not 0 <= action < net.output_dim:
        raise ValueError(f"action={action} out of range [0, {net.output_dim})")
    if not np.isfinite(target):
        raise ValueError("target must be finite")
    x = np.asarray(x, dtype=np.float64)
    if x.shape != (net.input_dim,):
        raise ValueError(f"input shape {x.shape} does not match expected ({net.input_dim},)")
    activations = [x]
    zs = []
    h = x
    for layer in net.layers:
        z = layer.weights @ h + layer.biases
        zs.append(z)
        h = _apply_activation(z, layer.activation)
        activations.append(h)
    err = h[action] - target
    loss = float(err * err)
    g_out = np.zeros(net.output_dim)
    g_out[action] = 2.0 * err
    grads = _backprop_from_output_grad(net, activations[:-1], zs, g_out)
    return loss, grads


def backward_batch(
    net: Mlp, xs: np.ndarray, actions: np.ndarray, targets: np.ndarray
) -> tuple[float, GradientSet]:
    """Mean loss over the batch and the mean of the per-sample gradients.

    Mathematically identical to averaging ``backward`` over the batch; kept
    vectorized because the training loop calls this once per environment step.
    """
    xs = np.asarray(xs, dtype=np.float64)
    actions = np.asarray(actions, dtype=np.int64)
    targets = np.asarray(targets, dtype=np.float64)
    if not np.isfinite(targets).all():
        raise ValueError("targets must be finite")
    batch = xs.shape[0]
    activations = [xs]
    zs = []
    h = xs
    for layer in net.layers:
        z = h @ layer.weights.T + layer.biases
        zs.append(z)
        h = _apply_activation(z, layer.activation)
        activations.append(h)
    rows = np.arange(batch)
    errs = h[rows, actions] - targets
    loss = float(np.mean(errs * errs))
    g_out = np.zeros((batch, net.output_dim))
    g_out[rows, actions] = 2.0 * errs / batch
    grads = _backprop_from_output_grad(net, activations[:-1], zs, g_out)
    return loss, grads


def sgd_step(net: Mlp, grads: GradientSet, learning_rate: float) -> None:
    """In-place update theta <- theta - lr * grad."""
    if not np.isfinite(learning_rate) or learning_rate < 0:
        raise ValueError("learning_rate must be finite and >= 0")
    grads.check_shapes(net)
    for layer, gw, gb in zip(net.layers, grads.weight_grads, grads.bias_grads):
        layer.weights -= learning_rate * gw
        layer.biases -= learning_rate * gb


def copy_parameters(src: Mlp, dst: Mlp) -> None:
    """Copy src parameters into dst; the two stay independent afterwards."""
    if src.architecture() != dst.architecture():
        raise ValueError(
            f"architecture mismatch: {src.architecture()} vs {dst.architecture()}"
        )
    for s, d in zip(src.layers, dst.layers):
        d.weights[...] = s.weights
        d.biases[...] = s.biases


def init_parameters(net: Mlp, seed_or_rng) -> None:
    """Uniform Glorot-style init: W ~ U[-b, b], b = sqrt(6/(fan_in+fan_out)); zero biases."""
    rng = (
        seed_or_rng
        if isinstance(seed_or_rng, np.random.Generator)
        else np.random.default_rng(seed_or_rng)
    )
    for layer in net.layers:
        bound = np.sqrt(6.0 / (layer.in_dim + layer.out_dim))
        layer.weights[...] = rng.uniform(-bound, bound, layer.weights.shape)
        layer.biases[...] = 0.0


def mlp_to_text(net: Mlp) -> str:
    """Self-describing text serialization: dims, activation names, row-major weights."""
    lines = ["mlp v1", f"num_layers {len(net.layers)}"]
    for i, layer in enumerate(net.layers):
        lines.append(f"layer {i} in {layer.in_dim} out {layer.out_dim} activation {layer.activation}")
        for row in layer.weights:
            lines.append(" ".join(repr(v) for v in row.tolist()))
        lines.append(" ".join(repr(v) for v in layer.biases.tolist()))
    return "\n".join(lines) + "\n"


def mlp_from_text(text: str) -> Mlp:
    lines = text.strip().splitlines()
    if not lines or lines[0].strip() != "mlp v1":
        raise ValueError("not an mlp v1 parameter block")
    try:
        num_layers = int(lines[1].split()[1])
    except (IndexError, ValueError) as exc:
        raise ValueError("malformed num_layers line") from exc
    pos = 2
    layers = []
    for _ in range(num_layers):
        header = lines[pos].split()
        if header[0] != "layer" or header[2] != "in" or header[4] != "out" or header[6] != "activation":
            raise ValueError(f"malformed layer header at line {pos + 1}")
        in_dim, out_dim, activation = int(header[3]), int(header[5]), header[7]
        pos += 1
        rows = []
        for _ in range(out_dim):
            rows.append([float(v) for v in lines[pos].split()])
            pos += 1
        biases = [float(v) for v in lines[pos].split()]
        pos += 1
        weights = np.array(rows, dtype=np.float64)
        if weights.shape != (out_dim, in_dim) or len(biases) != out_dim:
            raise ValueError(f"layer block does not match declared dims {out_dim}x{in_dim}")
        layers.append(DenseLayer(weights, np.array(biases), activation))
    return Mlp(layers)
