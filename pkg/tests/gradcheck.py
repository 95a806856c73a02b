"""Central finite-difference gradient oracle, independent of the backprop path."""

import numpy as np

from antijam import nn


def loss_of(net: nn.Mlp, x: np.ndarray, action: int, target: float) -> float:
    q = nn.forward(net, x)
    err = q[action] - target
    return float(err * err)


def finite_difference_grads(net, x, action, target, h=1e-5):
    """Perturb every parameter by +-h and difference the loss."""
    weight_grads = []
    bias_grads = []
    for layer in net.layers:
        gw = np.zeros_like(layer.weights)
        for idx in np.ndindex(layer.weights.shape):
            orig = layer.weights[idx]
            layer.weights[idx] = orig + h
            up = loss_of(net, x, action, target)
            layer.weights[idx] = orig - h
            down = loss_of(net, x, action, target)
            layer.weights[idx] = orig
            gw[idx] = (up - down) / (2 * h)
        gb = np.zeros_like(layer.biases)
        for i in range(layer.biases.shape[0]):
            orig = layer.biases[i]
            layer.biases[i] = orig + h
            up = loss_of(net, x, action, target)
            layer.biases[i] = orig - h
            down = loss_of(net, x, action, target)
            layer.biases[i] = orig
            gb[i] = (up - down) / (2 * h)
        weight_grads.append(gw)
        bias_grads.append(gb)
    return weight_grads, bias_grads


def max_relative_error(analytic: nn.GradientSet, numeric_w, numeric_b) -> float:
    worst = 0.0
    for a, n in zip(analytic.weight_grads + analytic.bias_grads, numeric_w + numeric_b):
        denom = np.maximum(np.maximum(np.abs(a), np.abs(n)), 1e-5)
        worst = max(worst, float(np.max(np.abs(a - n) / denom)))
    return worst


def random_small_net(rng: np.random.Generator) -> nn.Mlp:
    """A random architecture with at most 64 parameters, relu hiddens."""
    dims = [int(rng.integers(2, 5)) for _ in range(int(rng.integers(2, 4)))]
    while sum((i + 1) * o for i, o in zip(dims, dims[1:])) > 64:
        dims = dims[:-1]
    if len(dims) < 2:
        dims = [2, 2]
    layers = []
    for k, (i, o) in enumerate(zip(dims, dims[1:])):
        activation = "identity" if k == len(dims) - 2 else "relu"
        layers.append(nn.DenseLayer.zeros(i, o, activation))
    net = nn.Mlp(layers)
    nn.init_parameters(net, rng)
    return net
