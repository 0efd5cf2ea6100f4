"""Shared helpers: random small networks and finite-difference oracles."""

import numpy as np

from fcsrg import Activation, DenseLayer, MlpNetwork, OutputBlockSpec, Rng
from fcsrg.mlp import loss_value


def random_small_net(seed: int, with_softmax: bool = True,
                     allow_relu: bool = False) -> MlpNetwork:
    """A random fully-specified net with dims <= 8 for gradient checking."""
    rng = Rng(seed)
    depth = int(rng.integers(1, 4))
    dims = [int(rng.integers(2, 9)) for _ in range(depth + 1)]
    acts = []
    pool = [Activation.TANH, Activation.SIGMOID, Activation.IDENTITY]
    if allow_relu:
        pool.append(Activation.RELU)
    for _ in range(depth):
        acts.append(pool[int(rng.integers(0, len(pool)))])
    layers = [DenseLayer(rng.normal(size=(dims[k + 1], dims[k]), scale=0.7),
                         rng.normal(size=dims[k + 1], scale=0.3), acts[k])
              for k in range(depth)]
    out = dims[-1]
    if with_softmax and out >= 3 and rng.integers(0, 2):
        split = int(rng.integers(2, out))
        blocks = OutputBlockSpec(blocks=((0, split, Activation.SOFTMAX),
                                         (split, out - split, Activation.IDENTITY)))
    else:
        blocks = OutputBlockSpec.single(out)
    return MlpNetwork(layers, blocks)


def fd_param_grads(net: MlpNetwork, x, t, loss: str, step: float = 1e-5):
    """Central finite differences of the training loss over every parameter."""
    grads = []
    for layer in net.layers:
        gw = np.zeros_like(layer.weights)
        for idx in np.ndindex(*layer.weights.shape):
            orig = layer.weights[idx]
            layer.weights[idx] = orig + step
            up = loss_value(net, x, t, loss)
            layer.weights[idx] = orig - step
            down = loss_value(net, x, t, loss)
            layer.weights[idx] = orig
            gw[idx] = (up - down) / (2 * step)
        gb = np.zeros_like(layer.bias)
        for i in range(layer.bias.shape[0]):
            orig = layer.bias[i]
            layer.bias[i] = orig + step
            up = loss_value(net, x, t, loss)
            layer.bias[i] = orig - step
            down = loss_value(net, x, t, loss)
            layer.bias[i] = orig
            gb[i] = (up - down) / (2 * step)
        grads.append((gw, gb))
    return grads


def rel_err(a, b, floor: float = 1e-6) -> float:
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    denom = np.maximum(np.maximum(np.abs(a), np.abs(b)), floor)
    return float(np.max(np.abs(a - b) / denom))
