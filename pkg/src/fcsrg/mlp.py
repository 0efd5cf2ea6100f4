"""Small dense feed-forward networks with exact forward and backward passes.

Everything is plain numpy: layers are (weights, bias, activation) triples,
the output of the final layer passes through a block spec that can apply
softmax to contiguous slices (one per categorical latent group) and leave the
rest alone. Gradients are computed by hand-rolled reverse-mode backprop and
are exact up to floating point; the test suite checks them against central
finite differences.
"""

from __future__ import annotations

import copy
from dataclasses import dataclass
from enum import IntEnum
from typing import Sequence

import numpy as np
from scipy.special import expit

from .errors import DimensionError, NumericError, ParameterError
from .linalg import Rng, as_matrix, as_vector, spectral_norm

# Safety factor on power-iteration spectral norms, which converge from below.
SPECTRAL_SAFETY = 1.0 + 1e-6


class Activation(IntEnum):
    """Activation kinds; integer values double as the weight-file ids."""

    IDENTITY = 0
    RELU = 1
    TANH = 2
    SIGMOID = 3
    SOFTMAX = 4  # valid only inside an output block


# Lipschitz constants (w.r.t. L2) used by the certified bound.
_ACT_LIPSCHITZ = {
    Activation.IDENTITY: 1.0,
    Activation.RELU: 1.0,
    Activation.TANH: 1.0,
    Activation.SIGMOID: 0.25,
    Activation.SOFTMAX: 1.0,
}


def _act_forward(kind: Activation, z: np.ndarray) -> np.ndarray:
    if kind == Activation.IDENTITY:
        return z
    if kind == Activation.RELU:
        return np.maximum(z, 0.0)
    if kind == Activation.TANH:
        return np.tanh(z)
    if kind == Activation.SIGMOID:
        return expit(z)
    raise ParameterError(f"softmax is not a per-layer activation: {kind}")


def _act_deriv(kind: Activation, z: np.ndarray, a: np.ndarray) -> np.ndarray:
    """Elementwise derivative, given pre-activation z and activation a."""
    if kind == Activation.IDENTITY:
        return np.ones_like(z)
    if kind == Activation.RELU:
        return (z > 0.0).astype(np.float64)
    if kind == Activation.TANH:
        return 1.0 - a * a
    if kind == Activation.SIGMOID:
        return a * (1.0 - a)
    raise ParameterError(f"softmax is not a per-layer activation: {kind}")


def _softmax(z: np.ndarray) -> np.ndarray:
    shifted = z - z.max(axis=-1, keepdims=True)
    e = np.exp(shifted)
    return e / e.sum(axis=-1, keepdims=True)


@dataclass
class DenseLayer:
    """One dense layer: out = act(W x + b), W is (out_dim x in_dim)."""

    weights: np.ndarray
    bias: np.ndarray
    activation: Activation = Activation.IDENTITY

    def __post_init__(self):
        self.weights = as_matrix(self.weights, "layer weights")
        self.bias = as_vector(self.bias, "layer bias")
        if self.weights.shape[0] != self.bias.shape[0]:
            raise DimensionError(
                f"weight rows {self.weights.shape[0]} != bias length {self.bias.shape[0]}")
        if self.activation == Activation.SOFTMAX:
            raise ParameterError("softmax applies to output blocks, not whole layers")

    @property
    def out_dim(self) -> int:
        return self.weights.shape[0]

    @property
    def in_dim(self) -> int:
        return self.weights.shape[1]


@dataclass(frozen=True)
class OutputBlockSpec:
    """Disjoint, sorted (offset, length, activation) blocks tiling the output."""

    blocks: tuple

    def __post_init__(self):
        cursor = 0
        for off, length, act in self.blocks:
            if off != cursor or length < 1:
                raise DimensionError(
                    f"output blocks must tile the output contiguously; got offset {off} "
                    f"where {cursor} was expected")
            cursor = off + length
            Activation(act)

    @property
    def total_dim(self) -> int:
        off, length, _ = self.blocks[-1]
        return off + length

    @classmethod
    def single(cls, dim: int, act: Activation = Activation.IDENTITY) -> "OutputBlockSpec":
        return cls(blocks=((0, dim, act),))


def _blocks_forward(spec: OutputBlockSpec, u: np.ndarray) -> np.ndarray:
    out = u.copy()
    for off, length, act in spec.blocks:
        seg = u[..., off:off + length]
        if act == Activation.SOFTMAX:
            out[..., off:off + length] = _softmax(seg)
        elif act != Activation.IDENTITY:
            out[..., off:off + length] = _act_forward(Activation(act), seg)
    return out


def _blocks_vjp(spec: OutputBlockSpec, u: np.ndarray, o: np.ndarray,
                g_out: np.ndarray) -> np.ndarray:
    """Pull a cotangent on the block output back to the block input."""
    g = g_out.copy()
    for off, length, act in spec.blocks:
        act = Activation(act)
        if act == Activation.IDENTITY:
            continue
        sl = np.s_[..., off:off + length]
        if act == Activation.SOFTMAX:
            s = o[sl]
            gs = g_out[sl]
            g[sl] = s * (gs - (gs * s).sum(axis=-1, keepdims=True))
        else:
            g[sl] = g_out[sl] * _act_deriv(act, u[sl], o[sl])
    return g


@dataclass
class MlpNetwork:
    """A chain of dense layers plus an output block spec on the final layer."""

    layers: list
    output_blocks: OutputBlockSpec

    def __post_init__(self):
        if not self.layers:
            raise DimensionError("network needs at least one layer")
        for k in range(1, len(self.layers)):
            if self.layers[k].in_dim != self.layers[k - 1].out_dim:
                raise DimensionError(
                    f"layer {k} expects input dim {self.layers[k].in_dim}, "
                    f"previous layer outputs {self.layers[k - 1].out_dim}")
        if self.output_blocks.total_dim != self.layers[-1].out_dim:
            raise DimensionError(
                f"output blocks cover {self.output_blocks.total_dim} dims, "
                f"final layer outputs {self.layers[-1].out_dim}")

    @property
    def in_dim(self) -> int:
        return self.layers[0].in_dim

    @property
    def out_dim(self) -> int:
        return self.layers[-1].out_dim

    def clone(self) -> "MlpNetwork":
        return copy.deepcopy(self)


@dataclass
class TrainConfig:
    """Hyperparameters for supervised training; all deterministic given seed."""

    learning_rate: float = 1e-3
    batch_size: int = 32
    epochs: int = 100
    optimizer: str = "adam"  # "sgd" | "adam"
    beta1: float = 0.9
    beta2: float = 0.999
    eps_adam: float = 1e-8
    seed: int = 0
    loss: str = "squared-error"  # "squared-error" | "mixed"

    def __post_init__(self):
        if self.learning_rate <= 0 or self.batch_size < 1 or self.epochs < 1:
            raise ParameterError("learning rate, batch size and epochs must be positive")
        if self.optimizer not in ("sgd", "adam"):
            raise ParameterError(f"unknown optimizer {self.optimizer!r}")
        if not (0.0 < self.beta1 < 1.0 and 0.0 < self.beta2 < 1.0):
            raise ParameterError("adam moment decays must lie in (0, 1)")
        if self.loss not in ("squared-error", "mixed"):
            raise ParameterError(f"unknown loss {self.loss!r}")


def init_network(dims: Sequence[int], activations: Sequence[Activation],
                 output_blocks: OutputBlockSpec | None, seed: int) -> MlpNetwork:
    """Seeded He-uniform (relu) / Xavier-uniform (otherwise) initialization.

    dims = (in, h1, ..., out); activations has one entry per layer.
    """
    if len(activations) != len(dims) - 1:
        raise DimensionError("need one activation per layer")
    rng = Rng(seed)
    layers = []
    for k, act in enumerate(activations):
        fan_in, fan_out = dims[k], dims[k + 1]
        if act == Activation.RELU:
            limit = np.sqrt(6.0 / fan_in)
        else:
            limit = np.sqrt(6.0 / (fan_in + fan_out))
        w = rng.uniform(-limit, limit, size=(fan_out, fan_in))
        layers.append(DenseLayer(w, np.zeros(fan_out), act))
    if output_blocks is None:
        output_blocks = OutputBlockSpec.single(dims[-1])
    return MlpNetwork(layers, output_blocks)


def _forward_batch(net: MlpNetwork, x: np.ndarray, check: bool = True):
    """Forward pass on a (batch, in_dim) matrix; returns (caches, output).

    caches[k] = (z_k, a_k) with a_0 the input; the final entry also records
    the post-block output.
    """
    a = x
    zs, acts = [], [a]
    for k, layer in enumerate(net.layers):
        z = a @ layer.weights.T + layer.bias
        a = _act_forward(layer.activation, z)
        if check and not np.all(np.isfinite(a)):
            raise NumericError(f"layer {k} produced non-finite values")
        zs.append(z)
        acts.append(a)
    out = _blocks_forward(net.output_blocks, a)
    if check and not np.all(np.isfinite(out)):
        raise NumericError("output blocks produced non-finite values")
    return zs, acts, out


def forward(net: MlpNetwork, x: np.ndarray) -> np.ndarray:
    """Evaluate the network on a single input vector."""
    x = as_vector(x, "input")
    if x.shape[0] != net.in_dim:
        raise DimensionError(f"input length {x.shape[0]} != network in_dim {net.in_dim}")
    _, _, out = _forward_batch(net, x[None, :])
    return out[0]


def forward_batch(net: MlpNetwork, x: np.ndarray) -> np.ndarray:
    """Evaluate the network on a (batch, in_dim) matrix of inputs."""
    x = as_matrix(x, "input batch")
    if x.shape[1] != net.in_dim:
        raise DimensionError(f"input width {x.shape[1]} != network in_dim {net.in_dim}")
    return _forward_batch(net, x)[2]


def _loss_and_output_grad(net: MlpNetwork, u: np.ndarray, out: np.ndarray,
                          target: np.ndarray, loss: str):
    """Per-sample loss values and the cotangent at the final layer activation.

    u is the final layer's post-activation (pre-blocks) value. For the mixed
    loss, cross-entropy on softmax blocks backpropagates directly as
    (softmax - target) on the block input, which is exact and avoids the
    unstable -t/s intermediate.
    """
    if loss == "squared-error":
        diff = out - target
        values = 0.5 * np.sum(diff * diff, axis=-1)
        return values, _blocks_vjp(net.output_blocks, u, out, diff)
    # mixed: cross-entropy per softmax block + squared error elsewhere
    values = np.zeros(out.shape[0])
    g_u = np.zeros_like(u)
    for off, length, act in net.output_blocks.blocks:
        sl = np.s_[:, off:off + length]
        if Activation(act) == Activation.SOFTMAX:
            s = out[sl]
            t = target[sl]
            values += -np.sum(t * np.log(np.maximum(s, 1e-300)), axis=-1)
            g_u[sl] = s - t
        else:
            diff = out[sl] - target[sl]
            values += 0.5 * np.sum(diff * diff, axis=-1)
            one = OutputBlockSpec(blocks=((0, length, act),))
            g_u[sl] = _blocks_vjp(one, u[sl], out[sl], diff)
    return values, g_u


def _backward_batch(net: MlpNetwork, zs, acts, g_u: np.ndarray):
    """Reverse pass from a cotangent on the final post-activation.

    Returns ([(dW, db) per layer], gradient w.r.t. the input batch).
    """
    grads = [None] * len(net.layers)
    g = g_u
    for k in range(len(net.layers) - 1, -1, -1):
        layer = net.layers[k]
        gz = g * _act_deriv(layer.activation, zs[k], acts[k + 1])
        grads[k] = (gz.T @ acts[k], gz.sum(axis=0))
        g = gz @ layer.weights
    return grads, g


def grad_params(net: MlpNetwork, x: np.ndarray, target: np.ndarray,
                loss: str = "squared-error"):
    """Exact loss gradients w.r.t. every weight and bias.

    Returns a list of (dW, db) pairs, one per layer.
    """
    x = as_vector(x, "input")
    target = as_vector(target, "target")
    if x.shape[0] != net.in_dim or target.shape[0] != net.out_dim:
        raise DimensionError("input/target shapes do not match the network")
    zs, acts, out = _forward_batch(net, x[None, :])
    _, g_u = _loss_and_output_grad(net, acts[-1], out, target[None, :], loss)
    grads, _ = _backward_batch(net, zs, acts, g_u)
    return grads


def grad_input(net: MlpNetwork, x: np.ndarray, cotangent: np.ndarray) -> np.ndarray:
    """J^T cotangent, where J is the network Jacobian at x."""
    x = as_vector(x, "input")
    cotangent = as_vector(cotangent, "cotangent")
    if x.shape[0] != net.in_dim:
        raise DimensionError(f"input length {x.shape[0]} != in_dim {net.in_dim}")
    if cotangent.shape[0] != net.out_dim:
        raise DimensionError(
            f"cotangent length {cotangent.shape[0]} != out_dim {net.out_dim}")
    zs, acts, out = _forward_batch(net, x[None, :])
    g_u = _blocks_vjp(net.output_blocks, acts[-1], out, cotangent[None, :])
    _, g_in = _backward_batch(net, zs, acts, g_u)
    return g_in[0]


def loss_value(net: MlpNetwork, x: np.ndarray, target: np.ndarray,
               loss: str = "squared-error") -> float:
    """Scalar training loss for one sample (used by finite-difference tests)."""
    _, acts, out = _forward_batch(net, as_vector(x)[None, :])
    values, _ = _loss_and_output_grad(net, acts[-1], out, as_vector(target)[None, :], loss)
    return float(values[0])


class _Adam:
    def __init__(self, shapes, cfg: TrainConfig):
        self.m = [np.zeros(s) for s in shapes]
        self.v = [np.zeros(s) for s in shapes]
        self.t = 0
        self.cfg = cfg

    def step(self, params, grads):
        cfg = self.cfg
        self.t += 1
        bc1 = 1.0 - cfg.beta1 ** self.t
        bc2 = 1.0 - cfg.beta2 ** self.t
        for p, g, m, v in zip(params, grads, self.m, self.v):
            m *= cfg.beta1
            m += (1.0 - cfg.beta1) * g
            v *= cfg.beta2
            v += (1.0 - cfg.beta2) * g * g
            p -= cfg.learning_rate * (m / bc1) / (np.sqrt(v / bc2) + cfg.eps_adam)


def train_supervised(net: MlpNetwork, dataset, cfg: TrainConfig):
    """Minibatch training on (input, target) pairs.

    Returns (trained copy of the network, per-epoch mean loss trace). The
    input network is left untouched. Deterministic given cfg.seed.
    """
    if len(dataset) == 0:
        raise ParameterError("dataset is empty")
    x = np.stack([as_vector(p[0]) for p in dataset])
    t = np.stack([as_vector(p[1]) for p in dataset])
    if x.shape[1] != net.in_dim or t.shape[1] != net.out_dim:
        raise DimensionError("dataset shapes do not match the network")

    net = net.clone()
    params = []
    for layer in net.layers:
        params.extend((layer.weights, layer.bias))
    opt = _Adam([p.shape for p in params], cfg) if cfg.optimizer == "adam" else None

    rng = Rng(cfg.seed)
    n = x.shape[0]
    trace = []
    for epoch in range(cfg.epochs):
        order = rng.permutation(n)
        total = 0.0
        for start in range(0, n, cfg.batch_size):
            idx = order[start:start + cfg.batch_size]
            xb, tb = x[idx], t[idx]
            zs, acts, out = _forward_batch(net, xb)
            values, g_u = _loss_and_output_grad(net, acts[-1], out, tb, cfg.loss)
            total += float(values.sum())
            grads, _ = _backward_batch(net, zs, acts, g_u / len(idx))
            flat = []
            for gw, gb in grads:
                flat.extend((gw, gb))
            if opt is not None:
                opt.step(params, flat)
            else:
                for p, g in zip(params, flat):
                    p -= cfg.learning_rate * g
        mean_loss = total / n
        if not np.isfinite(mean_loss):
            raise NumericError(f"training diverged at epoch {epoch}")
        trace.append(mean_loss)
    return net, trace


def lipschitz_upper_bound(net: MlpNetwork) -> float:
    """Certified Lipschitz upper bound: product of per-layer spectral norms
    times activation constants (1 for identity/relu/tanh/softmax, 1/4 for
    sigmoid), with a (1 + 1e-6) safety factor absorbing the power iteration's
    convergence-from-below."""
    bound = 1.0
    for layer in net.layers:
        bound *= spectral_norm(layer.weights) * _ACT_LIPSCHITZ[layer.activation]
    block_const = max(_ACT_LIPSCHITZ[Activation(act)]
                      for _, _, act in net.output_blocks.blocks)
    return bound * block_const * SPECTRAL_SAFETY
