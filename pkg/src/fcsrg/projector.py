"""Projector and denoiser training.

Two recipes produce the learned latent-space projection that replaces the
expensive z-update inside the alternating recovery loop: latent-supervised
regression on noisy generated samples, and a fixed-generator autoencoder fit
on noisy dataset samples. A pixel-domain denoising autoencoder for the
plug-and-play baseline lives here too.
"""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass

import numpy as np

from .errors import DimensionError, ParameterError
from .latent import (Generator, LatentLayout, LatentVector, clip_to_ball,
                     generate_batch, sample_latent)
from .linalg import Rng, as_vector
from .mlp import (Activation, MlpNetwork, OutputBlockSpec, TrainConfig,
                  _Adam, _backward_batch, _blocks_vjp, _forward_batch,
                  forward, init_network, train_supervised)


@dataclass(frozen=True)
class NoiseModel:
    """Additive perturbation used to robustify projector training."""

    kind: str = "gaussian"  # "gaussian" | "uniform"
    scale: float = 0.1      # std-dev (gaussian) or half-width (uniform)
    seed: int = 0

    def __post_init__(self):
        if self.kind not in ("gaussian", "uniform"):
            raise ParameterError(f"unknown noise kind {self.kind!r}")
        if self.scale < 0:
            raise ParameterError(f"noise scale must be non-negative, got {self.scale}")

    def corrupt(self, x: np.ndarray) -> np.ndarray:
        """x plus one seeded noise draw of matching shape; exact copy at scale 0."""
        if self.scale == 0:
            return x.copy()
        rng = Rng(self.seed)
        if self.kind == "gaussian":
            return x + rng.normal(size=x.shape, scale=self.scale)
        return x + rng.uniform(-self.scale, self.scale, size=x.shape)


@dataclass
class Projector:
    """Learned map from signal space back into the structured latent space."""

    net: MlpNetwork
    layout: LatentLayout
    structured: bool = True
    noise_used: NoiseModel = None

    def __post_init__(self):
        if self.net.out_dim != self.layout.l:
            raise DimensionError(
                f"projector output dim {self.net.out_dim} != layout L={self.layout.l}")


def projector_blocks(layout: LatentLayout, structured: bool = True) -> OutputBlockSpec:
    """Softmax per categorical group, identity elsewhere (or all-identity)."""
    if not structured:
        return OutputBlockSpec.single(layout.l)
    blocks = [(off, g, Activation.SOFTMAX) for off, g in layout.group_slices()]
    rest = layout.l - layout.continuous_offset
    if rest:
        blocks.append((layout.continuous_offset, rest, Activation.IDENTITY))
    return OutputBlockSpec(blocks=tuple(blocks))


def build_projector_net(n: int, layout: LatentLayout, hidden_dims=(128,),
                        seed: int = 0, structured: bool = True) -> MlpNetwork:
    dims = [n, *hidden_dims, layout.l]
    acts = [Activation.RELU] * len(hidden_dims) + [Activation.IDENTITY]
    return init_network(dims, acts, projector_blocks(layout, structured), seed)


def project(proj: Projector, x: np.ndarray) -> LatentVector:
    """Forward pass plus constraint enforcement.

    Structured: softmax blocks already land on the simplex, continuous codes
    are clipped to [-1, 1], then c and v are radially projected onto their
    balls if the norms exceed them. Unstructured keeps only the two ball
    projections (the latent is treated as a plain norm-bounded variable).
    """
    x = as_vector(x, "signal")
    layout = proj.layout
    u = forward(proj.net, x)
    c = u[:layout.d].copy()
    v = u[layout.d:].copy()
    if proj.structured and layout.continuous_codes:
        k = layout.continuous_offset
        np.clip(c[k:], -1.0, 1.0, out=c[k:])
    c = clip_to_ball(c, layout.r_c)
    v = clip_to_ball(v, layout.r_v)
    return LatentVector(c=c, v=v, layout=layout)


def _synthesize_latent_dataset(gen: Generator, num_samples: int, seed: int):
    layout = gen.layout
    z = np.empty((num_samples, layout.l))
    base = Rng(seed)
    for i in range(num_samples):
        z[i] = sample_latent(layout, base.substream(i), "hard").concat()
    return z, generate_batch(gen, z)


def _auto_noise(x: np.ndarray, seed: int):
    """Candidate noise models at {0.05, 0.1, 0.2} of the signal RMS."""
    rms = float(np.sqrt(np.mean(x * x)))
    return [NoiseModel("gaussian", f * rms, seed) for f in (0.05, 0.1, 0.2)]


def _val_split(n: int, seed: int, frac: float = 0.2):
    order = Rng(seed).permutation(n)
    n_val = max(1, int(round(frac * n)))
    return order[n_val:], order[:n_val]


def _mean_mixed_loss(net: MlpNetwork, x: np.ndarray, t: np.ndarray, loss: str) -> float:
    from .mlp import _loss_and_output_grad
    _, acts, out = _forward_batch(net, x)
    values, _ = _loss_and_output_grad(net, acts[-1], out, t, loss)
    return float(values.mean())


def train_projector_method1(gen: Generator, noise: NoiseModel | None,
                            num_samples: int, cfg: TrainConfig,
                            hidden_dims=(128,), structured: bool = True):
    """Latent-supervised recipe: regress sampled latents from their noisy
    generated signals.

    With noise=None the scale is picked from a small sweep tied to the signal
    RMS, keeping whichever model validates best; the alternating solver feeds
    the projector least-squares iterates whose error level is unknown ahead
    of time.
    """
    if num_samples < 1:
        raise ParameterError("num_samples must be at least 1")
    z, x = _synthesize_latent_dataset(gen, num_samples, cfg.seed)
    loss = "mixed" if structured else "squared-error"
    cfg = dataclasses.replace(cfg, loss=loss)

    candidates = [noise] if noise is not None else _auto_noise(x, cfg.seed)
    train_idx, val_idx = _val_split(num_samples, cfg.seed)
    best = None
    for cand in candidates:
        x_noisy = cand.corrupt(x)
        net = build_projector_net(gen.n, gen.layout, hidden_dims, cfg.seed, structured)
        if len(candidates) == 1:
            trained, trace = train_supervised(net, list(zip(x_noisy, z)), cfg)
            return Projector(trained, gen.layout, structured, cand), trace
        trained, trace = train_supervised(
            net, list(zip(x_noisy[train_idx], z[train_idx])), cfg)
        val = _mean_mixed_loss(trained, x_noisy[val_idx], z[val_idx], loss)
        if best is None or val < best[0]:
            best = (val, trained, trace, cand)
    _, trained, trace, cand = best
    return Projector(trained, gen.layout, structured, cand), trace


def train_projector_method2(gen: Generator, dataset, noise: NoiseModel,
                            cfg: TrainConfig, hidden_dims=(128,),
                            structured: bool = True):
    """Fixed-generator autoencoder recipe: fit the projector so the cascade
    generator(projector(x + eps)) reproduces x; generator weights never move."""
    if len(dataset) == 0:
        raise ParameterError("dataset is empty")
    x = np.stack([as_vector(v) for v in dataset])
    if x.shape[1] != gen.n:
        raise DimensionError(f"dataset width {x.shape[1]} != generator output {gen.n}")
    x_noisy = noise.corrupt(x)

    net = build_projector_net(gen.n, gen.layout, hidden_dims, cfg.seed, structured)
    params = []
    for layer in net.layers:
        params.extend((layer.weights, layer.bias))
    opt = _Adam([p.shape for p in params], cfg) if cfg.optimizer == "adam" else None

    rng = Rng(cfg.seed)
    n_samples = x.shape[0]
    trace = []
    for epoch in range(cfg.epochs):
        order = rng.permutation(n_samples)
        total = 0.0
        for start in range(0, n_samples, cfg.batch_size):
            idx = order[start:start + cfg.batch_size]
            xb_noisy, xb = x_noisy[idx], x[idx]
            zs_p, acts_p, z_out = _forward_batch(net, xb_noisy)
            zs_g, acts_g, x_rec = _forward_batch(gen.net, z_out)
            diff = x_rec - xb
            total += 0.5 * float(np.sum(diff * diff))
            g_u_gen = _blocks_vjp(gen.net.output_blocks, acts_g[-1], x_rec,
                                  diff / len(idx))
            _, g_z = _backward_batch(gen.net, zs_g, acts_g, g_u_gen)
            g_u_proj = _blocks_vjp(net.output_blocks, acts_p[-1], z_out, g_z)
            grads, _ = _backward_batch(net, zs_p, acts_p, g_u_proj)
            flat = []
            for gw, gb in grads:
                flat.extend((gw, gb))
            if opt is not None:
                opt.step(params, flat)
            else:
                for p, g in zip(params, flat):
                    p -= cfg.learning_rate * g
        trace.append(total / n_samples)
        if not np.isfinite(trace[-1]):
            from .errors import NumericError
            raise NumericError(f"training diverged at epoch {epoch}")
    return Projector(net, gen.layout, structured, noise), trace


def train_denoiser(dataset, noise: NoiseModel, hidden_dims, cfg: TrainConfig):
    """Pixel-domain denoising autoencoder: maps x + eps back to x."""
    if len(dataset) == 0:
        raise ParameterError("dataset is empty")
    x = np.stack([as_vector(v) for v in dataset])
    n = x.shape[1]
    x_noisy = noise.corrupt(x)
    dims = [n, *hidden_dims, n]
    acts = [Activation.RELU] * len(hidden_dims) + [Activation.IDENTITY]
    net = init_network(dims, acts, None, cfg.seed)
    cfg = dataclasses.replace(cfg, loss="squared-error")
    return train_supervised(net, list(zip(x_noisy, x)), cfg)
