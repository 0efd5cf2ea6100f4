"""Structured latent spaces and generators.

A latent vector splits into a codeword c (one-hot categorical groups plus
bounded continuous slots, dimension D) and a randomness variable v (dimension
L - D). Generators map the latent space into signal space; the synthetic
factory builds generators whose v-sensitivity is certified by construction,
so the isometry and recovery-bound checks have analytic ground truth.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DimensionError, ParameterError
from .linalg import Rng, as_vector, spectral_norm
from .mlp import (Activation, DenseLayer, MlpNetwork, OutputBlockSpec,
                  SPECTRAL_SAFETY, forward, forward_batch, init_network,
                  lipschitz_upper_bound)


@dataclass(frozen=True)
class LatentLayout:
    """Shape of the structured latent space.

    categorical_groups lists the class count of each one-hot group; every
    group contributes its class count to D. continuous_codes adds D more
    bounded slots, v_dim is the randomness dimension, and r_c / r_v are the
    codeword and randomness ball radii.
    """

    categorical_groups: tuple = ()
    continuous_codes: int = 0
    v_dim: int = 0
    r_c: float = None
    r_v: float = None

    def __post_init__(self):
        if any(g < 2 for g in self.categorical_groups):
            raise ParameterError("categorical groups need at least 2 classes")
        if self.continuous_codes < 0 or self.v_dim < 0:
            raise ParameterError("latent dimensions must be non-negative")
        if self.d + self.v_dim < 1:
            raise ParameterError("latent space must have at least one dimension")
        # default radii: any hard codeword with extreme continuous codes fits
        # inside r_c, and a standard normal v is essentially never clipped
        if self.r_c is None:
            object.__setattr__(
                self, "r_c",
                float(np.sqrt(len(self.categorical_groups) + self.continuous_codes))
                or 1.0)
        if self.r_v is None:
            object.__setattr__(self, "r_v", 3.0 * np.sqrt(self.v_dim) or 1.0)
        if not (self.r_c > 0 and self.r_v > 0):
            raise ParameterError("latent ball radii must be positive")

    @property
    def d(self) -> int:
        return sum(self.categorical_groups) + self.continuous_codes

    @property
    def l(self) -> int:
        return self.d + self.v_dim

    def group_slices(self):
        """(offset, length) of each categorical group within the codeword."""
        out, off = [], 0
        for g in self.categorical_groups:
            out.append((off, g))
            off += g
        return out

    @property
    def continuous_offset(self) -> int:
        return sum(self.categorical_groups)


@dataclass
class LatentVector:
    """A point (c, v) in a structured latent space."""

    c: np.ndarray
    v: np.ndarray
    layout: LatentLayout

    def __post_init__(self):
        self.c = np.asarray(self.c, dtype=np.float64)
        self.v = np.asarray(self.v, dtype=np.float64)
        if self.c.shape != (self.layout.d,) or self.v.shape != (self.layout.v_dim,):
            raise DimensionError(
                f"latent shapes ({self.c.shape}, {self.v.shape}) do not match layout "
                f"(D={self.layout.d}, v_dim={self.layout.v_dim})")

    def concat(self) -> np.ndarray:
        return np.concatenate([self.c, self.v])

    @classmethod
    def from_concat(cls, layout: LatentLayout, z: np.ndarray) -> "LatentVector":
        z = as_vector(z, "latent")
        if z.shape[0] != layout.l:
            raise DimensionError(f"latent length {z.shape[0]} != L={layout.l}")
        return cls(c=z[:layout.d].copy(), v=z[layout.d:].copy(), layout=layout)

    def validate(self, tol: float = 1e-9) -> None:
        """Raise unless simplex, box and ball constraints all hold."""
        for off, g in self.layout.group_slices():
            seg = self.c[off:off + g]
            if seg.min() < -tol or abs(seg.sum() - 1.0) > 1e-6:
                raise ParameterError(f"categorical group at {off} is not a simplex point")
        cont = self.c[self.layout.continuous_offset:]
        if cont.size and (cont.min() < -1.0 - tol or cont.max() > 1.0 + tol):
            raise ParameterError("continuous codes outside [-1, 1]")
        if np.linalg.norm(self.c) > self.layout.r_c * (1 + 1e-9) + tol:
            raise ParameterError("codeword outside its ball")
        if np.linalg.norm(self.v) > self.layout.r_v * (1 + 1e-9) + tol:
            raise ParameterError("randomness outside its ball")


def clip_to_ball(x: np.ndarray, radius: float) -> np.ndarray:
    """Radial projection onto the closed ball; direction preserved."""
    nrm = np.linalg.norm(x)
    if nrm > radius:
        return x * (radius / nrm)
    return x


def sample_latent(layout: LatentLayout, rng: Rng, mode: str = "hard") -> LatentVector:
    """Draw a latent point from its prior.

    hard: uniform one-hot per categorical group. soft: symmetric Dirichlet
    (concentration 1, i.e. uniform on the simplex). Continuous codes are
    uniform on [-1, 1]; v is standard normal, rescaled onto the r_v ball
    when its norm exceeds it.
    """
    if mode not in ("hard", "soft"):
        raise ParameterError(f"unknown sampling mode {mode!r}")
    c = np.zeros(layout.d)
    for off, g in layout.group_slices():
        if mode == "hard":
            c[off + int(rng.integers(0, g))] = 1.0
        else:
            c[off:off + g] = rng.dirichlet(np.ones(g))
    k = layout.continuous_offset
    if layout.continuous_codes:
        c[k:] = rng.uniform(-1.0, 1.0, size=layout.continuous_codes)
    v = rng.normal(size=layout.v_dim) if layout.v_dim else np.zeros(0)
    v = clip_to_ball(v, layout.r_v)
    return LatentVector(c=c, v=v, layout=layout)


@dataclass
class SyntheticParts:
    """Internals of a synthetic generator, kept for analytic tests."""

    f_c: MlpNetwork
    f_cv: MlpNetwork
    gamma: float
    certified_beta: float
    v_lipschitz: float


@dataclass
class Generator:
    """A generative model over a structured latent space."""

    net: MlpNetwork
    layout: LatentLayout
    t_hat: float = None
    beta_hat: float = None
    parts: SyntheticParts = None

    def __post_init__(self):
        if self.net.in_dim != self.layout.l:
            raise DimensionError(
                f"network input dim {self.net.in_dim} != layout L={self.layout.l}")

    @property
    def n(self) -> int:
        return self.net.out_dim


def generate(gen: Generator, z: LatentVector) -> np.ndarray:
    """Evaluate the generator at a latent point."""
    if z.layout.l != gen.layout.l or z.layout.d != gen.layout.d:
        raise DimensionError("latent layout does not match the generator")
    return forward(gen.net, z.concat())


def generate_batch(gen: Generator, z_rows: np.ndarray) -> np.ndarray:
    """Evaluate the generator on stacked latent rows (batch, L)."""
    return forward_batch(gen.net, z_rows)


def linear_generator(a: np.ndarray, layout: LatentLayout) -> Generator:
    """Wrap a fixed matrix as a single-layer identity-activation generator."""
    a = np.asarray(a, dtype=np.float64)
    net = MlpNetwork([DenseLayer(a, np.zeros(a.shape[0]), Activation.IDENTITY)],
                     OutputBlockSpec.single(a.shape[0]))
    return Generator(net=net, layout=layout, t_hat=lipschitz_upper_bound(net))


def identity_generator(layout: LatentLayout) -> Generator:
    """The L = N pass-through generator used by exact-fixture tests."""
    return linear_generator(np.eye(layout.l), layout)


def _v_restricted_lipschitz(layers, d: int) -> float:
    """Certified Lipschitz bound of the (c, v) branch w.r.t. v alone.

    First layer contributes only its v columns; downstream layers contribute
    their full spectral norms (tanh is 1-Lipschitz).
    """
    first = layers[0].weights[:, d:]
    if first.size == 0:
        return 0.0
    bound = spectral_norm(first)
    for layer in layers[1:]:
        bound *= spectral_norm(layer.weights)
    return bound * SPECTRAL_SAFETY


def make_synthetic_generator(layout: LatentLayout, n: int, beta_target: float,
                             hidden_dims=(64,), seed: int = 0,
                             codeword_gain: float = 6.0) -> Generator:
    """Build G(c, v) = F_c(c) + gamma * F_cv(c, v) with certified v-variation.

    F_c is a seeded random MLP on the codeword alone, F_cv one on the full
    latent; both end in tanh so a final [I, gamma*I] combine layer expresses
    the sum as one plain dense network. gamma is chosen so that
    2 * gamma * Lip_v(F_cv) * r_v <= beta_target, making beta_target a
    certified bound on ||G(c, v1) - G(c, v2)||. With empty hidden_dims the
    construction degenerates to a single linear layer, for which the
    certification is exactly 2 * gamma * sigma_max(W_v) * r_v.

    codeword_gain drives the codeword branch into tanh saturation (first
    layer and output), so distinct codewords land on well-separated,
    near-binary signal patterns with genuine mode structure between them,
    the way a trained image generator behaves.
    """
    if beta_target < 0:
        raise ParameterError(f"beta_target must be non-negative, got {beta_target}")
    d, lv = layout.d, layout.v_dim
    l_full = layout.l
    rng = Rng(seed)

    if not hidden_dims:  # purely linear variant
        a_c = rng.normal(size=(n, d), scale=1.0 / np.sqrt(max(d, 1)))
        a_cv = rng.normal(size=(n, l_full), scale=1.0 / np.sqrt(l_full))
        f_c = MlpNetwork([DenseLayer(a_c, np.zeros(n))], OutputBlockSpec.single(n))
        f_cv = MlpNetwork([DenseLayer(a_cv, np.zeros(n))], OutputBlockSpec.single(n))
        lip_v = _v_restricted_lipschitz(f_cv.layers, d) / SPECTRAL_SAFETY
        # exact sigma_max of the v columns: no safety factor, the linear case
        # is the analytic fixture
        gamma = 0.0
        if beta_target > 0 and lv > 0 and lip_v > 0:
            gamma = beta_target / (2.0 * lip_v * layout.r_v)
        w = np.zeros((n, l_full))
        w[:, :d] = a_c
        w += gamma * a_cv
        net = MlpNetwork([DenseLayer(w, np.zeros(n))], OutputBlockSpec.single(n))
        gen = Generator(net=net, layout=layout, t_hat=lipschitz_upper_bound(net),
                        parts=SyntheticParts(f_c, f_cv, gamma,
                                             2.0 * gamma * lip_v * layout.r_v, lip_v))
        gen.beta_hat = estimate_beta(gen, 32, 32, rng.substream(1))
        return gen

    widths = list(hidden_dims)
    # relu hidden, tanh branch output; shared activations let the two
    # branches stack into block-diagonal composite layers
    branch_acts = [Activation.RELU] * len(widths) + [Activation.TANH]
    c_net = init_network([max(d, 1)] + widths + [n], branch_acts, None,
                         rng.draw_seed())
    cv_net = init_network([l_full] + widths + [n], branch_acts, None,
                          rng.draw_seed())
    # Saturate the codeword branch: strong first layer plus negative-leaning
    # relu thresholds carve distinct modes per codeword, with weak gradients
    # in between, the way trained image generators behave.
    c_net.layers[0].weights *= codeword_gain
    for layer in c_net.layers[:-1]:
        layer.bias[:] = rng.uniform(-codeword_gain / 4.0, 0.0,
                                    size=layer.bias.shape)
    c_net.layers[-1].weights *= codeword_gain / 2.0
    c_layers = c_net.layers
    cv_layers = cv_net.layers

    lip_v = _v_restricted_lipschitz(cv_layers, d)
    gamma = 0.0
    if beta_target > 0 and lv > 0 and lip_v > 0:
        gamma = beta_target / (2.0 * lip_v * layout.r_v)

    layers = []
    for k in range(len(widths) + 1):
        wc, bc = c_layers[k].weights, c_layers[k].bias
        wcv, bcv = cv_layers[k].weights, cv_layers[k].bias
        if k == 0:
            top = np.zeros((wc.shape[0], l_full))
            if d:
                top[:, :d] = wc[:, :d]
            w = np.vstack([top, wcv])
        else:
            w = np.block([[wc, np.zeros((wc.shape[0], wcv.shape[1]))],
                          [np.zeros((wcv.shape[0], wc.shape[1])), wcv]])
        layers.append(DenseLayer(w, np.concatenate([bc, bcv]), branch_acts[k]))
    combine = np.hstack([np.eye(n), gamma * np.eye(n)])
    layers.append(DenseLayer(combine, np.zeros(n), Activation.IDENTITY))
    net = MlpNetwork(layers, OutputBlockSpec.single(n))

    gen = Generator(net=net, layout=layout, t_hat=lipschitz_upper_bound(net),
                    parts=SyntheticParts(c_net, cv_net, gamma,
                                         2.0 * gamma * lip_v * layout.r_v, lip_v))
    gen.beta_hat = estimate_beta(gen, 32, 32, rng.substream(1))
    return gen


def estimate_beta(gen: Generator, num_codewords: int, num_v_pairs: int,
                  rng: Rng) -> float:
    """Monte-Carlo lower bound on the v-variation constant.

    Max of ||G(c, v1) - G(c, v2)|| over sampled codewords (alternating hard
    and soft draws) and v pairs. Each drawn pair is probed twice: as drawn,
    and scaled antipodally onto the randomness ball's surface along its
    difference direction, which tightens the bound toward the supremum the
    constant is defined by. Sample streams are indexed, so growing either
    count only extends the sampled set and the estimate never drops.
    """
    if num_codewords < 1 or num_v_pairs < 1:
        raise ParameterError("sample counts must be at least 1")
    layout = gen.layout
    if layout.v_dim == 0:
        return 0.0
    best = 0.0
    for i in range(num_codewords):
        mode = "hard" if i % 2 == 0 else "soft"
        c = sample_latent(layout, rng.substream(i), mode).c
        rows1 = np.empty((2 * num_v_pairs, layout.l))
        rows2 = np.empty((2 * num_v_pairs, layout.l))
        for j in range(num_v_pairs):
            v1 = clip_to_ball(rng.substream(i, 2 * j).normal(size=layout.v_dim),
                              layout.r_v)
            v2 = clip_to_ball(rng.substream(i, 2 * j + 1).normal(size=layout.v_dim),
                              layout.r_v)
            rows1[2 * j] = np.concatenate([c, v1])
            rows2[2 * j] = np.concatenate([c, v2])
            d = v1 - v2
            nd = np.linalg.norm(d)
            u = d / nd if nd > 0 else v1
            rows1[2 * j + 1] = np.concatenate([c, layout.r_v * u])
            rows2[2 * j + 1] = np.concatenate([c, -layout.r_v * u])
        diff = generate_batch(gen, rows1) - generate_batch(gen, rows2)
        best = max(best, float(np.linalg.norm(diff, axis=1).max()))
    return best


def estimate_lipschitz_lower(gen: Generator, num_pairs: int, rng: Rng) -> float:
    """Max sampled difference quotient; a lower bound that never exceeds the
    certified t_hat."""
    if num_pairs < 1:
        raise ParameterError("num_pairs must be at least 1")
    layout = gen.layout
    rows1 = np.empty((num_pairs, layout.l))
    rows2 = np.empty((num_pairs, layout.l))
    for j in range(num_pairs):
        mode1 = "hard" if j % 2 == 0 else "soft"
        rows1[j] = sample_latent(layout, rng.substream(2 * j), mode1).concat()
        rows2[j] = sample_latent(layout, rng.substream(2 * j + 1), "soft").concat()
    dz = np.linalg.norm(rows1 - rows2, axis=1)
    keep = dz > 1e-12
    if not keep.any():
        return 0.0
    dg = np.linalg.norm(generate_batch(gen, rows1[keep]) - generate_batch(gen, rows2[keep]),
                        axis=1)
    return float((dg / dz[keep]).max())
