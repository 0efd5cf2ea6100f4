"""Signal recovery from compressed measurements.

Four solvers share the Measurement/RecoveryResult contract: the alternating
generator-projector loop (F-CSRG), latent-space gradient descent (CSGM-GD),
plug-and-play alternation with a pixel-domain denoiser, and the plain
minimum-norm pseudo-inverse. All are deterministic given (seed, config,
inputs); wall time is measured around the solve only.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field

import numpy as np

from .errors import DimensionError, NumericError, ParameterError
from .latent import Generator, LatentVector, clip_to_ball, generate
from .linalg import RidgeSolver, Rng, SensingMatrix, as_vector, pseudo_inverse_lsq
from .mlp import MlpNetwork, forward, grad_input
from .projector import Projector, project


@dataclass
class SolverConfig:
    """Shared solver knobs; none of the defaults is a claim, all overridable."""

    rho: float = 1.0
    max_iters: int = 100
    feasibility_tol: float = 1e-4   # on ||x - G(z)|| / sqrt(N)
    lam: float = 0.1                # latent penalty weight in the GD baseline
    gd_step: float = 0.1
    gd_iters: int = 300
    restarts: int = 3
    seed: int = 0

    def __post_init__(self):
        if self.rho <= 0:
            raise ParameterError(f"rho must be positive, got {self.rho}")
        if self.max_iters < 0 or self.gd_iters < 1 or self.restarts < 0:
            raise ParameterError("iteration counts out of range")
        if self.feasibility_tol < 0 or self.lam < 0 or self.gd_step <= 0:
            raise ParameterError("tolerances and step sizes out of range")


@dataclass(frozen=True)
class NoiseRecord:
    scale: float
    seed: int


@dataclass
class Measurement:
    """y = Phi x* + w, with the noise draw recorded for replay."""

    y: np.ndarray
    phi: SensingMatrix
    noise_w: NoiseRecord = None
    w: np.ndarray = None

    def __post_init__(self):
        if self.y.shape[0] != self.phi.m:
            raise DimensionError(f"y length {self.y.shape[0]} != m={self.phi.m}")


@dataclass
class RecoveryResult:
    x_hat: np.ndarray
    z_hat: LatentVector = None
    iterations: int = 0
    wall_time: float = 0.0
    residual_trace: list = field(default_factory=list)
    objective_trace: list = field(default_factory=list)


@dataclass
class AdmmState:
    """Iterates of the alternating loop, exposed for inspection."""

    x: np.ndarray
    z: LatentVector
    mu: np.ndarray
    k: int
    residual_trace: list


def measure(phi: SensingMatrix, x_star: np.ndarray, noise_scale: float,
            rng: Rng) -> Measurement:
    """Compress a signal, optionally adding i.i.d. Gaussian noise."""
    if noise_scale < 0:
        raise ParameterError(f"noise scale must be non-negative, got {noise_scale}")
    y = phi.apply(x_star)
    if noise_scale == 0:
        return Measurement(y=y, phi=phi, noise_w=None, w=np.zeros(phi.m))
    seed = rng.draw_seed()
    w = Rng(seed).normal(size=phi.m, scale=noise_scale)
    return Measurement(y=y + w, phi=phi, noise_w=NoiseRecord(noise_scale, seed), w=w)


def _check_finite(arr: np.ndarray, what: str, k: int):
    if not np.all(np.isfinite(arr)):
        raise NumericError(f"{what} became non-finite at iteration {k}")


def fcsrg_recover(meas: Measurement, gen: Generator, proj: Projector,
                  cfg: SolverConfig, observer=None) -> RecoveryResult:
    """Alternating recovery: ridge x-update, projector z-update, dual step.

    The x-update solves (Phi^T Phi + rho I) x = Phi^T y + rho (G(z) - mu)
    with the m x m factor cached across iterations; the z-update is a single
    projector forward pass plus constraint enforcement. Starts from the
    projected pseudo-inverse reconstruction with a zero dual; stops at the
    iteration cap or when ||x - G(z)|| / sqrt(N) falls below the tolerance.
    Reports G(z_final), which always lies in the generator's range. An
    observer callable, if given, receives the AdmmState after every
    iteration.
    """
    if gen.layout.l != proj.layout.l or gen.layout.d != proj.layout.d:
        raise DimensionError("generator and projector layouts do not match")
    t0 = time.perf_counter()
    phi, y = meas.phi, meas.y
    n = phi.n
    solver = RidgeSolver(phi, cfg.rho)
    phit_y = phi.apply_t(y)

    z = project(proj, pseudo_inverse_lsq(phi, y))
    mu = np.zeros(n)
    gz = generate(gen, z)
    residual_trace, objective_trace = [], []
    k = 0
    for k in range(1, cfg.max_iters + 1):
        x = solver.solve(phit_y + cfg.rho * (gz - mu))
        _check_finite(x, "x iterate", k)
        z = project(proj, x + mu)
        gz = generate(gen, z)
        _check_finite(gz, "generated iterate", k)
        mu = mu + x - gz
        r = float(np.linalg.norm(x - gz))
        residual_trace.append(r)
        objective_trace.append(float(np.linalg.norm(y - phi.apply(gz))))
        if observer is not None:
            observer(AdmmState(x=x, z=z, mu=mu, k=k,
                               residual_trace=list(residual_trace)))
        if r / np.sqrt(n) <= cfg.feasibility_tol:
            break
    else:
        k = cfg.max_iters
    return RecoveryResult(x_hat=gz, z_hat=z, iterations=k,
                          wall_time=time.perf_counter() - t0,
                          residual_trace=residual_trace,
                          objective_trace=objective_trace)


def _ball_project_latent(z: np.ndarray, layout) -> np.ndarray:
    out = z.copy()
    out[:layout.d] = clip_to_ball(out[:layout.d], layout.r_c)
    out[layout.d:] = clip_to_ball(out[layout.d:], layout.r_v)
    return out


def _csgm_objective(gen: Generator, phi: SensingMatrix, y: np.ndarray,
                    z: np.ndarray, lam: float):
    gz = forward(gen.net, z)
    resid = phi.apply(gz) - y
    return float(resid @ resid + lam * (z @ z)), resid


def csgm_gd_descend(gen: Generator, phi: SensingMatrix, y: np.ndarray,
                    z0: np.ndarray, cfg: SolverConfig, lam: float = None):
    """Projected gradient descent on ||y - Phi G(z)||^2 + lam ||z||^2.

    Backtracking halves the step whenever the objective would increase, so
    the recorded objective trace is non-increasing. Returns (z, trace).
    """
    lam = cfg.lam if lam is None else lam
    layout = gen.layout
    z = _ball_project_latent(np.asarray(z0, dtype=np.float64), layout)
    f, resid = _csgm_objective(gen, phi, y, z, lam)
    trace = [f]
    for k in range(cfg.gd_iters):
        g = grad_input(gen.net, z, 2.0 * phi.apply_t(resid)) + 2.0 * lam * z
        step = cfg.gd_step
        improved = False
        for _ in range(40):
            z_new = _ball_project_latent(z - step * g, layout)
            f_new, resid_new = _csgm_objective(gen, phi, y, z_new, lam)
            if not np.isfinite(f_new):
                raise NumericError(f"objective became non-finite at iteration {k}")
            if f_new <= f:
                improved = True
                break
            step *= 0.5
        if not improved or abs(f - f_new) <= 1e-15 * max(f, 1.0):
            trace.append(f_new if improved else f)
            if improved:
                z, f, resid = z_new, f_new, resid_new
            break
        z, f, resid = z_new, f_new, resid_new
        trace.append(f)
    return z, trace


def csgm_gd_recover(meas: Measurement, gen: Generator,
                    cfg: SolverConfig) -> RecoveryResult:
    """Latent-space gradient-descent baseline with multi-start.

    Runs max(1, restarts) seeded random initializations and keeps the run
    with the best final objective; x_hat = G(z_final).
    """
    from .latent import sample_latent
    t0 = time.perf_counter()
    phi, y = meas.phi, meas.y
    rng = Rng(cfg.seed)
    best = None
    for s in range(max(1, cfg.restarts)):
        z0 = sample_latent(gen.layout, rng.substream(s), "soft").concat()
        z, trace = csgm_gd_descend(gen, phi, y, z0, cfg)
        if best is None or trace[-1] < best[1][-1]:
            best = (z, trace)
    z, trace = best
    z_hat = LatentVector.from_concat(gen.layout, z)
    return RecoveryResult(x_hat=generate(gen, z_hat), z_hat=z_hat,
                          iterations=len(trace) - 1,
                          wall_time=time.perf_counter() - t0,
                          residual_trace=[],
                          objective_trace=trace)


def pnp_dae_recover(meas: Measurement, denoiser: MlpNetwork,
                    cfg: SolverConfig) -> RecoveryResult:
    """Plug-and-play alternation with a pixel-domain denoiser.

    Same ridge x-update; the property step is one denoiser pass on x + mu.
    Starts from the pseudo-inverse reconstruction; with max_iters=0 that
    initialization is returned untouched.
    """
    phi, y = meas.phi, meas.y
    n = phi.n
    if denoiser.in_dim != n or denoiser.out_dim != n:
        raise DimensionError(f"denoiser must map R^{n} to itself")
    t0 = time.perf_counter()
    solver = RidgeSolver(phi, cfg.rho)
    phit_y = phi.apply_t(y)
    s = pseudo_inverse_lsq(phi, y)
    mu = np.zeros(n)
    residual_trace, objective_trace = [], []
    k = 0
    for k in range(1, cfg.max_iters + 1):
        x = solver.solve(phit_y + cfg.rho * (s - mu))
        _check_finite(x, "x iterate", k)
        s = forward(denoiser, x + mu)
        _check_finite(s, "denoised iterate", k)
        mu = mu + x - s
        r = float(np.linalg.norm(x - s))
        residual_trace.append(r)
        objective_trace.append(float(np.linalg.norm(y - phi.apply(s))))
        if r / np.sqrt(n) <= cfg.feasibility_tol:
            break
    else:
        k = cfg.max_iters
    return RecoveryResult(x_hat=s, z_hat=None, iterations=k,
                          wall_time=time.perf_counter() - t0,
                          residual_trace=residual_trace,
                          objective_trace=objective_trace)


def pinv_recover(meas: Measurement) -> RecoveryResult:
    """Minimum-norm least-squares baseline."""
    t0 = time.perf_counter()
    x = pseudo_inverse_lsq(meas.phi, meas.y)
    return RecoveryResult(x_hat=x, z_hat=None, iterations=0,
                          wall_time=time.perf_counter() - t0)


def reconstruction_error(x_hat: np.ndarray, x_star: np.ndarray) -> float:
    """Euclidean distance between reconstruction and truth."""
    x_hat = as_vector(x_hat, "x_hat")
    x_star = as_vector(x_star, "x_star")
    if x_hat.shape != x_star.shape:
        raise DimensionError(f"shape mismatch {x_hat.shape} vs {x_star.shape}")
    return float(np.linalg.norm(x_hat - x_star))


def codeword_accuracy(z_hat: LatentVector, c_star: np.ndarray) -> float:
    """Fraction of categorical groups whose argmax matches the true codeword.

    Ties break toward the lowest index. Vacuously 1.0 for layouts without
    categorical groups.
    """
    c_star = as_vector(c_star, "c_star")
    if c_star.shape[0] != z_hat.layout.d:
        raise DimensionError(f"codeword length {c_star.shape[0]} != D={z_hat.layout.d}")
    groups = z_hat.layout.group_slices()
    if not groups:
        return 1.0
    hits = 0
    for off, g in groups:
        if int(np.argmax(z_hat.c[off:off + g])) == int(np.argmax(c_star[off:off + g])):
            hits += 1
    return hits / len(groups)
