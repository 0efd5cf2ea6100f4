"""Monte-Carlo verification of the compression guarantees.

Each check samples fresh Gaussian matrices, measures how often the claimed
norm/distance preservation fails, and compares the failure fraction against
the stated probability budget plus three binomial standard errors. The
additive O(delta) constants hidden in the statements are exposed as a slack
parameter (default 5% of the median pairwise distance) and every report also
carries the violation fractions at zero and doubled slack.

Matrices here are drawn raw: the measurement-count thresholds of the
statements routinely exceed the ambient dimension, which a compressive
SensingMatrix would reject.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np

from .errors import ParameterError, PreconditionError
from .latent import Generator, LatentVector, sample_latent, generate, generate_batch
from .linalg import Rng, SensingMatrix, gaussian_matrix, spectral_norm
from .projector import Projector
from .recovery import (Measurement, SolverConfig, csgm_gd_descend,
                       fcsrg_recover, measure)


@dataclass
class IsometryConfig:
    epsilon: float = 0.3
    delta: float = 0.1
    num_pairs: int = 500
    num_matrix_draws: int = 200
    slack: float = None          # None = 0.05 * median pairwise distance
    seed: int = 0
    threshold_const: float = 16.0  # the c in m >= c * (dim/eps^2) log(T r / delta)

    def __post_init__(self):
        if not (0.0 < self.epsilon < 0.5):
            raise ParameterError(f"epsilon must lie in (0, 1/2), got {self.epsilon}")
        if not (0.0 < self.delta < 1.0):
            raise ParameterError(f"delta must lie in (0, 1), got {self.delta}")
        if self.num_pairs < 1 or self.num_matrix_draws < 1:
            raise ParameterError("sample counts must be positive")
        if self.slack is not None and self.slack < 0:
            raise ParameterError("slack must be non-negative")


@dataclass
class IsometryReport:
    """Empirical distortion statistics against an (epsilon, delta) budget.

    passed is recomputable from the stored fields:
    violation_fraction <= bound_delta, with bound_delta = delta + 3 std errs.
    """

    check: str
    pairs_tested: int
    draws: int
    violation_fraction: float
    worst_distortion: float
    delta: float
    std_err: float
    bound_delta: float
    passed: bool
    slack: float = 0.0
    slack_profile: tuple = ()
    records: tuple = ()  # one small dict per matrix draw, for replayable logs


@dataclass
class BoundCheck:
    """One recovery-bound trial: lhs vs the sum of its right-hand terms."""

    trial: int
    regime: str              # "codeword" (with detail term) | "full-latent"
    lhs: float
    term_mismatch: float
    term_beta: float
    term_noise: float
    slack: float
    satisfied: bool
    surrogate_exact: bool = True
    valid: bool = True

    def rhs(self) -> float:
        return self.term_mismatch + self.term_beta + self.term_noise + self.slack


def _binom_threshold(p: float, n: int) -> tuple:
    se = math.sqrt(max(p * (1.0 - p), 0.0) / n)
    return se, p + 3.0 * se


def required_m_jl(q: int, epsilon: float, delta: float) -> int:
    """Measurement count that makes the finite-set preservation hold."""
    return int(math.ceil(8.0 / epsilon ** 2 * math.log(2.0 * q / delta)))


def required_m_range(dim: int, epsilon: float, delta: float, t_hat: float,
                     radius: float, const: float) -> int:
    """Threshold c * (dim / eps^2) * log(T r / delta), floored at 1."""
    log_arg = max(t_hat * radius / delta, math.e)
    return max(1, int(math.ceil(const * dim / epsilon ** 2 * math.log(log_arg))))


def check_jl(point_set, m: int, cfg: IsometryConfig) -> IsometryReport:
    """Norm preservation of a finite point set under fresh Gaussian draws.

    A draw counts as a violation when any point leaves the (1 +- epsilon)
    band. Requires m at or above the finite-set threshold.
    """
    pts = np.stack([np.asarray(p, dtype=np.float64) for p in point_set])
    q = pts.shape[0]
    if q < 1:
        raise ParameterError("point set is empty")
    m_req = required_m_jl(q, cfg.epsilon, cfg.delta)
    if m < m_req:
        raise PreconditionError(
            f"m={m} below the finite-set threshold; need m >= {m_req} "
            f"for Q={q}, epsilon={cfg.epsilon}, delta={cfg.delta}")
    norms = np.linalg.norm(pts, axis=1)
    nonzero = norms > 0
    rng = Rng(cfg.seed)
    violations = 0
    worst = 0.0
    records = []
    for t in range(cfg.num_matrix_draws):
        phi = gaussian_matrix(m, pts.shape[1], 1.0 / m, rng.substream(t))
        cn = np.linalg.norm(pts @ phi.T, axis=1)
        draw_worst, violated = 0.0, False
        if nonzero.any():
            ratio = cn[nonzero] / norms[nonzero]
            dist = np.abs(ratio - 1.0)
            draw_worst = float(dist.max())
            worst = max(worst, draw_worst)
            violated = bool((dist > cfg.epsilon).any())
            violations += violated
        records.append({"draw": t, "violated": int(violated),
                        "worst_distortion": draw_worst})
    frac = violations / cfg.num_matrix_draws
    se, bound = _binom_threshold(cfg.delta, cfg.num_matrix_draws)
    return IsometryReport(check="finite-set-norms", pairs_tested=q,
                          draws=cfg.num_matrix_draws, violation_fraction=frac,
                          worst_distortion=worst, delta=cfg.delta, std_err=se,
                          bound_delta=bound, passed=frac <= bound,
                          records=tuple(records))


def check_operator_norm(n: int, m: int, num_draws: int, rng: Rng) -> IsometryReport:
    """How often sigma_max of a fresh draw exceeds 2 + sqrt(n/m).

    The statement allows failure probability 2 e^{-m/2}; the pass threshold
    adds three binomial standard errors on top.
    """
    if num_draws < 1 or n < 1 or m < 1:
        raise ParameterError("counts must be positive")
    bound = 2.0 + math.sqrt(n / m)
    p_allowed = 2.0 * math.exp(-m / 2.0)
    violations = 0
    worst = 0.0
    records = []
    for t in range(num_draws):
        sigma = spectral_norm(gaussian_matrix(m, n, 1.0 / m, rng.substream(t)))
        worst = max(worst, sigma / bound)
        violated = sigma > bound
        violations += violated
        records.append({"draw": t, "violated": int(violated),
                        "sigma_max": float(sigma), "bound": bound})
    frac = violations / num_draws
    se, thresh = _binom_threshold(p_allowed, num_draws)
    return IsometryReport(check="operator-norm", pairs_tested=num_draws,
                          draws=num_draws, violation_fraction=frac,
                          worst_distortion=worst, delta=p_allowed, std_err=se,
                          bound_delta=thresh, passed=frac <= thresh,
                          records=tuple(records))


def _sample_pair_rows(gen: Generator, num_pairs: int, rng: Rng):
    layout = gen.layout
    rows1 = np.empty((num_pairs, layout.l))
    rows2 = np.empty((num_pairs, layout.l))
    for j in range(num_pairs):
        mode = "hard" if j % 2 == 0 else "soft"
        rows1[j] = sample_latent(layout, rng.substream(2 * j), mode).concat()
        rows2[j] = sample_latent(layout, rng.substream(2 * j + 1), "soft").concat()
    return rows1, rows2


def _pairwise_check(diffs: np.ndarray, dists: np.ndarray, m: int,
                    cfg: IsometryConfig, extra_low: float, extra_high: float,
                    check_name: str) -> IsometryReport:
    """Shared two-sided distance-preservation loop over fresh matrix draws."""
    if cfg.slack is not None:
        slack = cfg.slack
    else:
        positive = dists[dists > 0]
        slack = 0.05 * float(np.median(positive)) if positive.size else 0.0
    slacks = (0.0, slack, 2.0 * slack)
    rng = Rng(cfg.seed)
    viol = [0, 0, 0]
    worst = 0.0
    eps = cfg.epsilon
    pos = dists > 0
    records = []
    for t in range(cfg.num_matrix_draws):
        phi = gaussian_matrix(m, diffs.shape[1], 1.0 / m, rng.substream(t))
        cd = np.linalg.norm(diffs @ phi.T, axis=1)
        draw_worst = 0.0
        if pos.any():
            draw_worst = float(np.abs(cd[pos] / dists[pos] - 1.0).max())
            worst = max(worst, draw_worst)
        flags = []
        for i, s in enumerate(slacks):
            low = (1.0 - eps) * dists - extra_low - s
            high = (1.0 + eps) * dists + extra_high + s
            bad = bool(((cd < low) | (cd > high)).any())
            viol[i] += bad
            flags.append(int(bad))
        records.append({"draw": t, "violated_zero_slack": flags[0],
                        "violated": flags[1], "violated_double_slack": flags[2],
                        "worst_distortion": draw_worst})
    fracs = [v / cfg.num_matrix_draws for v in viol]
    se, bound = _binom_threshold(cfg.delta, cfg.num_matrix_draws)
    return IsometryReport(check=check_name, pairs_tested=diffs.shape[0],
                          draws=cfg.num_matrix_draws, violation_fraction=fracs[1],
                          worst_distortion=worst, delta=cfg.delta, std_err=se,
                          bound_delta=bound, passed=fracs[1] <= bound,
                          slack=slack, slack_profile=tuple(zip(slacks, fracs)),
                          records=tuple(records))


def check_generator_isometry(gen: Generator, m: int, cfg: IsometryConfig) -> IsometryReport:
    """Pairwise distance preservation over the generator's range.

    Threshold scales with the full latent dimension L and the ball radius
    sqrt(r_c^2 + r_v^2).
    """
    layout = gen.layout
    t_hat = gen.t_hat if gen.t_hat is not None else 1.0
    radius = math.sqrt(layout.r_c ** 2 + layout.r_v ** 2)
    m_req = required_m_range(layout.l, cfg.epsilon, cfg.delta, t_hat, radius,
                             cfg.threshold_const)
    if m < m_req:
        raise PreconditionError(
            f"m={m} below the range-isometry threshold; need m >= {m_req} "
            f"(L={layout.l}, epsilon={cfg.epsilon}, delta={cfg.delta})")
    rows1, rows2 = _sample_pair_rows(gen, cfg.num_pairs, Rng(cfg.seed).substream(1))
    x1 = generate_batch(gen, rows1)
    x2 = generate_batch(gen, rows2)
    diffs = x1 - x2
    dists = np.linalg.norm(diffs, axis=1)
    return _pairwise_check(diffs, dists, m, cfg, 0.0, 0.0, "range-isometry")


def check_structured_isometry(gen: Generator, m: int, beta_hat: float,
                              cfg: IsometryConfig) -> IsometryReport:
    """Distance preservation with the detail-variation allowance.

    Threshold scales with the codeword dimension D only; both sides of the
    band widen by (6 + 2 sqrt(N/M) -+ 2 epsilon) * beta.
    """
    layout = gen.layout
    if beta_hat < 0:
        raise ParameterError("beta_hat must be non-negative")
    t_hat = gen.t_hat if gen.t_hat is not None else 1.0
    m_req = required_m_range(layout.d, cfg.epsilon, cfg.delta, t_hat, layout.r_c,
                             cfg.threshold_const)
    if m < m_req:
        raise PreconditionError(
            f"m={m} below the codeword-isometry threshold; need m >= {m_req} "
            f"(D={layout.d}, epsilon={cfg.epsilon}, delta={cfg.delta})")
    rows1, rows2 = _sample_pair_rows(gen, cfg.num_pairs, Rng(cfg.seed).substream(1))
    x1 = generate_batch(gen, rows1)
    x2 = generate_batch(gen, rows2)
    diffs = x1 - x2
    dists = np.linalg.norm(diffs, axis=1)
    n = x1.shape[1]
    base = 6.0 + 2.0 * math.sqrt(n / m)
    extra_low = (base - 2.0 * cfg.epsilon) * beta_hat
    extra_high = (base + 2.0 * cfg.epsilon) * beta_hat
    return _pairwise_check(diffs, dists, m, cfg, extra_low, extra_high,
                           "codeword-isometry")


def _identity_sensing(n: int) -> SensingMatrix:
    return SensingMatrix(matrix=np.eye(n), m=n, n=n, seed=0, entry_variance=1.0)


def _range_slack(gen: Generator, seed: int) -> float:
    """Default additive slack: 5% of the median pairwise output distance."""
    rng = Rng(seed)
    rows = np.stack([sample_latent(gen.layout, rng.substream(i),
                                   "hard" if i % 2 == 0 else "soft").concat()
                     for i in range(64)])
    x = generate_batch(gen, rows)
    d = np.linalg.norm(x[:, None, :] - x[None, :, :], axis=-1)
    vals = d[np.triu_indices_from(d, k=1)]
    vals = vals[vals > 0]
    return 0.05 * float(np.median(vals)) if vals.size else 0.0


def check_recovery_bound(gen: Generator, proj: Projector, m: int,
                         noise_scale: float, num_trials: int,
                         cfg: IsometryConfig, off_manifold_scale: float = 0.0,
                         solver_cfg: SolverConfig = None,
                         oracle_restarts: int = 10,
                         polish_iters: int = 200) -> list:
    """Per-trial check of the end-to-end recovery error bound.

    Each trial draws a ground-truth signal from the generator (optionally
    nudged off the range), compresses it, approximates the range point
    closest to the measurements by running the alternating solver and
    polishing with compressed-domain descent (the true latent is always
    included as a candidate, so the approximation only over-estimates the
    argmin's objective), and compares the recovery error against the sum of
    the mismatch, detail, and noise terms plus slack. Trials whose oracle
    fails numerically are marked invalid and excluded.
    """
    if num_trials < 1:
        raise ParameterError("num_trials must be positive")
    layout = gen.layout
    n = gen.n
    eps = cfg.epsilon
    beta_hat = gen.beta_hat if gen.beta_hat is not None else 0.0
    solver_cfg = solver_cfg if solver_cfg is not None else SolverConfig()
    slack = cfg.slack if cfg.slack is not None else _range_slack(gen, cfg.seed)

    sqrt_ratio = math.sqrt(n / m)
    f_mismatch = (5.0 + 2.0 * sqrt_ratio - eps) / (1.0 - eps)
    f_beta = (6.0 + 2.0 * sqrt_ratio - 2.0 * eps) / (1.0 - eps)
    f_noise = 2.0 / (1.0 - eps)

    t_hat = gen.t_hat if gen.t_hat is not None else 1.0
    r_full = math.sqrt(layout.r_c ** 2 + layout.r_v ** 2)
    m_full = required_m_range(layout.l, eps, cfg.delta, t_hat, r_full,
                              cfg.threshold_const)
    full_regime = m >= m_full

    polish_cfg = replace(solver_cfg, gd_iters=polish_iters)
    checks = []
    base = Rng(cfg.seed)
    for t in range(num_trials):
        rng = base.substream(t)
        z_star = sample_latent(layout, rng.substream(0), "hard")
        x_star = generate(gen, z_star)
        if off_manifold_scale > 0:
            bump = rng.substream(1).normal(size=n)
            x_star = x_star + off_manifold_scale * bump / np.linalg.norm(bump)
        phi = SensingMatrix.from_seed(rng.substream(2).draw_seed(), m, n, 1.0 / m)
        meas = measure(phi, x_star, noise_scale, rng.substream(3))
        w_norm = float(np.linalg.norm(meas.w))

        try:
            # uncompressed oracle: closest range point to x_star
            mismatch = float(np.linalg.norm(x_star - generate(gen, z_star)))
            surrogate_exact = mismatch <= 1e-9
            if not surrogate_exact:
                ident = _identity_sensing(n)
                best = mismatch
                for s in range(oracle_restarts):
                    z0 = sample_latent(layout, rng.substream(4, s), "soft").concat()
                    z_c, _ = csgm_gd_descend(gen, ident, x_star, z0, polish_cfg, lam=0.0)
                    best = min(best, float(np.linalg.norm(
                        x_star - generate(gen, LatentVector.from_concat(layout, z_c)))))
                z_p, _ = csgm_gd_descend(gen, ident, x_star, z_star.concat(),
                                         polish_cfg, lam=0.0)
                best = min(best, float(np.linalg.norm(
                    x_star - generate(gen, LatentVector.from_concat(layout, z_p)))))
                mismatch = best

            # compressed-domain argmin surrogate
            rec = fcsrg_recover(meas, gen, proj, solver_cfg)
            candidates = [rec.z_hat.concat(), z_star.concat()]
            best_obj, best_z = None, None
            for z0 in candidates:
                z_c, trace = csgm_gd_descend(gen, phi, meas.y, z0, polish_cfg, lam=0.0)
                if best_obj is None or trace[-1] < best_obj:
                    best_obj, best_z = trace[-1], z_c
            x_hat = generate(gen, LatentVector.from_concat(layout, best_z))
            lhs = float(np.linalg.norm(x_star - x_hat))
        except (FloatingPointError, ValueError, RuntimeError):
            checks.append(BoundCheck(trial=t, regime="codeword", lhs=math.nan,
                                     term_mismatch=math.nan, term_beta=math.nan,
                                     term_noise=math.nan, slack=slack,
                                     satisfied=False, valid=False))
            continue

        term_mismatch = f_mismatch * mismatch
        term_beta = f_beta * beta_hat
        term_noise = f_noise * w_norm
        checks.append(BoundCheck(
            trial=t, regime="codeword", lhs=lhs, term_mismatch=term_mismatch,
            term_beta=term_beta, term_noise=term_noise, slack=slack,
            satisfied=lhs <= term_mismatch + term_beta + term_noise + slack,
            surrogate_exact=surrogate_exact))
        if full_regime:
            checks.append(BoundCheck(
                trial=t, regime="full-latent", lhs=lhs, term_mismatch=term_mismatch,
                term_beta=0.0, term_noise=term_noise, slack=slack,
                satisfied=lhs <= term_mismatch + term_noise + slack,
                surrogate_exact=surrogate_exact))
    return checks
