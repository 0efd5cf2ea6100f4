"""Config-driven experiment runners.

A single INI-style config file drives everything: compression-ratio sweeps
across solvers, the Monte-Carlo theory checks, projector/denoiser training,
and single-trial replays. Outputs are deterministic given (config, seed):
sweep.csv and the .ndrec record files are byte-identical across repeated
runs; wall-time lives in the final CSV column so diffs can exclude it
cleanly.

Config grammar (configparser syntax, `key = value`, `#` comments):

    [experiment]  kind, seed, out, trials, noise_scale, ratios (space
                  separated), solvers (pinv pnp fcsrg fcsrg-flat csgm),
                  dump_images, trial (recover-one only)
    [generator]   source (synthetic|file), weights, n, groups, continuous,
                  v_dim, beta, hidden, gain, seed
    [projector]   hidden, samples, epochs, batch_size, learning_rate,
                  noise_scale (-1 = auto sweep), weights (load, skip training)
    [denoiser]    hidden, samples, epochs, noise_scale
    [solver]      rho, max_iters, feasibility_tol, lam, gd_step, gd_iters,
                  restarts
    [theory]      checks, epsilon, delta, num_pairs, num_matrix_draws,
                  threshold_const, m (0 = derive from threshold), slack
                  (-1 = auto), jl_q, jl_dim, opnorm_n, opnorm_m,
                  opnorm_draws, trials, noise_scale, off_manifold

Every key has a default; unknown keys are rejected.
"""

from __future__ import annotations

import configparser
import dataclasses
import json
import math
import time
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import ConfigError, DimensionError
from .latent import (Generator, LatentLayout, generate, make_synthetic_generator,
                     sample_latent)
from .linalg import Rng, sample_sensing_matrix
from .mlp import TrainConfig
from .projector import NoiseModel, Projector, train_denoiser, train_projector_method1
from .recovery import (SolverConfig, codeword_accuracy, csgm_gd_recover,
                       fcsrg_recover, measure, pinv_recover, pnp_dae_recover,
                       reconstruction_error)
from . import theory
from .weights_io import load_weights, save_weights

CSV_SCHEMA = 1
KNOWN_SOLVERS = ("pinv", "pnp", "fcsrg", "fcsrg-flat", "csgm")

_DEFAULTS = {
    "experiment": {
        "kind": "sweep", "seed": "0", "out": "results", "trials": "100",
        "noise_scale": "0.0", "ratios": "4 8 16 32 64",
        "solvers": "pinv fcsrg csgm", "dump_images": "false", "trial": "0",
    },
    "generator": {
        "source": "synthetic", "weights": "", "n": "128",
        "groups": "2 2 2 2 2", "continuous": "0", "v_dim": "64",
        "beta": "0.1", "hidden": "64 64", "gain": "10.0", "seed": "5",
    },
    "projector": {
        "hidden": "256", "samples": "4000", "epochs": "60", "batch_size": "64",
        "learning_rate": "0.002", "noise_scale": "0.4", "weights": "",
    },
    "denoiser": {
        "hidden": "256", "samples": "2000", "epochs": "60", "noise_scale": "0.2",
    },
    "solver": {
        "rho": "0.3", "rho_pnp": "3.0", "max_iters": "100",
        "feasibility_tol": "1e-4", "lam": "0.1", "gd_step": "0.1",
        "gd_iters": "200", "restarts": "3",
    },
    "theory": {
        "checks": "finite-set-norms operator-norm", "epsilon": "0.3",
        "delta": "0.1", "num_pairs": "300", "num_matrix_draws": "200",
        "threshold_const": "16.0", "m": "0", "slack": "-1", "jl_q": "10",
        "jl_dim": "500", "opnorm_n": "100", "opnorm_m": "20",
        "opnorm_draws": "1000", "trials": "100", "noise_scale": "0.0",
        "off_manifold": "0.0",
    },
}


class ExperimentConfig:
    """Parsed and validated configuration with typed accessors."""

    def __init__(self, values: dict):
        self.values = values

    @classmethod
    def load(cls, path=None, overrides=(), seed=None, out=None) -> "ExperimentConfig":
        values = {sec: dict(keys) for sec, keys in _DEFAULTS.items()}
        if path is not None:
            parser = configparser.ConfigParser(inline_comment_prefixes=("#",))
            try:
                with open(path) as fh:
                    parser.read_file(fh)
            except OSError as exc:
                raise ConfigError(f"cannot read config {path}: {exc}") from exc
            except configparser.Error as exc:
                raise ConfigError(f"config parse error in {path}: {exc}") from exc
            for sec in parser.sections():
                if sec not in values:
                    raise ConfigError(f"unknown config section [{sec}]")
                for key, val in parser.items(sec):
                    if key not in values[sec]:
                        raise ConfigError(f"unknown config key {sec}.{key}")
                    values[sec][key] = val.strip()
        for ov in overrides:
            if "=" not in ov or "." not in ov.split("=", 1)[0]:
                raise ConfigError(f"override must look like section.key=value: {ov!r}")
            target, val = ov.split("=", 1)
            sec, key = target.split(".", 1)
            if sec not in values or key not in values[sec]:
                raise ConfigError(f"unknown override target {sec}.{key}")
            values[sec][key] = val.strip()
        if seed is not None:
            values["experiment"]["seed"] = str(seed)
        if out is not None:
            values["experiment"]["out"] = str(out)
        return cls(values)

    def _raw(self, sec: str, key: str) -> str:
        return self.values[sec][key]

    def get_int(self, sec: str, key: str) -> int:
        try:
            return int(self._raw(sec, key))
        except ValueError as exc:
            raise ConfigError(f"{sec}.{key}: expected integer, got "
                              f"{self._raw(sec, key)!r}") from exc

    def get_float(self, sec: str, key: str) -> float:
        try:
            return float(self._raw(sec, key))
        except ValueError as exc:
            raise ConfigError(f"{sec}.{key}: expected number, got "
                              f"{self._raw(sec, key)!r}") from exc

    def get_bool(self, sec: str, key: str) -> bool:
        raw = self._raw(sec, key).lower()
        if raw in ("true", "1", "yes", "on"):
            return True
        if raw in ("false", "0", "no", "off"):
            return False
        raise ConfigError(f"{sec}.{key}: expected boolean, got {raw!r}")

    def get_str(self, sec: str, key: str) -> str:
        return self._raw(sec, key)

    def get_list(self, sec: str, key: str, conv=str) -> list:
        raw = self._raw(sec, key).replace(",", " ").split()
        try:
            return [conv(tok) for tok in raw]
        except ValueError as exc:
            raise ConfigError(f"{sec}.{key}: bad list element in {raw!r}") from exc

    # assembled objects -----------------------------------------------------

    def solver_config(self, seed: int | None = None) -> SolverConfig:
        return SolverConfig(
            rho=self.get_float("solver", "rho"),
            max_iters=self.get_int("solver", "max_iters"),
            feasibility_tol=self.get_float("solver", "feasibility_tol"),
            lam=self.get_float("solver", "lam"),
            gd_step=self.get_float("solver", "gd_step"),
            gd_iters=self.get_int("solver", "gd_iters"),
            restarts=self.get_int("solver", "restarts"),
            seed=self.get_int("experiment", "seed") if seed is None else seed,
        )

    def build_generator(self) -> Generator:
        source = self.get_str("generator", "source")
        if source == "file":
            path = self.get_str("generator", "weights")
            if not path or not Path(path).is_file():
                raise ConfigError(f"generator.weights: file not found: {path!r}")
            net, layout = load_weights(path)
            if layout is None:
                raise ConfigError(f"generator.weights: {path} has no latent layout")
            from .mlp import lipschitz_upper_bound
            gen = Generator(net=net, layout=layout,
                            t_hat=lipschitz_upper_bound(net))
            from .latent import estimate_beta
            gen.beta_hat = estimate_beta(gen, 32, 32,
                                         Rng(self.get_int("generator", "seed")))
            return gen
        if source != "synthetic":
            raise ConfigError(f"generator.source must be synthetic or file, got {source!r}")
        layout = LatentLayout(
            categorical_groups=tuple(self.get_list("generator", "groups", int)),
            continuous_codes=self.get_int("generator", "continuous"),
            v_dim=self.get_int("generator", "v_dim"))
        return make_synthetic_generator(
            layout, self.get_int("generator", "n"),
            self.get_float("generator", "beta"),
            tuple(self.get_list("generator", "hidden", int)),
            seed=self.get_int("generator", "seed"),
            codeword_gain=self.get_float("generator", "gain"))

    def projector_noise(self) -> NoiseModel | None:
        scale = self.get_float("projector", "noise_scale")
        if scale < 0:
            return None  # auto sweep
        return NoiseModel("gaussian", scale, self.get_int("experiment", "seed"))

    def train_projector(self, gen: Generator, structured: bool = True):
        path = self.get_str("projector", "weights")
        if path and structured:
            net, layout = load_weights(path)
            if layout is None:
                raise ConfigError(f"projector.weights: {path} has no latent layout")
            return Projector(net, layout, structured=True), []
        cfg = TrainConfig(
            learning_rate=self.get_float("projector", "learning_rate"),
            batch_size=self.get_int("projector", "batch_size"),
            epochs=self.get_int("projector", "epochs"),
            seed=self.get_int("experiment", "seed") + (0 if structured else 1))
        return train_projector_method1(
            gen, self.projector_noise(), self.get_int("projector", "samples"),
            cfg, hidden_dims=tuple(self.get_list("projector", "hidden", int)),
            structured=structured)

    def train_denoiser_net(self, gen: Generator):
        rng = Rng(self.get_int("experiment", "seed") + 2)
        samples = self.get_int("denoiser", "samples")
        data = [generate(gen, sample_latent(gen.layout, rng.substream(i), "hard"))
                for i in range(samples)]
        cfg = TrainConfig(
            learning_rate=self.get_float("projector", "learning_rate"),
            batch_size=self.get_int("projector", "batch_size"),
            epochs=self.get_int("denoiser", "epochs"),
            seed=self.get_int("experiment", "seed") + 2)
        noise = NoiseModel("gaussian", self.get_float("denoiser", "noise_scale"),
                           self.get_int("experiment", "seed") + 2)
        net, _ = train_denoiser(data, noise,
                                tuple(self.get_list("denoiser", "hidden", int)), cfg)
        return net


# ---------------------------------------------------------------------------
# sweep

@dataclass
class SweepCell:
    ratio: float
    solver: str
    errors: list = field(default_factory=list)
    accuracies: list = field(default_factory=list)
    times: list = field(default_factory=list)

    def summary(self) -> dict:
        err = np.asarray(self.errors)
        out = {
            "ratio": self.ratio, "solver": self.solver, "trials": len(self.errors),
            "mean_error": float(err.mean()), "median_error": float(np.median(err)),
            "stderr_error": float(err.std(ddof=1) / math.sqrt(len(err)))
            if len(err) > 1 else 0.0,
            "mean_wall_time": float(np.mean(self.times)),
        }
        acc = [a for a in self.accuracies if a is not None]
        out["mean_accuracy"] = float(np.mean(acc)) if acc else None
        return out


@dataclass
class SweepReport:
    cells: list
    rows: list

    def cell(self, ratio, solver) -> SweepCell:
        for c in self.cells:
            if c.ratio == ratio and c.solver == solver:
                return c
        raise KeyError((ratio, solver))


def _fmt(value) -> str:
    if value is None:
        return ""
    if isinstance(value, float):
        return f"{value:.12g}"
    return str(value)


def dump_image(x: np.ndarray, width: int, height: int, path) -> None:
    """Write a binary PGM (P5, maxval 255).

    Values map linearly from [min, max] onto [0, 255]; constant vectors map
    to mid-gray 128. Output bytes are a pure function of the input.
    """
    x = np.asarray(x, dtype=np.float64)
    if x.ndim != 1 or width * height != x.shape[0]:
        raise DimensionError(
            f"width*height = {width}*{height} != vector length {x.shape}")
    lo, hi = float(x.min()), float(x.max())
    if hi > lo:
        q = np.rint((x - lo) / (hi - lo) * 255.0).astype(np.uint8)
    else:
        q = np.full(x.shape, 128, dtype=np.uint8)
    with open(path, "wb") as fh:
        fh.write(f"P5\n{width} {height}\n255\n".encode("ascii"))
        fh.write(q.tobytes())


def _image_dims(n: int):
    side = int(round(math.sqrt(n)))
    if side * side == n:
        return side, side
    return n, 1


def _run_solver(name, meas, gen, proj, proj_flat, denoiser, scfg, rho_pnp=None):
    if name == "pinv":
        return pinv_recover(meas)
    if name == "fcsrg":
        return fcsrg_recover(meas, gen, proj, scfg)
    if name == "fcsrg-flat":
        return fcsrg_recover(meas, gen, proj_flat, scfg)
    if name == "csgm":
        return csgm_gd_recover(meas, gen, scfg)
    if name == "pnp":
        # the plug-and-play loop needs a stiffer penalty to stay contractive
        pnp_cfg = scfg if rho_pnp is None else dataclasses.replace(scfg, rho=rho_pnp)
        return pnp_dae_recover(meas, denoiser, pnp_cfg)
    raise ConfigError(f"unknown solver {name!r}")


def run_sweep(cfg: ExperimentConfig, out_dir) -> SweepReport:
    """Compression-ratio sweep: every solver sees the identical (x*, Phi, y)
    per trial; one CSV row per run, plus an aggregate summary, figures, and
    optional image dumps of the first trial per cell."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    ratios = cfg.get_list("experiment", "ratios", float)
    solvers = cfg.get_list("experiment", "solvers")
    for s in solvers:
        if s not in KNOWN_SOLVERS:
            raise ConfigError(f"unknown solver {s!r}; known: {KNOWN_SOLVERS}")
    if not ratios or any(r < 1 for r in ratios):
        raise ConfigError("experiment.ratios must be >= 1")
    trials = cfg.get_int("experiment", "trials")
    noise_scale = cfg.get_float("experiment", "noise_scale")
    seed = cfg.get_int("experiment", "seed")
    dump = cfg.get_bool("experiment", "dump_images")

    gen = cfg.build_generator()
    n = gen.n
    proj = proj_flat = denoiser = None
    if "fcsrg" in solvers:
        proj, _ = cfg.train_projector(gen, structured=True)
    if "fcsrg-flat" in solvers:
        proj_flat, _ = cfg.train_projector(gen, structured=False)
    if "pnp" in solvers:
        denoiser = cfg.train_denoiser_net(gen)

    header = ["schema_version", "ratio", "m", "n", "solver", "trial",
              "trial_seed", "phi_seed", "recon_error", "codeword_accuracy",
              "iterations", "final_residual", "wall_time_s"]
    rows = []
    cells = {(r, s): SweepCell(r, s) for r in ratios for s in solvers}
    base = Rng(seed)
    for ri, ratio in enumerate(ratios):
        m = max(1, int(round(n / ratio)))
        for trial in range(trials):
            trng = base.substream(ri, trial)
            z_star = sample_latent(gen.layout, trng.substream(0), "hard")
            x_star = generate(gen, z_star)
            phi = sample_sensing_matrix(m, n, 1.0 / m, trng.substream(1))
            meas = measure(phi, x_star, noise_scale, trng.substream(2))
            scfg = cfg.solver_config(seed=trng.substream(3).seed)
            rho_pnp = cfg.get_float("solver", "rho_pnp")
            for solver in solvers:
                res = _run_solver(solver, meas, gen, proj, proj_flat, denoiser,
                                  scfg, rho_pnp)
                err = reconstruction_error(res.x_hat, x_star)
                acc = (codeword_accuracy(res.z_hat, z_star.c)
                       if res.z_hat is not None else None)
                resid = res.residual_trace[-1] if res.residual_trace else None
                rows.append([CSV_SCHEMA, ratio, m, n, solver, trial,
                             trng.seed, phi.seed, err, acc,
                             res.iterations, resid, res.wall_time])
                cell = cells[(ratio, solver)]
                cell.errors.append(err)
                cell.accuracies.append(acc)
                cell.times.append(res.wall_time)
                if dump and trial == 0:
                    w, h = _image_dims(n)
                    dump_image(x_star, w, h, out / f"ratio{ratio:g}_truth.pgm")
                    dump_image(res.x_hat, w, h,
                               out / f"ratio{ratio:g}_{solver}.pgm")

    with open(out / "sweep.csv", "w") as fh:
        fh.write(",".join(header) + "\n")
        for row in rows:
            fh.write(",".join(_fmt(v) for v in row) + "\n")
    report = SweepReport(cells=[cells[(r, s)] for r in ratios for s in solvers],
                         rows=rows)
    sum_header = ["ratio", "solver", "trials", "mean_error", "median_error",
                  "stderr_error", "mean_accuracy", "mean_wall_time"]
    with open(out / "sweep_summary.csv", "w") as fh:
        fh.write(",".join(sum_header) + "\n")
        for cell in report.cells:
            s = cell.summary()
            fh.write(",".join(_fmt(s[k]) for k in sum_header) + "\n")
    from . import plots
    plots.plot_sweep(report, out / "sweep.png")
    return report


# ---------------------------------------------------------------------------
# theory

KNOWN_CHECKS = ("finite-set-norms", "operator-norm", "range-isometry",
                "codeword-isometry", "recovery-bound")


def _theory_iso_config(cfg: ExperimentConfig) -> theory.IsometryConfig:
    slack = cfg.get_float("theory", "slack")
    return theory.IsometryConfig(
        epsilon=cfg.get_float("theory", "epsilon"),
        delta=cfg.get_float("theory", "delta"),
        num_pairs=cfg.get_int("theory", "num_pairs"),
        num_matrix_draws=cfg.get_int("theory", "num_matrix_draws"),
        slack=None if slack < 0 else slack,
        seed=cfg.get_int("experiment", "seed"),
        threshold_const=cfg.get_float("theory", "threshold_const"))


def _write_ndrec(path, records):
    with open(path, "w") as fh:
        for rec in records:
            fh.write(json.dumps(rec, sort_keys=True) + "\n")


def run_theory(cfg: ExperimentConfig, out_dir) -> dict:
    """Dispatch the configured checks; write one .ndrec per check plus a
    plain-text summary. Returns {check: passed}."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    checks = cfg.get_list("theory", "checks")
    if not checks:
        raise ConfigError("no checks selected")
    for c in checks:
        if c not in KNOWN_CHECKS:
            raise ConfigError(f"unknown check {c!r}; known: {KNOWN_CHECKS}")
    iso = _theory_iso_config(cfg)
    seed = cfg.get_int("experiment", "seed")
    results = {}
    lines = []

    gen = proj = None
    if any(c in checks for c in ("range-isometry", "codeword-isometry",
                                 "recovery-bound")):
        gen = cfg.build_generator()
    if "recovery-bound" in checks:
        proj, _ = cfg.train_projector(gen, structured=True)

    for check in checks:
        if check == "finite-set-norms":
            q = cfg.get_int("theory", "jl_q")
            dim = cfg.get_int("theory", "jl_dim")
            rng = Rng(seed).substream(101)
            pts = [v / np.linalg.norm(v) for v in
                   (rng.normal(size=dim) for _ in range(q))]
            m = cfg.get_int("theory", "m") or theory.required_m_jl(
                q, iso.epsilon, iso.delta)
            rep = theory.check_jl(pts, m, iso)
        elif check == "operator-norm":
            rep = theory.check_operator_norm(
                cfg.get_int("theory", "opnorm_n"), cfg.get_int("theory", "opnorm_m"),
                cfg.get_int("theory", "opnorm_draws"), Rng(seed).substream(102))
        elif check == "range-isometry":
            radius = math.sqrt(gen.layout.r_c ** 2 + gen.layout.r_v ** 2)
            m = cfg.get_int("theory", "m") or theory.required_m_range(
                gen.layout.l, iso.epsilon, iso.delta, gen.t_hat or 1.0, radius,
                iso.threshold_const)
            rep = theory.check_generator_isometry(gen, m, iso)
        elif check == "codeword-isometry":
            m = cfg.get_int("theory", "m") or theory.required_m_range(
                gen.layout.d, iso.epsilon, iso.delta, gen.t_hat or 1.0,
                gen.layout.r_c, iso.threshold_const)
            rep = theory.check_structured_isometry(gen, m, gen.beta_hat or 0.0, iso)
        else:  # recovery-bound
            m = cfg.get_int("theory", "m") or theory.required_m_range(
                gen.layout.d, iso.epsilon, iso.delta, gen.t_hat or 1.0,
                gen.layout.r_c, iso.threshold_const)
            bound_checks = theory.check_recovery_bound(
                gen, proj, m, cfg.get_float("theory", "noise_scale"),
                cfg.get_int("theory", "trials"), iso,
                off_manifold_scale=cfg.get_float("theory", "off_manifold"),
                solver_cfg=cfg.solver_config())
            recs = [dataclasses.asdict(b) for b in bound_checks]
            _write_ndrec(out / "recovery-bound.ndrec", recs)
            valid = [b for b in bound_checks if b.valid and b.regime == "codeword"]
            frac = (sum(b.satisfied for b in valid) / len(valid)) if valid else 0.0
            passed = frac >= 1.0 - iso.delta
            results[check] = passed
            lines.append(
                f"recovery-bound: satisfied_fraction={frac:.4g} "
                f"target>={1 - iso.delta:.4g} trials={len(valid)} m={m} "
                f"{'PASS' if passed else 'FAIL'}")
            continue
        _write_ndrec(out / f"{check}.ndrec", rep.records)
        results[check] = rep.passed
        lines.append(
            f"{check}: violation_fraction={rep.violation_fraction:.4g} "
            f"bound={rep.bound_delta:.4g} worst={rep.worst_distortion:.4g} "
            f"draws={rep.draws} {'PASS' if rep.passed else 'FAIL'}")

    lines.append("overall: " + ("PASS" if all(results.values()) else "FAIL"))
    (out / "theory_summary.txt").write_text("\n".join(lines) + "\n")
    from . import plots
    plots.plot_theory(results, out / "theory.png")
    return results


# ---------------------------------------------------------------------------
# single-trial replay

def run_recover_one(cfg: ExperimentConfig, out_dir) -> dict:
    """Replay one (ratio, solver, trial) cell and dump its images."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    ratios = cfg.get_list("experiment", "ratios", float)
    solvers = cfg.get_list("experiment", "solvers")
    ratio, solver = ratios[0], solvers[0]
    trial = cfg.get_int("experiment", "trial")
    noise_scale = cfg.get_float("experiment", "noise_scale")

    gen = cfg.build_generator()
    n = gen.n
    proj = proj_flat = denoiser = None
    if solver == "fcsrg":
        proj, _ = cfg.train_projector(gen, structured=True)
    if solver == "fcsrg-flat":
        proj_flat, _ = cfg.train_projector(gen, structured=False)
    if solver == "pnp":
        denoiser = cfg.train_denoiser_net(gen)

    m = max(1, int(round(n / ratio)))
    trng = Rng(cfg.get_int("experiment", "seed")).substream(0, trial)
    z_star = sample_latent(gen.layout, trng.substream(0), "hard")
    x_star = generate(gen, z_star)
    phi = sample_sensing_matrix(m, n, 1.0 / m, trng.substream(1))
    meas = measure(phi, x_star, noise_scale, trng.substream(2))
    scfg = cfg.solver_config(seed=trng.substream(3).seed)
    res = _run_solver(solver, meas, gen, proj, proj_flat, denoiser, scfg,
                      cfg.get_float("solver", "rho_pnp"))

    w, h = _image_dims(n)
    dump_image(x_star, w, h, out / "truth.pgm")
    dump_image(res.x_hat, w, h, out / "recovered.pgm")
    return {
        "ratio": ratio, "solver": solver, "trial": trial, "m": m, "n": n,
        "recon_error": reconstruction_error(res.x_hat, x_star),
        "codeword_accuracy": (codeword_accuracy(res.z_hat, z_star.c)
                              if res.z_hat is not None else None),
        "iterations": res.iterations,
        "wall_time_s": res.wall_time,
    }


# ---------------------------------------------------------------------------
# training entry points used by the CLI

def run_make_generator(cfg: ExperimentConfig, out_dir) -> Path:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    gen = cfg.build_generator()
    path = out / "generator.fcw"
    save_weights(gen.net, gen.layout, path)
    return path


def run_train_projector(cfg: ExperimentConfig, out_dir) -> Path:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    gen = cfg.build_generator()
    proj, trace = cfg.train_projector(gen, structured=True)
    path = out / "projector.fcw"
    save_weights(proj.net, proj.layout, path)
    (out / "projector_loss.txt").write_text(
        "\n".join(f"{v:.12g}" for v in trace) + "\n")
    return path


def run_train_denoiser(cfg: ExperimentConfig, out_dir) -> Path:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    gen = cfg.build_generator()
    net, trace = cfg.train_denoiser_net(gen)
    path = out / "denoiser.fcw"
    save_weights(net, None, path)
    (out / "denoiser_loss.txt").write_text(
        "\n".join(f"{v:.12g}" for v in trace) + "\n")
    return path


def weights_info(path) -> str:
    """Human-readable header summary of a weight file."""
    net, layout = load_weights(path)
    lines = [f"file: {path}", f"layers: {len(net.layers)}"]
    total = 0
    for k, layer in enumerate(net.layers):
        total += layer.weights.size + layer.bias.size
        lines.append(f"  layer {k}: {layer.in_dim} -> {layer.out_dim} "
                     f"{layer.activation.name.lower()}")
    from .mlp import Activation
    blocks = ", ".join(f"[{off}:{off + ln}) {Activation(act).name.lower()}"
                       for off, ln, act in net.output_blocks.blocks)
    lines.append(f"output blocks: {blocks}")
    lines.append(f"parameters: {total}")
    if layout is None:
        lines.append("latent layout: none")
    else:
        lines.append(f"latent layout: groups={list(layout.categorical_groups)} "
                     f"continuous={layout.continuous_codes} v_dim={layout.v_dim} "
                     f"r_c={layout.r_c:.6g} r_v={layout.r_v:.6g}")
    return "\n".join(lines)
