"""Acceptance suite: one test per release criterion, at its stated tolerance.

Each test prints a single [ACCEPTANCE] pass line; a failure shows up as the
pytest failure itself. Heavy fixtures (the structured generator and its
trained projector) are shared across criteria.
"""

import math
import time

import numpy as np
import pytest
from scipy.stats import binomtest

import fcsrg as F
from fcsrg.experiments import ExperimentConfig, run_sweep
from fcsrg.recovery import csgm_gd_descend
from fcsrg.theory import IsometryConfig, check_jl, check_operator_norm, \
    check_recovery_bound

from conftest import fd_param_grads, random_small_net, rel_err


def _report(name):
    print(f"\n[ACCEPTANCE] {name}: PASS")


# shared structured-latent setup: D=10, L=74, certified beta target 0.1
N_SIGNAL = 128
M_STABLE = 24
LAYOUT = F.LatentLayout(categorical_groups=(2, 2, 2, 2, 2), v_dim=64)
SOLVER = F.SolverConfig(rho=0.3, max_iters=100, feasibility_tol=1e-4,
                        gd_iters=200, restarts=3, gd_step=0.1, seed=0)


@pytest.fixture(scope="module")
def structured_setup():
    gen = F.make_synthetic_generator(LAYOUT, N_SIGNAL, 0.1, (64, 64), seed=5,
                                     codeword_gain=10)
    cfg = F.TrainConfig(learning_rate=2e-3, batch_size=64, epochs=60, seed=1)
    proj, _ = F.train_projector_method1(gen, F.NoiseModel("gaussian", 0.4, 3),
                                        4000, cfg, hidden_dims=(256,),
                                        structured=True)
    return gen, proj


def _paired_instances(gen, count):
    for trial in range(count):
        trng = F.Rng(1000 + trial)
        z_star = F.sample_latent(gen.layout, trng.substream(0), "hard")
        x_star = F.generate(gen, z_star)
        phi = F.sample_sensing_matrix(M_STABLE, gen.n, 1.0 / M_STABLE,
                                      trng.substream(1))
        yield z_star, x_star, F.measure(phi, x_star, 0.0, trng.substream(2))


def test_solver_oracle_equivalence():
    t0 = time.perf_counter()
    rng = F.Rng(424242)
    for trial in range(50):
        sub = rng.substream(trial)
        m = int(sub.integers(1, 33))
        n = int(sub.integers(max(m, 2), 257))
        rho = float(10.0 ** sub.uniform(-3, 3))
        phi = F.sample_sensing_matrix(m, n, 1.0 / m, sub)
        b = sub.normal(size=n)
        x = F.ridge_solve(phi, rho, b)
        direct = np.linalg.solve(phi.matrix.T @ phi.matrix + rho * np.eye(n), b)
        rel = np.linalg.norm(x - direct) / np.linalg.norm(direct)
        assert rel <= 1e-10, f"instance {trial}: rel={rel:.3e}"
    elapsed = time.perf_counter() - t0
    assert elapsed < 5.0
    _report(f"solver-oracle equivalence (50 instances, {elapsed:.2f}s)")


def test_gradient_correctness():
    t0 = time.perf_counter()
    checked = 0
    for seed in range(20):
        net = random_small_net(seed)
        rng = F.Rng(9000 + seed)
        x = rng.normal(size=net.in_dim)
        t = rng.normal(size=net.out_dim)
        loss = "mixed" if seed % 2 else "squared-error"
        if loss == "mixed":
            for off, length, act in net.output_blocks.blocks:
                if act == F.Activation.SOFTMAX:
                    seg = np.abs(t[off:off + length]) + 0.1
                    t[off:off + length] = seg / seg.sum()
        ana = F.grad_params(net, x, t, loss)
        num = fd_param_grads(net, x, t, loss)
        for (aw, ab), (nw, nb) in zip(ana, num):
            assert rel_err(aw, nw) <= 1e-4
            assert rel_err(ab, nb) <= 1e-4
        cot = rng.normal(size=net.out_dim)
        ana_in = F.grad_input(net, x, cot)
        num_in = np.zeros_like(x)
        for i in range(x.size):
            xp = x.copy(); xp[i] += 1e-5
            xm = x.copy(); xm[i] -= 1e-5
            num_in[i] = (cot @ F.forward(net, xp) - cot @ F.forward(net, xm)) / 2e-5
        assert rel_err(ana_in, num_in) <= 1e-4
        checked += 1
    elapsed = time.perf_counter() - t0
    assert checked >= 20 and elapsed < 10.0
    _report(f"gradient correctness ({checked} nets, {elapsed:.2f}s)")


def test_exact_recovery_fixture():
    n, l, m = 200, 10, 40
    lay = F.LatentLayout(continuous_codes=0, v_dim=l)
    worst_time = 0.0
    for trial in range(20):
        trng = F.Rng(100 + trial)
        a = trng.normal(size=(n, l), scale=1.0 / math.sqrt(l))
        gen = F.linear_generator(a, lay)
        from fcsrg.mlp import DenseLayer, MlpNetwork, OutputBlockSpec
        pnet = MlpNetwork([DenseLayer(np.linalg.pinv(a), np.zeros(l))],
                          OutputBlockSpec.single(l))
        proj = F.Projector(pnet, lay, structured=True)
        z_star = F.sample_latent(lay, trng, "soft")
        x_star = F.generate(gen, z_star)
        phi = F.sample_sensing_matrix(m, n, 1.0 / m, trng)
        meas = F.measure(phi, x_star, 0.0, trng)
        t0 = time.perf_counter()
        res = F.fcsrg_recover(meas, gen, proj,
                              F.SolverConfig(rho=1.0, max_iters=50,
                                             feasibility_tol=0.0))
        worst_time = max(worst_time, time.perf_counter() - t0)
        assert res.iterations <= 50
        rel = np.linalg.norm(res.x_hat - x_star) / np.linalg.norm(x_star)
        assert rel <= 1e-2, f"trial {trial}: rel={rel:.3e}"
        z_lsq = np.linalg.lstsq(phi.matrix @ a, meas.y, rcond=None)[0]
        x_oracle = a @ z_lsq
        rel_oracle = (np.linalg.norm(res.x_hat - x_oracle)
                      / np.linalg.norm(x_oracle))
        assert rel_oracle <= 1e-2, f"trial {trial}: vs oracle {rel_oracle:.3e}"
    assert worst_time < 1.0
    _report(f"exact-recovery fixture (20 trials, worst {worst_time * 1e3:.0f}ms)")


def test_structured_latent_stability(structured_setup):
    t0 = time.perf_counter()
    gen, proj = structured_setup
    assert gen.beta_hat <= 0.1
    assert gen.layout.d == 10 and gen.layout.l == 74
    acc_f, acc_c = [], []
    for z_star, x_star, meas in _paired_instances(gen, 100):
        rf = F.fcsrg_recover(meas, gen, proj, SOLVER)
        rc = F.csgm_gd_recover(meas, gen, SOLVER)
        acc_f.append(F.codeword_accuracy(rf.z_hat, z_star.c))
        acc_c.append(F.codeword_accuracy(rc.z_hat, z_star.c))
    acc_f, acc_c = np.array(acc_f), np.array(acc_c)
    wins_f = int((acc_f > acc_c).sum())
    wins_c = int((acc_c > acc_f).sum())
    p = binomtest(wins_f, wins_f + wins_c, 0.5, alternative="greater").pvalue
    elapsed = time.perf_counter() - t0
    assert acc_f.mean() >= 0.8, f"alternating-solver accuracy {acc_f.mean():.3f}"
    assert np.median(acc_c) < np.median(acc_f)
    assert p < 0.05, f"sign test p={p:.4g} ({wins_f} vs {wins_c})"
    assert elapsed < 300.0
    _report(f"structured-latent stability (acc {acc_f.mean():.2f} vs "
            f"{acc_c.mean():.2f}, sign-test p={p:.2g}, {elapsed:.0f}s)")


def test_recovery_bound_empirical(structured_setup):
    t0 = time.perf_counter()
    gen, proj = structured_setup
    iso = IsometryConfig(epsilon=0.25, delta=0.1, seed=9, threshold_const=0.5)
    checks = check_recovery_bound(gen, proj, M_STABLE, 0.0, 100, iso,
                                  solver_cfg=SOLVER)
    valid = [c for c in checks if c.regime == "codeword" and c.valid]
    assert len(valid) == 100
    frac = sum(c.satisfied for c in valid) / len(valid)
    elapsed = time.perf_counter() - t0
    assert frac >= 0.90, f"bound satisfied in {frac:.2%} of trials"
    assert elapsed < 600.0
    _report(f"recovery-bound empirical check ({frac:.0%} of 100 trials, "
            f"{elapsed:.0f}s)")


def test_operator_norm_tail_bound():
    t0 = time.perf_counter()
    rep = check_operator_norm(100, 20, 1000, F.Rng(31337))
    elapsed = time.perf_counter() - t0
    assert rep.violation_fraction == 0.0, \
        f"observed violations: {rep.violation_fraction}"
    assert rep.passed
    assert elapsed < 60.0
    _report(f"operator-norm tail bound (0 violations in 1000 draws, "
            f"{elapsed:.0f}s)")


def test_finite_set_preservation_fixture():
    t0 = time.perf_counter()
    rng = F.Rng(2718)
    pts = []
    for i in range(10):
        v = rng.substream(i).normal(size=100)
        pts.append(v / np.linalg.norm(v))
    cfg = IsometryConfig(epsilon=0.3, delta=0.1, num_matrix_draws=500, seed=16)
    rep = check_jl(pts, 472, cfg)
    elapsed = time.perf_counter() - t0
    assert rep.violation_fraction <= 0.1
    assert rep.passed
    assert elapsed < 60.0
    _report(f"finite-set norm preservation (violation fraction "
            f"{rep.violation_fraction:.3f} over 500 draws, {elapsed:.0f}s)")


def test_speed_claim(structured_setup):
    # matched-error protocol: time the descent baseline until it reaches the
    # alternating solver's final compressed-domain objective (or exhausts its
    # budget, in which case it is both slower and worse)
    t0 = time.perf_counter()
    gen, proj = structured_setup
    ratios = []
    for z_star, x_star, meas in _paired_instances(gen, 20):
        t_f0 = time.perf_counter()
        rf = F.fcsrg_recover(meas, gen, proj, SOLVER)
        time_f = time.perf_counter() - t_f0
        target = rf.objective_trace[-1] ** 2  # descent traces are squared norms

        time_c = 0.0
        matched = False
        rng = F.Rng(SOLVER.seed)
        for s in range(max(1, SOLVER.restarts)):
            z0 = F.sample_latent(gen.layout, rng.substream(s), "soft").concat()
            t_c0 = time.perf_counter()
            z, trace = csgm_gd_descend(gen, meas.phi, meas.y, z0, SOLVER,
                                       lam=0.0)
            run_time = time.perf_counter() - t_c0
            hits = [i for i, v in enumerate(trace) if v <= target]
            if hits:
                time_c += run_time * (hits[0] / max(len(trace) - 1, 1))
                matched = True
                break
            time_c += run_time
        ratios.append(time_f / time_c if time_c > 0 else math.inf)
    median_ratio = float(np.median(ratios))
    elapsed = time.perf_counter() - t0
    assert median_ratio <= 0.2, f"median wall-time ratio {median_ratio:.3f}"
    assert elapsed < 300.0
    _report(f"speed claim (median time ratio {median_ratio:.3f} <= 0.2, "
            f"{elapsed:.0f}s)")


@pytest.fixture(scope="module")
def trend_sweep(tmp_path_factory):
    cfg = ExperimentConfig.load(None, overrides=[
        "experiment.ratios=4 8 16 32 64",
        "experiment.solvers=pinv pnp fcsrg fcsrg-flat csgm",
        "experiment.trials=40",
        "experiment.seed=42",
        "solver.gd_iters=150",
    ])
    out = tmp_path_factory.mktemp("trend")
    return run_sweep(cfg, out)


def test_error_trend_reproduction(trend_sweep):
    report = trend_sweep
    ratios = [4.0, 8.0, 16.0, 32.0, 64.0]
    for solver in ("pinv", "pnp", "fcsrg", "fcsrg-flat", "csgm"):
        stats = [report.cell(r, solver).summary() for r in ratios]
        for lo, hi in zip(stats, stats[1:]):
            allowance = 3.0 * math.hypot(lo["stderr_error"], hi["stderr_error"])
            assert lo["mean_error"] <= hi["mean_error"] + allowance, (
                f"{solver}: error not monotone within 3 SE at ratio "
                f"{hi['ratio']} ({lo['mean_error']:.3f} vs {hi['mean_error']:.3f})")
    _report("error trend non-decreasing across ratios (all solvers, 3 SE)")


def test_structured_beats_flat_at_high_compression(trend_sweep):
    report = trend_sweep
    for ratio in (32.0, 64.0):
        acc_structured = report.cell(ratio, "fcsrg").summary()["mean_accuracy"]
        acc_flat = report.cell(ratio, "fcsrg-flat").summary()["mean_accuracy"]
        assert acc_structured > acc_flat, (
            f"ratio {ratio}: structured {acc_structured:.3f} "
            f"vs flat {acc_flat:.3f}")
    _report("structured codeword accuracy exceeds unstructured at >=32x")


def test_sweep_determinism(tmp_path):
    overrides = [
        "experiment.ratios=4 16",
        "experiment.solvers=pinv pnp fcsrg fcsrg-flat csgm",
        "experiment.trials=2",
        "experiment.seed=7",
        "generator.n=48", "generator.groups=3", "generator.v_dim=8",
        "generator.hidden=16", "projector.hidden=32", "projector.samples=400",
        "projector.epochs=8", "denoiser.hidden=32", "denoiser.samples=200",
        "denoiser.epochs=8", "solver.max_iters=20", "solver.gd_iters=30",
    ]
    cfg = ExperimentConfig.load(None, overrides=overrides)
    run_sweep(cfg, tmp_path / "one")
    cfg2 = ExperimentConfig.load(None, overrides=overrides)
    run_sweep(cfg2, tmp_path / "two")

    def stripped(path):
        rows = (path / "sweep.csv").read_text().strip().splitlines()
        return ["".join(r.split(",")[:-1]) for r in rows]

    assert stripped(tmp_path / "one") == stripped(tmp_path / "two")
    _report("sweep determinism (byte-identical CSV, timing column excluded)")
