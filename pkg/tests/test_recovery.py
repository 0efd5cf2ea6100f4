import numpy as np

from fcsrg import (DenseLayer, LatentLayout, LatentVector,
                   MlpNetwork, NoiseModel, OutputBlockSpec, Projector, Rng,
                   SensingMatrix, SolverConfig, TrainConfig, codeword_accuracy,
                   csgm_gd_recover, fcsrg_recover, generate,
                   identity_generator, linear_generator, measure,
                   make_synthetic_generator, pinv_recover, pnp_dae_recover,
                   reconstruction_error, sample_latent, sample_sensing_matrix,
                   train_projector_method1)
from fcsrg.projector import build_projector_net


def identity_phi(n):
    return SensingMatrix(matrix=np.eye(n), m=n, n=n, seed=0, entry_variance=1.0)


def identity_projector(layout):
    net = MlpNetwork([DenseLayer(np.eye(layout.l), np.zeros(layout.l))],
                     OutputBlockSpec.single(layout.l))
    return Projector(net, layout, structured=True)


def linear_net(w):
    return MlpNetwork([DenseLayer(w, np.zeros(w.shape[0]))],
                      OutputBlockSpec.single(w.shape[0]))


def test_measure_noiseless_and_identity():
    rng = Rng(3)
    phi = sample_sensing_matrix(4, 10, 0.25, rng)
    x = rng.normal(size=10)
    meas = measure(phi, x, 0.0, rng)
    assert np.array_equal(meas.y, phi.apply(x))
    assert meas.noise_w is None
    ident = measure(identity_phi(6), np.arange(6.0), 0.0, rng)
    assert np.array_equal(ident.y, np.arange(6.0))


def test_measure_noise_statistics():
    rng = Rng(9)
    phi = sample_sensing_matrix(8, 20, 1.0 / 8, rng)
    x = rng.normal(size=20)
    sigma = 0.3
    vals = []
    for t in range(1000):
        meas = measure(phi, x, sigma, rng.substream(t))
        vals.append(np.sum(meas.w ** 2) / phi.m)
    assert abs(np.mean(vals) - sigma ** 2) <= 0.1 * sigma ** 2


def test_measure_noise_record_replays():
    rng = Rng(5)
    phi = sample_sensing_matrix(6, 12, 1.0 / 6, rng)
    meas = measure(phi, rng.normal(size=12), 0.5, rng)
    regen = Rng(meas.noise_w.seed).normal(size=6, scale=meas.noise_w.scale)
    assert np.array_equal(meas.w, regen)


def test_fcsrg_identity_fixed_point():
    lay = LatentLayout(continuous_codes=0, v_dim=8)
    gen = identity_generator(lay)
    proj = identity_projector(lay)
    rng = Rng(7)
    x_star = 0.5 * rng.normal(size=8)
    meas = measure(identity_phi(8), x_star, 0.0, rng)
    res = fcsrg_recover(meas, gen, proj, SolverConfig(rho=1.0, max_iters=5,
                                                      feasibility_tol=1e-10))
    assert np.linalg.norm(res.x_hat - x_star) <= 1e-8
    assert res.iterations <= 5


def test_fcsrg_linear_generator_matches_latent_lsq_oracle():
    # closed-form oracle: z* = argmin ||y - Phi A z|| via dense lstsq
    rng = Rng(11)
    n, l, m = 200, 10, 40
    lay = LatentLayout(continuous_codes=0, v_dim=l)
    a = rng.normal(size=(n, l), scale=1.0 / np.sqrt(l))
    gen = linear_generator(a, lay)
    proj = Projector(linear_net(np.linalg.pinv(a)), lay, structured=True)
    z_star = sample_latent(lay, rng, "soft")
    x_star = generate(gen, z_star)
    phi = sample_sensing_matrix(m, n, 1.0 / m, rng)
    meas = measure(phi, x_star, 0.0, rng)
    res = fcsrg_recover(meas, gen, proj,
                        SolverConfig(rho=1.0, max_iters=50, feasibility_tol=0.0))
    assert reconstruction_error(res.x_hat, x_star) <= 1e-2 * np.linalg.norm(x_star)
    z_oracle = np.linalg.lstsq(phi.matrix @ a, meas.y, rcond=None)[0]
    x_oracle = a @ z_oracle
    assert (np.linalg.norm(res.x_hat - x_oracle)
            <= 1e-2 * np.linalg.norm(x_oracle))


def test_fcsrg_beta_zero_codeword_recovery():
    # M >= 4D with a noiseless beta=0 generator: hard-snapped codeword exact
    lay = LatentLayout(categorical_groups=(4,), v_dim=16)
    gen = make_synthetic_generator(lay, 64, 0.0, (32,), seed=6, codeword_gain=6)
    cfg = TrainConfig(learning_rate=2e-3, batch_size=32, epochs=40, seed=1)
    proj, _ = train_projector_method1(gen, NoiseModel("gaussian", 0.2, 2), 1500,
                                      cfg, hidden_dims=(64,))
    scfg = SolverConfig(rho=0.3, max_iters=60, feasibility_tol=1e-4)
    hits = 0
    trials = 100
    for trial in range(trials):
        trng = Rng(4000 + trial)
        z_star = sample_latent(lay, trng.substream(0), "hard")
        x_star = generate(gen, z_star)
        phi = sample_sensing_matrix(16, 64, 1.0 / 16, trng.substream(1))
        meas = measure(phi, x_star, 0.0, trng.substream(2))
        res = fcsrg_recover(meas, gen, proj, scfg)
        hits += codeword_accuracy(res.z_hat, z_star.c) == 1.0
    assert hits >= 95


def test_fcsrg_residual_contracts_on_synthetic_trials():
    lay = LatentLayout(categorical_groups=(4,), v_dim=16)
    gen = make_synthetic_generator(lay, 64, 0.05, (32,), seed=6, codeword_gain=6)
    cfg = TrainConfig(learning_rate=2e-3, batch_size=32, epochs=40, seed=1)
    proj, _ = train_projector_method1(gen, NoiseModel("gaussian", 0.2, 2), 1500,
                                      cfg, hidden_dims=(64,))
    scfg = SolverConfig(rho=0.3, max_iters=40, feasibility_tol=0.0)
    improved = 0
    for trial in range(20):
        trng = Rng(6000 + trial)
        z_star = sample_latent(lay, trng.substream(0), "hard")
        x_star = generate(gen, z_star)
        phi = sample_sensing_matrix(16, 64, 1.0 / 16, trng.substream(1))
        res = fcsrg_recover(measure(phi, x_star, 0.0, trng.substream(2)),
                            gen, proj, scfg)
        improved += res.residual_trace[-1] <= res.residual_trace[0]
    assert improved >= 18  # 90% of seeded trials


def test_fcsrg_large_rho_anchors_to_generated_iterate():
    # analytic limit: rho -> inf makes the x-update collapse onto G(z0) - mu0
    lay = LatentLayout(continuous_codes=0, v_dim=12)
    gen = linear_generator(Rng(2).normal(size=(30, 12), scale=0.3), lay)
    proj = Projector(linear_net(np.linalg.pinv(gen.net.layers[0].weights)),
                     lay, structured=True)
    rng = Rng(3)
    x_star = generate(gen, sample_latent(lay, rng, "soft"))
    phi = sample_sensing_matrix(10, 30, 0.1, rng)
    meas = measure(phi, x_star, 0.0, rng)
    captured = []
    fcsrg_recover(meas, gen, proj,
                  SolverConfig(rho=1e6, max_iters=1, feasibility_tol=0.0),
                  observer=captured.append)
    state = captured[0]
    from fcsrg.projector import project
    from fcsrg.linalg import pseudo_inverse_lsq
    z0 = project(proj, pseudo_inverse_lsq(phi, meas.y))
    anchor = generate(gen, z0)  # mu0 = 0
    assert (np.linalg.norm(state.x - anchor)
            <= 1e-3 * np.linalg.norm(anchor))


def test_csgm_identity_quadratic():
    lay = LatentLayout(continuous_codes=0, v_dim=6)
    gen = identity_generator(lay)
    rng = Rng(4)
    x_star = 0.4 * rng.normal(size=6)
    meas = measure(identity_phi(6), x_star, 0.0, rng)
    cfg = SolverConfig(lam=0.0, gd_step=0.4, gd_iters=400, restarts=2, seed=1)
    res = csgm_gd_recover(meas, gen, cfg)
    assert res.objective_trace[-1] <= 1e-8
    assert np.linalg.norm(res.x_hat - x_star) <= 1e-4


def test_csgm_matches_ridge_closed_form():
    # oracle: ((Phi A)^T Phi A + lam I)^-1 (Phi A)^T y
    rng = Rng(19)
    n, l, m = 40, 6, 15
    lay = LatentLayout(continuous_codes=0, v_dim=l)
    a = rng.normal(size=(n, l), scale=0.4)
    gen = linear_generator(a, lay)
    x_star = generate(gen, sample_latent(lay, rng, "soft"))
    phi = sample_sensing_matrix(m, n, 1.0 / m, rng)
    meas = measure(phi, x_star, 0.05, rng)
    lam = 0.1
    b = phi.matrix @ a
    z_opt = np.linalg.solve(b.T @ b + lam * np.eye(l), b.T @ meas.y)
    assert np.linalg.norm(z_opt) < lay.r_v  # constraint must not bind
    cfg = SolverConfig(lam=lam, gd_step=0.2, gd_iters=3000, restarts=2, seed=2)
    res = csgm_gd_recover(meas, gen, cfg)
    assert np.linalg.norm(res.z_hat.concat() - z_opt) <= 1e-3


def test_csgm_trace_non_increasing_with_certified_step():
    rng = Rng(23)
    n, l, m = 30, 5, 12
    lay = LatentLayout(continuous_codes=0, v_dim=l)
    a = rng.normal(size=(n, l), scale=0.4)
    gen = linear_generator(a, lay)
    x_star = generate(gen, sample_latent(lay, rng, "soft"))
    phi = sample_sensing_matrix(m, n, 1.0 / m, rng)
    meas = measure(phi, x_star, 0.0, rng)
    lam = 0.1
    smooth = 2.0 * (np.linalg.svd(phi.matrix @ a, compute_uv=False)[0] ** 2 + lam)
    cfg = SolverConfig(lam=lam, gd_step=1.0 / smooth, gd_iters=200, restarts=1,
                       seed=3)
    res = csgm_gd_recover(meas, gen, cfg)
    trace = np.asarray(res.objective_trace)
    assert np.all(np.diff(trace) <= 1e-12)


def test_pnp_identity_denoiser_fixed_point():
    n = 8
    denoiser = linear_net(np.eye(n))
    rng = Rng(6)
    x_star = rng.normal(size=n)
    meas = measure(identity_phi(n), x_star, 0.0, rng)
    res = pnp_dae_recover(meas, denoiser, SolverConfig(rho=1.0, max_iters=30,
                                                       feasibility_tol=1e-12))
    assert np.linalg.norm(res.x_hat - x_star) <= 1e-8


def test_pnp_zero_iterations_returns_initialization():
    rng = Rng(8)
    phi = sample_sensing_matrix(5, 12, 0.2, rng)
    x_star = rng.normal(size=12)
    meas = measure(phi, x_star, 0.0, rng)
    res = pnp_dae_recover(meas, linear_net(np.eye(12)),
                          SolverConfig(max_iters=0))
    from fcsrg.linalg import pseudo_inverse_lsq
    assert np.array_equal(res.x_hat, pseudo_inverse_lsq(phi, meas.y))
    assert res.iterations == 0


def test_pnp_residual_shrinks_with_trained_denoiser():
    from fcsrg import train_denoiser
    lay = LatentLayout(categorical_groups=(4,), v_dim=8)
    gen = make_synthetic_generator(lay, 32, 0.0, (16,), seed=4, codeword_gain=6)
    rng = Rng(10)
    data = [generate(gen, sample_latent(lay, rng.substream(i), "hard"))
            for i in range(800)]
    cfg = TrainConfig(learning_rate=2e-3, batch_size=32, epochs=60, seed=2)
    dae, _ = train_denoiser(data, NoiseModel("gaussian", 0.2, 3), (64,), cfg)
    z_star = sample_latent(lay, Rng(11), "hard")
    x_star = generate(gen, z_star)
    phi = sample_sensing_matrix(16, 32, 1.0 / 16, Rng(12))
    res = pnp_dae_recover(measure(phi, x_star, 0.0, Rng(13)), dae,
                          SolverConfig(rho=3.0, max_iters=60,
                                       feasibility_tol=0.0))
    assert res.residual_trace[-1] <= res.residual_trace[0] / 10.0


def test_metrics_trivial_values():
    x = np.array([1.0, 2.0, 3.0])
    assert reconstruction_error(x, x) == 0.0
    e0 = x.copy()
    e0[0] += 1.0
    assert reconstruction_error(e0, x) == 1.0


def test_codeword_accuracy_random_guess_rate():
    lay = LatentLayout(categorical_groups=(5,), v_dim=0)
    c_star = np.zeros(5)
    c_star[2] = 1.0
    rng = Rng(14)
    hits = 0
    trials = 10_000
    for i in range(trials):
        guess = np.zeros(5)
        guess[int(rng.integers(0, 5))] = 1.0
        z = LatentVector(c=guess, v=np.zeros(0), layout=lay)
        hits += codeword_accuracy(z, c_star)
    assert abs(hits / trials - 0.2) <= 0.02


def test_codeword_accuracy_tie_breaks_low_index():
    lay = LatentLayout(categorical_groups=(3,), v_dim=0)
    z = LatentVector(c=np.array([0.5, 0.5, 0.0]), v=np.zeros(0), layout=lay)
    assert codeword_accuracy(z, np.array([1.0, 0.0, 0.0])) == 1.0
    assert codeword_accuracy(z, np.array([0.0, 1.0, 0.0])) == 0.0


def test_solvers_deterministic_and_finite():
    lay = LatentLayout(categorical_groups=(4,), v_dim=8)
    gen = make_synthetic_generator(lay, 32, 0.05, (16,), seed=4, codeword_gain=6)
    net = build_projector_net(32, lay, (32,), seed=1)
    proj = Projector(net, lay)
    rng = Rng(15)
    x_star = generate(gen, sample_latent(lay, rng, "hard"))
    phi = sample_sensing_matrix(12, 32, 1.0 / 12, rng)
    meas = measure(phi, x_star, 0.01, rng)
    cfg = SolverConfig(rho=0.5, max_iters=15, gd_iters=30, restarts=2, seed=9)
    runs = [fcsrg_recover(meas, gen, proj, cfg) for _ in range(2)]
    assert runs[0].x_hat.tobytes() == runs[1].x_hat.tobytes()
    assert runs[0].residual_trace == runs[1].residual_trace
    gd = [csgm_gd_recover(meas, gen, cfg) for _ in range(2)]
    assert gd[0].x_hat.tobytes() == gd[1].x_hat.tobytes()
    for res in (runs[0], gd[0], pinv_recover(meas)):
        assert res.x_hat.shape == (32,)
        assert np.all(np.isfinite(res.x_hat))
