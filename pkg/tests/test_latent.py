import numpy as np
import pytest

from fcsrg import (LatentLayout, LatentVector, ParameterError, Rng,
                   estimate_beta, estimate_lipschitz_lower, forward, generate,
                   identity_generator, linear_generator,
                   make_synthetic_generator, sample_latent)


def test_layout_dimensions_and_default_radii():
    lay = LatentLayout(categorical_groups=(10, 10), continuous_codes=5, v_dim=128)
    assert lay.d == 25 and lay.l == 153
    assert lay.r_c == pytest.approx(np.sqrt(2 + 5))
    assert lay.r_v == pytest.approx(3 * np.sqrt(128))
    tiny = LatentLayout(v_dim=4)
    assert tiny.r_c == 1.0  # fallback keeps the radius positive
    with pytest.raises(ParameterError):
        LatentLayout(categorical_groups=(1,), v_dim=2)
    with pytest.raises(ParameterError):
        LatentLayout()


def test_hard_sampling_frequencies():
    lay = LatentLayout(categorical_groups=(3,), v_dim=0)
    counts = np.zeros(3)
    rng = Rng(17)
    for i in range(10_000):
        z = sample_latent(lay, rng.substream(i), "hard")
        assert sorted(z.c) == [0.0, 0.0, 1.0]
        counts[int(np.argmax(z.c))] += 1
    freq = counts / counts.sum()
    assert np.all(np.abs(freq - 1 / 3) <= 0.02)


def test_sampling_respects_all_invariants():
    lay = LatentLayout(categorical_groups=(4, 3), continuous_codes=2, v_dim=16)
    rng = Rng(23)
    for i in range(200):
        z = sample_latent(lay, rng.substream(i), "soft" if i % 2 else "hard")
        z.validate()
    empty_v = sample_latent(LatentLayout(categorical_groups=(3,), v_dim=0),
                            Rng(1), "hard")
    assert empty_v.v.shape == (0,)
    assert np.linalg.norm(empty_v.v) <= 1.0


def test_generate_identity_and_determinism():
    lay = LatentLayout(continuous_codes=3, v_dim=5)
    gen = identity_generator(lay)
    z = sample_latent(lay, Rng(2), "soft")
    out = generate(gen, z)
    assert np.array_equal(out, z.concat())
    lay2 = LatentLayout(categorical_groups=(2, 2, 2, 2, 2), v_dim=64)
    g2 = make_synthetic_generator(lay2, 64, 0.1, (32,), seed=9)
    z2 = sample_latent(lay2, Rng(3), "hard")
    assert generate(g2, z2).tobytes() == generate(g2, z2).tobytes()


def test_synthetic_generator_matches_its_parts():
    # oracle: evaluate the two branch networks separately and combine by hand
    lay = LatentLayout(categorical_groups=(4,), continuous_codes=0, v_dim=16)
    gen = make_synthetic_generator(lay, 48, 0.1, (32,), seed=11)
    parts = gen.parts
    rng = Rng(40)
    for i in range(10):
        z = sample_latent(lay, rng.substream(i), "soft" if i % 2 else "hard")
        by_hand = (forward(parts.f_c, z.c)
                   + parts.gamma * forward(parts.f_cv, z.concat()))
        assert np.max(np.abs(generate(gen, z) - by_hand)) <= 1e-12


def test_beta_zero_means_exact_v_invariance():
    lay = LatentLayout(categorical_groups=(4,), v_dim=16)
    gen = make_synthetic_generator(lay, 32, 0.0, (16,), seed=3)
    assert gen.parts.gamma == 0.0
    c = sample_latent(lay, Rng(5), "hard").c
    v1 = Rng(6).normal(size=16)
    v2 = Rng(7).normal(size=16)
    out1 = generate(gen, LatentVector(c=c, v=v1, layout=lay))
    out2 = generate(gen, LatentVector(c=c, v=v2, layout=lay))
    assert np.array_equal(out1, out2)
    assert estimate_beta(gen, 8, 8, Rng(8)) == 0.0


def test_certified_beta_never_exceeded():
    lay = LatentLayout(categorical_groups=(4,), v_dim=16)
    gen = make_synthetic_generator(lay, 48, 0.1, (32,), seed=13)
    est = estimate_beta(gen, 100, 100, Rng(99))
    assert est <= 0.1
    assert gen.parts.certified_beta <= 0.1 * (1 + 1e-12)


def test_difference_depends_only_on_v_branch():
    lay = LatentLayout(categorical_groups=(3,), v_dim=8)
    gen = make_synthetic_generator(lay, 24, 0.2, (16,), seed=21)
    parts = gen.parts
    rng = Rng(31)
    c = sample_latent(lay, rng, "hard").c
    v1, v2 = rng.normal(size=8), rng.normal(size=8)
    d_gen = (generate(gen, LatentVector(c=c, v=v1, layout=lay))
             - generate(gen, LatentVector(c=c, v=v2, layout=lay)))
    d_parts = parts.gamma * (forward(parts.f_cv, np.concatenate([c, v1]))
                             - forward(parts.f_cv, np.concatenate([c, v2])))
    assert np.max(np.abs(d_gen - d_parts)) <= 1e-12


def test_linear_variant_certification_is_exact():
    lay = LatentLayout(categorical_groups=(4,), v_dim=12)
    gen = make_synthetic_generator(lay, 32, 0.25, (), seed=17)
    a_cv = gen.parts.f_cv.layers[0].weights
    sigma_v = np.linalg.svd(a_cv[:, lay.d:], compute_uv=False)[0]
    analytic = 2.0 * gen.parts.gamma * sigma_v * lay.r_v
    assert analytic == pytest.approx(gen.parts.certified_beta, rel=1e-9)
    assert analytic == pytest.approx(0.25, rel=1e-6)
    est = estimate_beta(gen, 100, 100, Rng(4))
    assert 0.5 * analytic <= est <= analytic


def test_estimate_beta_monotone_in_sample_count():
    lay = LatentLayout(categorical_groups=(3,), v_dim=8)
    gen = make_synthetic_generator(lay, 24, 0.3, (16,), seed=2)
    rng = Rng(77)
    small = estimate_beta(gen, 8, 16, rng)
    large = estimate_beta(gen, 8, 32, rng)
    assert large >= small


def test_lipschitz_estimate_identity_generator():
    lay = LatentLayout(continuous_codes=2, v_dim=4)
    gen = identity_generator(lay)
    est = estimate_lipschitz_lower(gen, 50, Rng(3))
    assert est == pytest.approx(1.0, abs=1e-9)
    assert est <= gen.t_hat
    assert gen.t_hat == pytest.approx(1.0, rel=1e-5)


def test_lipschitz_estimate_linear_generator():
    lay = LatentLayout(continuous_codes=0, v_dim=6)
    a = Rng(8).normal(size=(20, 6))
    gen = linear_generator(a, lay)
    sigma = np.linalg.svd(a, compute_uv=False)[0]
    est = estimate_lipschitz_lower(gen, 10_000, Rng(5))
    assert est <= sigma * (1 + 1e-9)
    assert est >= 0.5 * sigma
    shorter = estimate_lipschitz_lower(gen, 5_000, Rng(5))
    assert est >= shorter  # nested streams never decrease the max


def test_sandwich_property_across_generators():
    rng = Rng(66)
    for seed in range(4):
        lay = LatentLayout(categorical_groups=(3,), continuous_codes=1, v_dim=6)
        gen = make_synthetic_generator(lay, 20, 0.2, (12,), seed=seed)
        est = estimate_lipschitz_lower(gen, 500, rng.substream(seed))
        assert est <= gen.t_hat
