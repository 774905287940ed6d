"""Pair-chain model layer: embedding algebra, reduction, sampling, densities."""

import numpy as np
import pytest
from conftest import toy_hmc, tracking_matrices

from pairtrack.gaussian import Gaussian, mvn_logpdf
from pairtrack.pmc import (
    GaussianPmcModel,
    HmcSpec,
    InvalidEmbeddingError,
    embed_hmc,
    validate_model,
)


def test_embedding_noise_blocks_known_values():
    model = embed_hmc(tracking_matrices())
    s11, s21, s22 = model.sigma11, model.sigma21, model.sigma22
    assert s11[0, 0] == pytest.approx(87.75, abs=1e-12)
    assert s11[2, 2] == pytest.approx(87.75, abs=1e-12)
    expected_s21 = np.array(
        [[98.25, 1.0, 0.0, 0.0], [0.0, 0.0, 98.25, 1.0]]
    )
    np.testing.assert_allclose(s21, expected_s21, atol=1e-12)
    np.testing.assert_allclose(s22, 124.75 * np.eye(2), atol=1e-12)


def test_embedding_transition_matrix_blocks():
    hmc = toy_hmc()
    model = embed_hmc(hmc)
    f, h, f2, h2 = hmc.f, hmc.h, hmc.f2, hmc.h2
    expected = np.block([[f - f2 @ h, f2], [h @ f - h2 @ h, h2]])
    np.testing.assert_allclose(model.b, expected, atol=1e-15)
    np.testing.assert_allclose(model.b, [[0.65, 0.3], [0.85, 0.1]], atol=1e-12)
    np.testing.assert_allclose(
        model.sigma, [[0.955, 0.985], [0.985, 1.495]], atol=1e-12
    )


def test_embedding_initial_pair_law():
    hmc = tracking_matrices()
    model = embed_hmc(hmc)
    np.testing.assert_allclose(
        model.init.mean, np.concatenate([hmc.m0, hmc.h @ hmc.m0]), atol=1e-15
    )
    hp = hmc.h @ hmc.p0
    np.testing.assert_allclose(model.init.cov[:4, :4], hmc.p0, atol=1e-15)
    np.testing.assert_allclose(model.init.cov[4:, :4], hp, atol=1e-15)
    np.testing.assert_allclose(
        model.init.cov[4:, 4:], hmc.r + hp @ hmc.h.T, atol=1e-15
    )


def test_zero_cross_feeds_factorizes_into_classical_densities():
    # With zero gains the pair transition density equals the product of the
    # classical transition density and the observation density.
    hmc = toy_hmc().with_zero_cross_feeds()
    model = embed_hmc(hmc)
    rng = np.random.default_rng(8)
    trans = Gaussian(mean=np.zeros(1), cov=hmc.q)
    obs = Gaussian(mean=np.zeros(1), cov=hmc.r)
    for _ in range(50):
        xi_prev = rng.standard_normal(2) * 2
        xi_new = rng.standard_normal(2) * 2
        x_new, y_new = xi_new[:1], xi_new[1:]
        joint = model.transition_logpdf(xi_new, xi_prev)
        split = mvn_logpdf(
            x_new - hmc.f @ xi_prev[:1], trans
        ) + mvn_logpdf(y_new - hmc.h @ x_new, obs)
        assert joint == pytest.approx(split, abs=1e-10)


def test_transition_sampling_moments():
    model = embed_hmc(toy_hmc())
    rng = np.random.default_rng(17)
    xi_prev = np.tile([1.0, -0.5], (200_000, 1))
    draws = model.transition_sample_many(xi_prev, rng)
    target_mean = model.b @ np.array([1.0, -0.5])
    emp_mean = draws.mean(axis=0)
    emp_cov = np.cov(draws.T)
    assert np.abs(emp_mean - target_mean).max() < 0.02
    assert np.abs(emp_cov - model.sigma).max() < 0.05 * np.abs(model.sigma).max()


def test_predicted_observation_is_observation_rows_of_mean():
    model = embed_hmc(tracking_matrices())
    rng = np.random.default_rng(2)
    xi = rng.standard_normal((10, 6)) * 50
    y_pred = model.predicted_observation_many(xi)
    full = xi @ model.b.T
    np.testing.assert_allclose(y_pred, full[:, 4:], atol=1e-12)


def test_measurement_loglik_matches_scalar_density():
    model = embed_hmc(tracking_matrices())
    rng = np.random.default_rng(4)
    y_pred = rng.standard_normal((25, 2)) * 30
    z = np.array([5.0, -12.0])
    lls = model.measurement_loglik_many(z, y_pred)
    # independent Schur complement of the noise blocks
    s11, s21, s22 = model.sigma11, model.sigma21, model.sigma22
    cond = s22 - s21 @ np.linalg.solve(s11, s21.T)
    for i in range(25):
        g = Gaussian(mean=y_pred[i], cov=cond)
        assert lls[i] == pytest.approx(mvn_logpdf(z, g), rel=1e-12)


def test_conditional_observation_hand_formula():
    model = embed_hmc(tracking_matrices())
    rng = np.random.default_rng(9)
    xi_prev = rng.standard_normal((12, 6)) * 40
    x_new = rng.standard_normal((12, 4)) * 40
    got = model.conditional_observation_many(xi_prev, x_new)
    mean = xi_prev @ model.b.T
    gain = model.sigma21 @ np.linalg.inv(model.sigma11)
    want = mean[:, 4:] + (x_new - mean[:, :4]) @ gain.T
    np.testing.assert_allclose(got, want, atol=1e-9)


def test_zero_cross_feeds_likelihood_collapses_to_classical():
    # with the couplings removed, the conditional observation prediction
    # is h x_new and the leftover covariance is exactly r: the standard
    # bootstrap likelihood of the classical model
    hmc = tracking_matrices().with_zero_cross_feeds()
    model = embed_hmc(hmc)
    np.testing.assert_allclose(model.conditional_obs_cov, hmc.r, atol=1e-9)
    rng = np.random.default_rng(10)
    xi_prev = rng.standard_normal((8, 6)) * 25
    x_new = rng.standard_normal((8, 4)) * 25
    got = model.conditional_observation_many(xi_prev, x_new)
    np.testing.assert_allclose(got, x_new @ hmc.h.T, atol=1e-9)


def test_decoupled_noise_conditional_falls_back_to_marginal():
    # sigma21 = 0 keeps the noise-free prediction and the full sigma22
    model = embed_hmc(toy_hmc(f2=1.25, h2=1.6))  # h2*r*f2 = q -> sigma21 = 0
    assert abs(model.sigma21[0, 0]) < 1e-15
    np.testing.assert_allclose(model.conditional_obs_cov, model.sigma22,
                               atol=1e-15)
    rng = np.random.default_rng(11)
    xi_prev = rng.standard_normal((6, 2))
    x_new = rng.standard_normal((6, 1))
    np.testing.assert_allclose(
        model.conditional_observation_many(xi_prev, x_new),
        model.predicted_observation_many(xi_prev),
        atol=1e-15,
    )


def test_transition_logpdf_matches_scalar_density():
    model = embed_hmc(toy_hmc())
    g_noise = Gaussian(mean=np.zeros(2), cov=model.sigma)
    rng = np.random.default_rng(13)
    for _ in range(20):
        xi_prev = rng.standard_normal(2)
        xi_new = rng.standard_normal(2)
        expected = mvn_logpdf(xi_new - model.b @ xi_prev, g_noise)
        assert model.transition_logpdf(xi_new, xi_prev) == pytest.approx(
            expected, rel=1e-12
        )


def test_oversized_coupling_rejected_with_block_name():
    with pytest.raises(InvalidEmbeddingError) as exc:
        embed_hmc(toy_hmc(f2=10.0))
    assert "state noise" in exc.value.block


def test_hmc_spec_json_roundtrip(tmp_path):
    hmc = tracking_matrices()
    path = tmp_path / "model.json"
    hmc.save(path)
    back = HmcSpec.load(path)
    for name in ("f", "q", "h", "r", "m0", "p0", "f2", "h2"):
        np.testing.assert_array_equal(getattr(back, name), getattr(hmc, name))


def test_with_zero_cross_feeds_only_touches_gains():
    hmc = tracking_matrices()
    zeroed = hmc.with_zero_cross_feeds()
    assert np.all(zeroed.f2 == 0) and np.all(zeroed.h2 == 0)
    np.testing.assert_array_equal(zeroed.f, hmc.f)
    np.testing.assert_array_equal(zeroed.q, hmc.q)
    np.testing.assert_array_equal(zeroed.r, hmc.r)


def test_validate_model_reports_health():
    diag = validate_model(embed_hmc(toy_hmc()))
    assert diag.sigma_symmetry_residual < 1e-14
    assert diag.sigma_min_eigenvalue > 0
    assert diag.obs_noise_positive_definite
    assert diag.spectral_radius == pytest.approx(0.95, abs=1e-12)
    assert diag.warnings == ()


def test_spec_shape_validation():
    with pytest.raises(ValueError):
        HmcSpec(
            f=np.eye(2), q=np.eye(2), h=np.eye(1, 2), r=np.eye(1),
            m0=np.zeros(3), p0=np.eye(2),
            f2=np.zeros((2, 1)), h2=np.zeros((1, 1)),
        )


def test_model_rejects_bad_split():
    with pytest.raises(ValueError):
        GaussianPmcModel(
            b=np.eye(2),
            sigma=np.eye(2),
            init=Gaussian(mean=np.zeros(2), cov=np.eye(2)),
            state_dim=2,
        )


def test_init_sampling_moments():
    model = embed_hmc(toy_hmc())
    rng = np.random.default_rng(31)
    draws = model.init_sample_many(200_000, rng)
    assert np.abs(draws.mean(axis=0) - model.init.mean).max() < 0.02
    emp_cov = np.cov(draws.T)
    assert np.abs(emp_cov - model.init.cov).max() < 0.05 * np.abs(
        model.init.cov
    ).max()
