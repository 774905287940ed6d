"""Gaussian primitive checks: known densities, factorization, sampling moments."""

import numpy as np
import pytest

from pairtrack.gaussian import (
    Gaussian,
    NotPsdError,
    SingularCovarianceError,
    chol_log_norm,
    mvn_logpdf,
    mvn_logpdf_many,
    mvn_sample,
    mvn_sample_many,
    psd_factor,
)


def test_standard_normal_mode():
    g = Gaussian(mean=np.zeros(1), cov=np.eye(1))
    assert mvn_logpdf(np.zeros(1), g) == pytest.approx(-0.9189385332046727, abs=1e-12)


def test_bivariate_identity_mode():
    g = Gaussian(mean=np.zeros(2), cov=np.eye(2))
    assert mvn_logpdf(np.zeros(2), g) == pytest.approx(-np.log(2 * np.pi), abs=1e-12)


def test_logpdf_against_cofactor_expansion():
    # Hand-computed 2x2 case: det and inverse via cofactors.
    mean = np.array([1.0, -2.0])
    cov = np.array([[2.0, 0.3], [0.3, 0.5]])
    x = np.array([1.5, -1.0])
    det = 2.0 * 0.5 - 0.3 * 0.3
    inv = np.array([[0.5, -0.3], [-0.3, 2.0]]) / det
    r = x - mean
    expected = -0.5 * (2 * np.log(2 * np.pi) + np.log(det) + r @ inv @ r)
    g = Gaussian(mean=mean, cov=cov)
    assert mvn_logpdf(x, g) == pytest.approx(expected, abs=1e-12)


def test_logpdf_maximized_at_mean():
    rng = np.random.default_rng(3)
    a = rng.standard_normal((3, 3))
    cov = a @ a.T + 0.5 * np.eye(3)
    g = Gaussian(mean=rng.standard_normal(3), cov=cov)
    at_mean = mvn_logpdf(g.mean, g)
    for _ in range(100):
        x = g.mean + rng.standard_normal(3)
        assert mvn_logpdf(x, g) <= at_mean + 1e-12


def test_density_normalizes_on_grid():
    # Trapezoid quadrature of a 1-D density integrates to 1.
    g = Gaussian(mean=np.array([0.7]), cov=np.array([[1.3]]))
    xs = np.linspace(-10, 10, 4001)
    pdf = np.exp([mvn_logpdf(np.array([x]), g) for x in xs])
    total = np.trapezoid(pdf, xs)
    assert abs(total - 1.0) < 1e-6


def test_batched_logpdf_matches_scalar():
    rng = np.random.default_rng(11)
    a = rng.standard_normal((4, 4))
    cov = a @ a.T + np.eye(4)
    mean = rng.standard_normal(4)
    g = Gaussian(mean=mean, cov=cov)
    X = rng.standard_normal((50, 4)) * 3.0
    L, _ = psd_factor(cov)
    batched = mvn_logpdf_many(X, mean, L)
    for i in range(50):
        assert batched[i] == pytest.approx(mvn_logpdf(X[i], g), rel=1e-12)


def test_sampling_moments():
    mean = np.array([2.0, -1.0])
    cov = np.array([[1.5, 0.6], [0.6, 0.8]])
    L, _ = psd_factor(cov)
    rng = np.random.default_rng(99)
    X = mvn_sample_many(mean, L, 100_000, rng)
    emp_mean = X.mean(axis=0)
    emp_cov = np.cov(X.T)
    assert np.abs(emp_mean - mean).max() < 0.05 * np.sqrt(np.diag(cov)).max()
    assert np.abs(emp_cov - cov).max() < 0.05 * np.abs(cov).max()


def test_sampling_deterministic_given_seed():
    g = Gaussian(mean=np.array([1.0, 2.0]), cov=np.diag([0.5, 2.0]))
    a = mvn_sample(g, np.random.default_rng(7))
    b = mvn_sample(g, np.random.default_rng(7))
    np.testing.assert_array_equal(a, b)


def test_zero_covariance_samples_mean_exactly():
    g = Gaussian(mean=np.array([3.0, -4.0]), cov=np.zeros((2, 2)))
    x = mvn_sample(g, np.random.default_rng(0))
    np.testing.assert_array_equal(x, g.mean)


def test_psd_factor_roundtrip():
    rng = np.random.default_rng(21)
    for _ in range(20):
        a = rng.standard_normal((5, 5))
        cov = a @ a.T
        L, jitter = psd_factor(cov)
        err = np.linalg.norm(L @ L.T - (cov + jitter * np.eye(5)), "fro")
        assert err < 1e-8 * max(np.linalg.norm(cov, "fro"), 1.0)


def test_psd_factor_handles_rank_deficient():
    # Rank-1 outer product: one pivot is exactly zero.
    v = np.array([1.0, 2.0, 3.0])
    cov = np.outer(v, v)
    L, jitter = psd_factor(cov)
    assert jitter == 0.0
    np.testing.assert_allclose(L @ L.T, cov, atol=1e-12)


def test_psd_factor_rejects_indefinite():
    with pytest.raises(NotPsdError) as exc:
        psd_factor(np.array([[1.0, 0.0], [0.0, -1.0]]))
    assert exc.value.most_negative_pivot < 0


def test_psd_factor_rejects_hidden_indefinite():
    # Zero pivot with coupled off-diagonal: eigenvalues straddle zero.
    with pytest.raises(NotPsdError):
        psd_factor(np.array([[0.0, 1.0], [1.0, 2.0]]))


def test_logpdf_singular_covariance_raises():
    g = Gaussian(mean=np.zeros(2), cov=np.zeros((2, 2)))
    with pytest.raises(SingularCovarianceError):
        mvn_logpdf(np.zeros(2), g)


def test_gaussian_rejects_asymmetric():
    with pytest.raises(ValueError):
        Gaussian(mean=np.zeros(2), cov=np.array([[1.0, 0.5], [0.0, 1.0]]))


def test_gaussian_rejects_dimension_mismatch():
    with pytest.raises(ValueError):
        Gaussian(mean=np.zeros(3), cov=np.eye(2))


def test_chol_log_norm_matches_slogdet():
    rng = np.random.default_rng(5)
    a = rng.standard_normal((4, 4))
    cov = a @ a.T + np.eye(4)
    L, _ = psd_factor(cov)
    _, logdet = np.linalg.slogdet(cov)
    expected = -0.5 * (4 * np.log(2 * np.pi) + logdet)
    assert chol_log_norm(L, 4) == pytest.approx(expected, rel=1e-12)
