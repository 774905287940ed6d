"""Backend parity: compiled kernels must agree with the numpy fallback."""

import numpy as np
import pytest

from pairtrack import _kernels
from pairtrack._kernels import _fallback

try:
    from pairtrack._kernels import _core
except ImportError:
    _core = None

needs_compiled = pytest.mark.skipif(
    _core is None, reason="compiled kernels not built"
)


def _random_factor(rng, d):
    a = rng.standard_normal((d, d))
    cov = a @ a.T + d * np.eye(d)
    return np.linalg.cholesky(cov)


def test_fallback_logpdf_matches_dense_solve():
    rng = np.random.default_rng(0)
    L = _random_factor(rng, 4)
    cov = L @ L.T
    resid = rng.standard_normal((64, 4))
    log_norm = -0.5 * (4 * np.log(2 * np.pi) + np.linalg.slogdet(cov)[1])
    got = _fallback.batch_mvn_logpdf(resid, L, log_norm)
    quad = np.einsum("nd,nd->n", resid @ np.linalg.inv(cov), resid)
    np.testing.assert_allclose(got, log_norm - 0.5 * quad, rtol=1e-10)


@needs_compiled
def test_logpdf_backends_agree():
    rng = np.random.default_rng(1)
    for d in (1, 2, 4, 6):
        L = _random_factor(rng, d)
        resid = rng.standard_normal((257, d)) * 5.0
        log_norm = -0.7 * d
        a = _fallback.batch_mvn_logpdf(resid, L, log_norm)
        b = _core.batch_mvn_logpdf(resid, L, log_norm)
        np.testing.assert_allclose(a, b, rtol=1e-12, atol=1e-12)


def test_fallback_resample_covers_weight_mass():
    # Each index i must appear floor or ceil of n_out*w_i/total times.
    rng = np.random.default_rng(2)
    w = rng.random(100)
    total = float(np.sum(w))
    n_out = 1000
    idx = _fallback.systematic_resample_indices(w, total, n_out, 0.37)
    counts = np.bincount(idx, minlength=100)
    expect = n_out * w / total
    assert np.all(counts >= np.floor(expect) - 1e-9)
    assert np.all(counts <= np.ceil(expect) + 1e-9)


@needs_compiled
def test_resample_backends_agree_bitwise():
    rng = np.random.default_rng(3)
    for n, n_out in [(10, 10), (100, 250), (1000, 777), (5, 1)]:
        w = rng.random(n)
        w[rng.integers(0, n)] = 0.0  # zero-weight particle must never be picked
        total = float(np.sum(w))
        for u0 in (0.0, 0.25, 0.5, 0.999999):
            a = _fallback.systematic_resample_indices(w, total, n_out, u0)
            b = _core.systematic_resample_indices(w, total, n_out, u0)
            np.testing.assert_array_equal(np.asarray(a), np.asarray(b))


def test_resample_sorted_and_in_range():
    rng = np.random.default_rng(4)
    w = rng.random(50)
    idx = np.asarray(
        _kernels.systematic_resample_indices(w, float(w.sum()), 123, 0.5)
    )
    assert idx.min() >= 0 and idx.max() < 50
    assert np.all(np.diff(idx) >= 0)


def test_resample_never_selects_zero_weight():
    w = np.array([0.0, 1.0, 0.0, 2.0, 0.0])
    idx = np.asarray(
        _kernels.systematic_resample_indices(w, 3.0, 300, 0.123)
    )
    assert set(np.unique(idx)) <= {1, 3}
    counts = np.bincount(idx, minlength=5)
    assert abs(counts[1] - 100) <= 1 and abs(counts[3] - 200) <= 1


def test_backend_name_reports_selection():
    assert _kernels.backend_name() in ("compiled", "python")
    assert _kernels.BACKEND in ("compiled", "python")
