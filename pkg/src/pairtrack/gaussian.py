"""Multivariate Gaussian primitives shared by every numeric module.

Densities are computed in log space throughout; raw densities are only
materialized at weight-normalization boundaries. Near-singular covariances
are factored through a small jitter ladder so a run degrades gracefully
instead of dying on a borderline matrix.
"""

from dataclasses import dataclass

import numpy as np

from . import _kernels

LOG_2PI = float(np.log(2.0 * np.pi))

# Relative jitter ladder tried in order; each level scales trace(cov)/dim.
JITTER_LEVELS = (0.0, 1e-12, 1e-10, 1e-8)

# Pivot slack accepted as "zero" in the semidefinite Cholesky, relative to
# the largest diagonal entry.
_PIVOT_RTOL = 1e-12


class NotPsdError(np.linalg.LinAlgError):
    """Matrix is not positive semidefinite at any jitter level."""

    def __init__(self, message, most_negative_pivot):
        super().__init__(message)
        self.most_negative_pivot = most_negative_pivot


class SingularCovarianceError(np.linalg.LinAlgError):
    """Covariance is singular where a strictly positive-definite one is required."""


def _as_matrix(a, name="matrix"):
    a = np.asarray(a, dtype=np.float64)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise ValueError(f"{name} must be a square matrix, got shape {a.shape}")
    return a


def symmetry_residual(a):
    """max |a - a^T| scaled by max(1, max |a|)."""
    a = np.asarray(a, dtype=np.float64)
    scale = max(1.0, np.abs(a).max()) if a.size else 1.0
    return float(np.abs(a - a.T).max() / scale)


@dataclass(frozen=True)
class Gaussian:
    """Multivariate normal with validated symmetric PSD covariance."""

    mean: np.ndarray
    cov: np.ndarray

    def __post_init__(self):
        mean = np.atleast_1d(np.asarray(self.mean, dtype=np.float64))
        cov = _as_matrix(self.cov, "cov")
        if mean.ndim != 1 or cov.shape[0] != mean.shape[0]:
            raise ValueError(
                f"mean/cov dimension mismatch: {mean.shape} vs {cov.shape}"
            )
        if symmetry_residual(cov) > 1e-12:
            raise ValueError("cov is not symmetric within 1e-12 relative tolerance")
        eigs = np.linalg.eigvalsh(cov)
        floor = -1e-9 * max(np.linalg.norm(cov), 1e-300)
        if eigs.min() < floor:
            raise NotPsdError(
                f"cov has eigenvalue {eigs.min():.3e} below PSD tolerance",
                most_negative_pivot=float(eigs.min()),
            )
        object.__setattr__(self, "mean", mean)
        object.__setattr__(self, "cov", cov)

    @property
    def dim(self):
        return self.mean.shape[0]


def _semidefinite_cholesky(a, pivot_tol, col_tol):
    """Lower Cholesky factor tolerating zero pivots.

    Returns (L, ok, most_negative_pivot). Pivots in [-pivot_tol, 0] are
    clamped to zero; such a column must then have a vanishing residual
    (within col_tol) or the matrix is indefinite. A pivot below -pivot_tol
    fails the factorization.
    """
    n = a.shape[0]
    L = np.zeros_like(a)
    most_negative = 0.0
    ok = True
    for j in range(n):
        pivot = a[j, j] - L[j, :j] @ L[j, :j]
        if pivot < -pivot_tol:
            most_negative = min(most_negative, pivot)
            ok = False
            continue
        col = a[j + 1 :, j] - L[j + 1 :, :j] @ L[j, :j] if j + 1 < n else None
        if pivot <= 0.0:
            # Semidefinite direction: only valid if nothing couples to it.
            if col is not None and col.size and np.abs(col).max() > col_tol:
                cmax = float(np.abs(col).max())
                most_negative = min(most_negative, -cmax)
                ok = False
            continue
        L[j, j] = np.sqrt(pivot)
        if col is not None:
            L[j + 1 :, j] = col / L[j, j]
    return L, ok, most_negative


def psd_factor(cov, name="cov"):
    """Factor cov (+ smallest working jitter) as L L^T.

    Returns (L, jitter). Tries jitter levels 0, 1e-12, 1e-10, 1e-8 relative
    to trace(cov)/dim and reports the one that succeeded; raises NotPsdError
    carrying the most negative pivot when all levels fail.
    """
    cov = _as_matrix(cov, name)
    d = cov.shape[0]
    scale = max(float(np.trace(cov)), 0.0) / max(d, 1)
    diag_max = max(float(np.abs(np.diag(cov)).max()), 1.0) if d else 1.0
    pivot_tol = _PIVOT_RTOL * diag_max
    col_tol = np.sqrt(pivot_tol * diag_max)
    most_negative = 0.0
    for level in JITTER_LEVELS:
        jitter = level * scale
        L, ok, worst = _semidefinite_cholesky(
            cov + jitter * np.eye(d) if jitter else cov, pivot_tol, col_tol
        )
        if ok:
            return L, jitter
        most_negative = min(most_negative, worst)
    raise NotPsdError(
        f"{name} is not positive semidefinite "
        f"(most negative pivot {most_negative:.6e})",
        most_negative_pivot=most_negative,
    )


def chol_log_norm(L, dim):
    """-0.5 * (dim*log(2*pi) + log det cov) from a strictly positive factor.

    Raises SingularCovarianceError when the factor has a zero pivot.
    """
    diag = np.diag(L)
    if np.any(diag <= 0.0):
        raise SingularCovarianceError(
            "covariance is singular (zero Cholesky pivot); density undefined"
        )
    return -0.5 * (dim * LOG_2PI + 2.0 * float(np.sum(np.log(diag))))


def mvn_logpdf(x, g):
    """Log-density of x under the Gaussian g.

    Requires a strictly positive-definite covariance (after the psd_factor
    jitter ladder); raises SingularCovarianceError otherwise.
    """
    x = np.atleast_1d(np.asarray(x, dtype=np.float64))
    if x.shape != g.mean.shape:
        raise ValueError(f"x has dimension {x.shape}, expected {g.mean.shape}")
    L, _ = psd_factor(g.cov)
    log_norm = chol_log_norm(L, g.dim)
    resid = (x - g.mean).reshape(1, -1)
    return float(_kernels.batch_mvn_logpdf(resid, L, log_norm)[0])


def mvn_logpdf_many(X, mean, chol_lower, log_norm=None):
    """Log-densities of the rows of X under one Gaussian given its factor."""
    X = np.asarray(X, dtype=np.float64)
    if log_norm is None:
        log_norm = chol_log_norm(chol_lower, X.shape[1])
    return _kernels.batch_mvn_logpdf(X - mean, chol_lower, log_norm)


def mvn_sample(g, rng):
    """One draw mean + L u with u standard normal from rng.

    Deterministic given the rng state; a zero covariance returns the mean
    exactly.
    """
    L, _ = psd_factor(g.cov)
    return g.mean + L @ rng.standard_normal(g.dim)


def mvn_sample_many(mean, chol_lower, n, rng):
    """n draws from one Gaussian given its Cholesky-type factor."""
    d = chol_lower.shape[0]
    return np.asarray(mean) + rng.standard_normal((n, d)) @ chol_lower.T
