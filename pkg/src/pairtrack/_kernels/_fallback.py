"""Pure-numpy implementations of the hot kernels.

Semantics match ``_core`` (the Cython build) exactly; floating-point results
may differ in the last ulp because BLAS applies a different operation order.
"""

import numpy as np
from scipy.linalg import solve_triangular

BACKEND = "python"


def batch_mvn_logpdf(resid, chol_lower, log_norm):
    """Log-density of zero-mean Gaussian residuals sharing one Cholesky factor.

    resid: (n, d) array of x - mean rows.
    chol_lower: (d, d) lower-triangular factor L with L L^T = cov.
    log_norm: precomputed -0.5 * (d*log(2*pi) + log det cov).
    Returns (n,) array of log-densities.
    """
    resid = np.ascontiguousarray(resid, dtype=np.float64)
    v = solve_triangular(chol_lower, resid.T, lower=True, check_finite=False)
    return log_norm - 0.5 * np.einsum("dn,dn->n", v, v)


def systematic_resample_indices(weights, total, n_out, u0):
    """Systematic resampling: one uniform draw, evenly spaced strata.

    weights: (n,) nonnegative, summing to ``total`` (passed in so both
    backends stratify against the identical mass value).
    Returns (n_out,) indices into weights.
    """
    cum = np.cumsum(weights)
    step = total / n_out
    points = (u0 + np.arange(n_out, dtype=np.float64)) * step
    idx = np.searchsorted(cum, points, side="right")
    return np.minimum(idx, len(weights) - 1).astype(np.intp)
