# cython: boundscheck=False, wraparound=False, cdivision=True, language_level=3
"""Compiled hot kernels: batched Gaussian log-density and systematic resampling.

Kept single-threaded so results are independent of thread-count settings.
"""

import numpy as np

cimport numpy as cnp

cnp.import_array()

BACKEND = "compiled"


def batch_mvn_logpdf(resid, chol_lower, double log_norm):
    """Log-density of zero-mean Gaussian residuals sharing one Cholesky factor.

    resid: (n, d) array of x - mean rows.
    chol_lower: (d, d) lower-triangular factor L with L L^T = cov.
    log_norm: precomputed -0.5 * (d*log(2*pi) + log det cov).
    Returns (n,) array of log-densities.
    """
    cdef double[:, ::1] r = np.ascontiguousarray(resid, dtype=np.float64)
    cdef double[:, ::1] L = np.ascontiguousarray(chol_lower, dtype=np.float64)
    cdef Py_ssize_t n = r.shape[0]
    cdef Py_ssize_t d = r.shape[1]
    out_arr = np.empty(n, dtype=np.float64)
    cdef double[::1] out = out_arr
    cdef double[::1] v = np.empty(d, dtype=np.float64)
    cdef Py_ssize_t i, j, k
    cdef double acc, quad
    for i in range(n):
        quad = 0.0
        for j in range(d):
            acc = r[i, j]
            for k in range(j):
                acc -= L[j, k] * v[k]
            v[j] = acc / L[j, j]
            quad += v[j] * v[j]
        out[i] = log_norm - 0.5 * quad
    return out_arr


def systematic_resample_indices(weights, double total, Py_ssize_t n_out, double u0):
    """Systematic resampling: one uniform draw, evenly spaced strata.

    Index semantics match the numpy fallback bit for bit: the cumulative sum
    is sequential and a stratum point selects the first particle whose
    cumulative weight strictly exceeds it.
    """
    cdef double[::1] w = np.ascontiguousarray(weights, dtype=np.float64)
    cdef Py_ssize_t n = w.shape[0]
    out_arr = np.empty(n_out, dtype=np.intp)
    cdef cnp.intp_t[::1] out = out_arr
    cdef double[::1] cum = np.empty(n, dtype=np.float64)
    cdef Py_ssize_t i, k
    cdef double run = 0.0
    cdef double step = total / n_out
    cdef double point
    for i in range(n):
        run += w[i]
        cum[i] = run
    cdef Py_ssize_t j = 0
    for k in range(n_out):
        point = (u0 + k) * step
        while j < n and cum[j] <= point:
            j += 1
        out[k] = j if j < n else n - 1
    return out_arr
