"""Compare the compiled kernel backend against the numpy fallback.

Times the two hot kernels (batched Gaussian log-density, systematic
resampling) in isolation and one full filter scan end to end. Run twice
to see both backends:

    python3 benchmarks/bench_kernels.py
    PAIRTRACK_PURE=1 python3 benchmarks/bench_kernels.py
"""

import time

import numpy as np

from pairtrack import backend_name
from pairtrack._kernels import batch_mvn_logpdf, systematic_resample_indices
from pairtrack.cli import default_experiment, site_birth_model
from pairtrack.gaussian import psd_factor
from pairtrack.phd import filter_step, init_cloud
from pairtrack.pmc import embed_hmc
from pairtrack.scenario import generate_measurements, generate_truth


def timeit(fn, repeat=7):
    best = np.inf
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn()
        best = min(best, time.perf_counter() - t0)
    return best


def bench_logpdf(rng):
    n, d = 200_000, 2
    cov = np.array([[14.74, 0.3], [0.3, 14.74]])
    chol, _ = psd_factor(cov, "bench")
    log_norm = -0.5 * (d * np.log(2 * np.pi)) - np.log(np.diag(chol)).sum()
    resid = rng.standard_normal((n, d)) * 4.0
    return timeit(lambda: batch_mvn_logpdf(resid, chol, log_norm)), n


def bench_resample(rng):
    n, n_out = 200_000, 100_000
    w = rng.random(n)
    total = float(w.sum())
    return timeit(
        lambda: systematic_resample_indices(w, total, n_out, 0.37)
    ), n_out


def bench_filter_scan():
    cfg = default_experiment(runs=1, seed=0)
    model = embed_hmc(cfg.scenario.hmc)
    rng = np.random.default_rng(0)
    truth = generate_measurements(
        generate_truth(cfg.scenario, rng), cfg.scenario, rng
    )
    params = cfg.filter_params
    scans = truth.measurement_arrays()

    def run():
        frng = np.random.default_rng(1)
        cloud = init_cloud(params, 0.0, frng, state_dim=model.state_dim)
        for zk in scans[:10]:
            cloud, _ = filter_step(cloud, model, params, zk, frng)

    return timeit(run, repeat=3), 10


def main():
    rng = np.random.default_rng(42)
    print(f"backend: {backend_name()}")
    t, n = bench_logpdf(rng)
    print(f"batch_mvn_logpdf          {n:>9,} evals   {t * 1e3:8.2f} ms")
    t, n = bench_resample(rng)
    print(f"systematic_resample       {n:>9,} draws   {t * 1e3:8.2f} ms")
    t, n = bench_filter_scan()
    print(f"full filter scan          {n:>9,} steps   {t * 1e3:8.2f} ms")


if __name__ == "__main__":
    main()
