"""Exact references the test suite trusts.

Two independent implementations of what the particle filter approximates:
a closed-form single-target filter for linear-Gaussian pair chains, and a
dense-grid quadrature of the joint intensity recursion for 1-D problems.
Both are deliberately written in a different style from the filter (no
particles, no shared helpers beyond basic linear algebra) so agreement is
evidence rather than tautology.
"""

from dataclasses import dataclass

import numpy as np
from scipy.linalg import solve_discrete_lyapunov
from scipy.signal import fftconvolve

from .gaussian import SingularCovarianceError


def _blocks(model):
    nx = model.state_dim
    b = model.b
    return (
        b[:nx, :nx], b[:nx, nx:], b[nx:, :nx], b[nx:, nx:],
        model.sigma[:nx, :nx], model.sigma[:nx, nx:], model.sigma[nx:, nx:],
    )


def _condition(mean_x, mean_y, cxx, cxy, cyy, z):
    """Gaussian conditioning of x on an observed y, tolerant of degenerate
    but information-free directions of cyy."""
    cyy = 0.5 * (cyy + cyy.T)
    eigval, eigvec = np.linalg.eigh(cyy)
    tol = 1e-12 * max(eigval.max(), 1e-300)
    live = eigval > tol
    innov = z - mean_y
    if not live.all():
        dead_innov = eigvec[:, ~live].T @ innov
        dead_gain = cxy @ eigvec[:, ~live]
        scale = max(np.abs(innov).max(), np.abs(cxy).max(), 1.0)
        if (
            np.abs(dead_innov).max() > 1e-9 * scale
            or np.abs(dead_gain).max() > 1e-9 * scale
        ):
            raise SingularCovarianceError(
                "observation prediction covariance is singular and the "
                "innovation carries information along a degenerate direction"
            )
    inv_live = eigvec[:, live] / eigval[live]
    gain = cxy @ inv_live @ eigvec[:, live].T
    mean = mean_x + gain @ innov
    cov = cxx - gain @ cxy.T
    return mean, 0.5 * (cov + cov.T)


@dataclass(frozen=True)
class PmcKalmanState:
    """Posterior of the hidden state given all observation values so far.

    last_y is the most recent observed value; the pair-chain prediction
    feeds it back through the transition.
    """

    mean: np.ndarray
    cov: np.ndarray
    last_y: np.ndarray


def pmc_kalman_init(model, z0):
    """Condition the initial pair law on an observed initial value."""
    nx = model.state_dim
    mu, c = model.init.mean, model.init.cov
    mean, cov = _condition(
        mu[:nx], mu[nx:],
        c[:nx, :nx], c[:nx, nx:], c[nx:, nx:],
        np.atleast_1d(np.asarray(z0, dtype=np.float64)),
    )
    return PmcKalmanState(
        mean=mean, cov=cov,
        last_y=np.atleast_1d(np.asarray(z0, dtype=np.float64)),
    )


def pmc_kalman_step(state, model, z):
    """Exact one-step posterior: joint predictive of the next pair given
    the posterior and the last observed value, then conditioning on the
    new observation."""
    b11, b12, b21, b22, s11, s12, s22 = _blocks(model)
    m, p, y_prev = state.mean, state.cov, state.last_y
    mean_x = b11 @ m + b12 @ y_prev
    mean_y = b21 @ m + b22 @ y_prev
    cxx = b11 @ p @ b11.T + s11
    cxy = b11 @ p @ b21.T + s12
    cyy = b21 @ p @ b21.T + s22
    z = np.atleast_1d(np.asarray(z, dtype=np.float64))
    mean, cov = _condition(mean_x, mean_y, cxx, cxy, cyy, z)
    return PmcKalmanState(mean=mean, cov=cov, last_y=z)


def pmc_kalman_run(model, observations):
    """Filter a whole observation sequence; returns one state per value."""
    observations = np.atleast_2d(np.asarray(observations, dtype=np.float64))
    state = pmc_kalman_init(model, observations[0])
    out = [state]
    for z in observations[1:]:
        state = pmc_kalman_step(state, model, z)
        out.append(state)
    return out


def stationary_pair_cov(model):
    """Stationary covariance of the pair chain; requires spectral radius < 1."""
    rho = np.abs(np.linalg.eigvals(model.b)).max()
    if rho >= 1.0:
        raise ValueError(
            f"pair transition spectral radius {rho:.4f} >= 1; no stationary law"
        )
    c = solve_discrete_lyapunov(model.b, model.sigma)
    return 0.5 * (c + c.T)


@dataclass(frozen=True)
class GridIntensity:
    """Joint intensity sampled at the midpoints of a uniform rectangle grid."""

    x_mid: np.ndarray
    y_mid: np.ndarray
    values: np.ndarray

    def __post_init__(self):
        x = np.asarray(self.x_mid, dtype=np.float64)
        y = np.asarray(self.y_mid, dtype=np.float64)
        v = np.asarray(self.values, dtype=np.float64)
        if v.shape != (x.size, y.size):
            raise ValueError(
                f"values shape {v.shape} does not match grid "
                f"({x.size}, {y.size})"
            )
        if not np.isfinite(v).all() or (v.size and v.min() < 0):
            raise ValueError("grid intensity must be finite and nonnegative")
        object.__setattr__(self, "x_mid", x)
        object.__setattr__(self, "y_mid", y)
        object.__setattr__(self, "values", v)

    @property
    def hx(self):
        return float(self.x_mid[1] - self.x_mid[0])

    @property
    def hy(self):
        return float(self.y_mid[1] - self.y_mid[0])

    @property
    def mass(self):
        return float(self.values.sum() * self.hx * self.hy)

    def x_marginal(self):
        """Intensity per unit x after integrating the observation axis."""
        return self.values.sum(axis=1) * self.hy

    def with_values(self, values):
        return GridIntensity(x_mid=self.x_mid, y_mid=self.y_mid, values=values)


def make_grid(x_span, y_span, nx, ny):
    """Zero intensity on a uniform nx-by-ny midpoint grid over the spans."""
    x_edges = np.linspace(x_span[0], x_span[1], nx + 1)
    y_edges = np.linspace(y_span[0], y_span[1], ny + 1)
    return GridIntensity(
        x_mid=0.5 * (x_edges[:-1] + x_edges[1:]),
        y_mid=0.5 * (y_edges[:-1] + y_edges[1:]),
        values=np.zeros((nx, ny)),
    )


def mixture_on_grid(grid, birth):
    """Birth mixture intensity evaluated at the grid midpoints."""
    xx, yy = np.meshgrid(grid.x_mid, grid.y_mid, indexing="ij")
    pts = np.column_stack([xx.ravel(), yy.ravel()])
    vals = birth.intensity_at(pts).reshape(xx.shape)
    return grid.with_values(vals)


def _gauss2(dx, dy, sigma):
    """N([dx, dy]; 0, sigma) evaluated elementwise on broadcast arrays."""
    a, b, c = sigma[0, 0], sigma[0, 1], sigma[1, 1]
    det = a * c - b * b
    if det <= 0:
        raise SingularCovarianceError(
            "pair noise covariance is singular; grid prediction needs a density"
        )
    quad = (c * dx * dx - 2.0 * b * dx * dy + a * dy * dy) / det
    return np.exp(-0.5 * quad) / (2.0 * np.pi * np.sqrt(det))


def _scatter_bilinear(grid, locx, locy, mass):
    """Deposit point masses onto the midpoint lattice; mass outside the
    lattice hull is dropped (size the domain so this is negligible)."""
    out = np.zeros_like(grid.values)
    nx, ny = out.shape
    fx = (locx.ravel() - grid.x_mid[0]) / grid.hx
    fy = (locy.ravel() - grid.y_mid[0]) / grid.hy
    m = mass.ravel()
    ix = np.floor(fx).astype(np.int64)
    iy = np.floor(fy).astype(np.int64)
    tx = fx - ix
    ty = fy - iy
    for dx_, dy_ in ((0, 0), (0, 1), (1, 0), (1, 1)):
        jx = ix + dx_
        jy = iy + dy_
        wcorner = (tx if dx_ else 1.0 - tx) * (ty if dy_ else 1.0 - ty)
        ok = (jx >= 0) & (jx < nx) & (jy >= 0) & (jy < ny)
        np.add.at(out, (jx[ok], jy[ok]), m[ok] * wcorner[ok])
    return out


def grid_phd_predict(v, model, p_survive, birth_grid, method="fft"):
    """Push the intensity through survival and the pair transition, add birth.

    The midpoint-rule quadrature treats each cell as a point mass at its
    midpoint, moved by the transition matrix and smeared by the noise law.
    The fft method snaps moved masses to the lattice (bilinear) and applies
    the noise as a convolution; the direct method evaluates the quadrature
    sum literally and is only affordable on coarse grids.
    """
    if model.state_dim != 1 or model.pair_dim != 2:
        raise ValueError("grid recursion supports 1-D state, 1-D observation")
    cell_mass = v.values * (v.hx * v.hy) * p_survive
    xx, yy = np.meshgrid(v.x_mid, v.y_mid, indexing="ij")
    b = model.b
    locx = b[0, 0] * xx + b[0, 1] * yy
    locy = b[1, 0] * xx + b[1, 1] * yy

    if method == "fft":
        scattered = _scatter_bilinear(v, locx, locy, cell_mass)
        nx, ny = v.values.shape
        off_x = (np.arange(-(nx - 1), nx) * v.hx)[:, None]
        off_y = (np.arange(-(ny - 1), ny) * v.hy)[None, :]
        kernel = _gauss2(off_x, off_y, model.sigma)
        pred = fftconvolve(scattered, kernel, mode="same")
        pred = np.maximum(pred, 0.0)
    elif method == "direct":
        src_x = locx.ravel()
        src_y = locy.ravel()
        src_m = cell_mass.ravel()
        pred = np.zeros_like(v.values)
        tgt_x = xx.ravel()[:, None]
        tgt_y = yy.ravel()[:, None]
        chunk = max(1, 2_000_000 // max(tgt_x.size, 1))
        for s in range(0, src_m.size, chunk):
            e = min(s + chunk, src_m.size)
            k = _gauss2(tgt_x - src_x[s:e], tgt_y - src_y[s:e], model.sigma)
            pred += (k @ src_m[s:e]).reshape(pred.shape)
    else:
        raise ValueError(f"unknown prediction method {method!r}")

    return v.with_values(pred + birth_grid.values)


def _interp_column(v, z):
    """v(x, z) by linear interpolation between adjacent observation columns."""
    y = v.y_mid
    lo_edge = y[0] - 0.5 * v.hy
    hi_edge = y[-1] + 0.5 * v.hy
    if not lo_edge <= z <= hi_edge:
        raise ValueError(
            f"measurement {z} outside the grid observation span "
            f"[{lo_edge}, {hi_edge}]"
        )
    t = (z - y[0]) / v.hy
    j0 = int(np.clip(np.floor(t), 0, y.size - 2))
    frac = np.clip(t - j0, 0.0, 1.0)
    return (1.0 - frac) * v.values[:, j0] + frac * v.values[:, j0 + 1]


def grid_phd_update(v_pred, model, p_detect, kappa, measurements):
    """Measurement update of the grid intensity.

    The undetected share keeps the full pair spread; each measurement adds
    a term living on its own observation column (the one whose cell
    contains the measurement), with x-profile read off the predicted
    intensity at that observation value.
    """
    out = (1.0 - p_detect) * v_pred.values
    hx, hy = v_pred.hx, v_pred.hy
    y_lo = v_pred.y_mid[0] - 0.5 * hy
    for z in np.atleast_1d(np.asarray(measurements, dtype=np.float64)).ravel():
        profile = p_detect * _interp_column(v_pred, z)
        denom = kappa + float(profile.sum() * hx)
        if denom <= 0.0:
            continue  # no support and no clutter: the term vanishes
        jz = int(np.clip((z - y_lo) / hy, 0, v_pred.y_mid.size - 1))
        out[:, jz] += profile / (denom * hy)
    return v_pred.with_values(out)
