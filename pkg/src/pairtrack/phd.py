"""Particle intensity filter over pair chains.

The filter propagates a weighted particle approximation of the multi-target
first-moment intensity. Particles live in pair space (state and observation
channel jointly). Each cycle: predict survivors through the pair transition
and inject birth particles, reweight against the measurement set, read the
expected target count off the total mass, resample, and extract point
estimates by weighted clustering.

Detection handling is the pair-chain specific part: a particle matched to
measurement z has its observation channel overwritten by z itself, so the
next prediction feeds the actual measurement back through the transition.
"""

import math
import warnings
from dataclasses import dataclass
from typing import Protocol

import numpy as np
from scipy.special import logsumexp

from . import _kernels
from .gaussian import mvn_sample_many, psd_factor


class FilterNumericsError(RuntimeError):
    """Particle weights lost numerical meaning (non-finite values)."""


class FilterNumericsWarning(RuntimeWarning):
    """Recoverable numeric degradation inside a filter cycle."""


class ExtractionWarning(RuntimeWarning):
    """Point estimates could not honor the requested cluster count."""


def _round_half_up(x):
    """Round to nearest integer with .5 always going up."""
    return int(math.floor(x + 0.5))


@dataclass(frozen=True)
class BirthComponent:
    """One birth site: expected arrivals per scan and their pair-space law."""

    mass: float
    mean: np.ndarray
    cov: np.ndarray

    def __post_init__(self):
        if self.mass < 0:
            raise ValueError("birth mass must be nonnegative")
        mean = np.atleast_1d(np.asarray(self.mean, dtype=np.float64))
        cov = np.asarray(self.cov, dtype=np.float64)
        if cov.shape != (mean.size, mean.size):
            raise ValueError(
                f"birth cov shape {cov.shape} does not match mean {mean.shape}"
            )
        object.__setattr__(self, "mean", mean)
        object.__setattr__(self, "cov", cov)


@dataclass(frozen=True)
class BirthModel:
    """Weighted Gaussian mixture over pair space feeding new targets in."""

    components: tuple

    def __post_init__(self):
        comps = tuple(self.components)
        if not comps:
            raise ValueError("birth model needs at least one component")
        dim = comps[0].mean.size
        for c in comps:
            if c.mean.size != dim:
                raise ValueError("birth components disagree on dimension")
        object.__setattr__(self, "components", comps)
        factors = tuple(psd_factor(c.cov, "birth cov")[0] for c in comps)
        object.__setattr__(self, "_factors", factors)

    @property
    def dim(self):
        return self.components[0].mean.size

    @property
    def total_mass(self):
        return float(sum(c.mass for c in self.components))

    def _pick_components(self, n, rng):
        masses = np.array([c.mass for c in self.components])
        total = masses.sum()
        p = masses / total if total > 0 else None
        return rng.choice(len(masses), size=n, p=p)

    def sample_many(self, n, rng):
        """n pair draws from the normalized mixture, one row per draw."""
        picks = self._pick_components(n, rng)
        out = np.empty((n, self.dim))
        for ci, comp in enumerate(self.components):
            rows = np.flatnonzero(picks == ci)
            if rows.size:
                out[rows] = mvn_sample_many(
                    comp.mean, self._factors[ci], rows.size, rng
                )
        return out

    def intensity_at(self, points):
        """Birth intensity evaluated at each pair-space row of points."""
        points = np.atleast_2d(np.asarray(points, dtype=np.float64))
        total = np.zeros(points.shape[0])
        for comp, L in zip(self.components, self._factors):
            diag = np.diag(L)
            if np.any(diag <= 0):
                raise ValueError(
                    "birth component covariance is singular; intensity "
                    "evaluation needs a density"
                )
            log_norm = -0.5 * (
                self.dim * np.log(2 * np.pi) + 2 * np.sum(np.log(diag))
            )
            total += comp.mass * np.exp(
                _kernels.batch_mvn_logpdf(points - comp.mean, L, log_norm)
            )
        return total


@dataclass(frozen=True)
class FilterParams:
    """Tuning constants for one filter instance.

    clutter_rate is the expected number of false alarms per scan, assumed
    uniform over region_volume, so the clutter intensity is their ratio.
    particles_per_target scales the resampled cloud with the estimated
    count; birth_particles is the fresh allocation per scan. When
    measurement_driven_birth is set, birth draws during prediction are
    conditioned on the scan's measurements instead of sampled blindly.
    """

    p_survive: float
    p_detect: float
    clutter_rate: float
    region_volume: float
    particles_per_target: int
    birth: BirthModel
    birth_particles: int = 500
    resample_method: str = "systematic"
    measurement_driven_birth: bool = False

    def __post_init__(self):
        if not 0.0 <= self.p_survive <= 1.0:
            raise ValueError(f"p_survive must be in [0, 1], got {self.p_survive}")
        if not 0.0 <= self.p_detect <= 1.0:
            raise ValueError(f"p_detect must be in [0, 1], got {self.p_detect}")
        if self.clutter_rate < 0:
            raise ValueError("clutter_rate must be nonnegative")
        if self.region_volume <= 0:
            raise ValueError("region_volume must be positive")
        if self.particles_per_target < 1:
            raise ValueError("particles_per_target must be at least 1")
        if self.birth_particles < 0:
            raise ValueError("birth_particles must be nonnegative")
        if self.resample_method not in ("systematic", "multinomial"):
            raise ValueError(
                f"unknown resample_method {self.resample_method!r}"
            )

    @property
    def clutter_intensity(self):
        return self.clutter_rate / self.region_volume


@dataclass(frozen=True)
class ParticleCloud:
    """Weighted pair-space particles; total weight estimates target count.

    y_pred caches the observation prediction each particle carried into the
    current scan (conditioned on the state it drew); the update stage scores
    measurements against it.
    """

    xi: np.ndarray
    w: np.ndarray
    y_pred: np.ndarray
    state_dim: int
    step: int = 0

    def __post_init__(self):
        xi = np.asarray(self.xi, dtype=np.float64)
        w = np.asarray(self.w, dtype=np.float64)
        y_pred = np.asarray(self.y_pred, dtype=np.float64)
        if xi.ndim != 2 or w.ndim != 1 or xi.shape[0] != w.shape[0]:
            raise ValueError(
                f"xi {xi.shape} and w {w.shape} must agree on particle count"
            )
        if y_pred.shape != (xi.shape[0], xi.shape[1] - self.state_dim):
            raise ValueError(
                f"y_pred has shape {y_pred.shape}, expected "
                f"({xi.shape[0]}, {xi.shape[1] - self.state_dim})"
            )
        if not np.isfinite(w).all():
            raise FilterNumericsError("particle weights are not finite")
        if w.size and w.min() < 0:
            raise FilterNumericsError("particle weights must be nonnegative")
        object.__setattr__(self, "xi", xi)
        object.__setattr__(self, "w", w)
        object.__setattr__(self, "y_pred", y_pred)

    def __len__(self):
        return self.xi.shape[0]

    @property
    def x(self):
        return self.xi[:, : self.state_dim]

    @property
    def y(self):
        return self.xi[:, self.state_dim :]

    @property
    def total_weight(self):
        return float(np.sum(self.w))


@dataclass(frozen=True)
class EstimateSet:
    """Extracted point estimates for one scan."""

    step: int
    cardinality: float
    states: np.ndarray  # (count, state_dim), rows in lexicographic order

    @property
    def count(self):
        return self.states.shape[0]


class Proposal(Protocol):
    """Importance distribution for survivor propagation."""

    def sample(self, xi_prev, model, rng):
        """Draw one new pair per row of xi_prev."""
        ...

    def log_weight_correction(self, xi_new, xi_prev, model):
        """log [transition density / proposal density] per row."""
        ...


class PriorProposal:
    """Sample straight from the pair transition; correction is zero."""

    def sample(self, xi_prev, model, rng):
        return model.transition_sample_many(xi_prev, rng)

    def log_weight_correction(self, xi_new, xi_prev, model):
        return np.zeros(xi_prev.shape[0])


def init_cloud(params, n0, rng, state_dim):
    """Start-up cloud holding total mass n0.

    The particle count scales with the expected initial target count,
    never dropping below one target's allocation; every particle carries
    an equal share of n0 (zero when n0 is zero).
    """
    if n0 < 0:
        raise ValueError("expected initial target count must be nonnegative")
    n = params.particles_per_target * max(1, _round_half_up(n0))
    xi = params.birth.sample_many(n, rng)
    return ParticleCloud(
        xi=xi, w=np.full(n, n0 / n), y_pred=xi[:, state_dim:],
        state_dim=state_dim, step=0,
    )


def _conditioned_birth(birth, z_rows, picks, rng, state_dim):
    """Birth draws with the observation channel pinned to chosen measurements.

    For each draw, the mixture component is conditioned on its observation
    block equaling the assigned measurement; the state block is sampled from
    that conditional and the observation block is the measurement verbatim.
    """
    n = picks.size
    dim = birth.dim
    out = np.empty((n, dim))
    for ci, comp in enumerate(birth.components):
        rows = np.flatnonzero(picks == ci)
        if not rows.size:
            continue
        cxx = comp.cov[:state_dim, :state_dim]
        cxy = comp.cov[:state_dim, state_dim:]
        cyy = comp.cov[state_dim:, state_dim:]
        ly, _ = psd_factor(cyy, "birth observation block")
        if np.any(np.diag(ly) <= 0):
            raise ValueError(
                "birth observation block is singular; cannot condition "
                "births on measurements"
            )
        # gain = cxy cyy^-1 via two triangular solves
        tmp = np.linalg.solve(ly, cxy.T)
        gain = np.linalg.solve(ly.T, tmp).T
        cov_cond = cxx - gain @ cxy.T
        l_cond, _ = psd_factor(0.5 * (cov_cond + cov_cond.T), "conditioned birth")
        zr = z_rows[rows]
        mean_x = comp.mean[:state_dim] + (zr - comp.mean[state_dim:]) @ gain.T
        out[rows, :state_dim] = mean_x + rng.standard_normal(
            (rows.size, state_dim)
        ) @ l_cond.T
        out[rows, state_dim:] = zr
    return out


def predict(cloud, model, params, measurements, rng, proposal=None):
    """Survivor propagation plus birth injection; advances the scan index.

    Survivors keep their weight scaled by the survival probability (times
    the importance correction for a non-prior proposal). Birth particles
    share the birth mass equally. measurements is the current scan's set,
    consulted only when params.measurement_driven_birth is on and it is
    nonempty, in which case birth draws are conditioned on randomly
    assigned measurements instead of sampled blindly.
    """
    if proposal is None:
        proposal = PriorProposal()
    nx = cloud.state_dim
    birth = params.birth

    xi_new = proposal.sample(cloud.xi, model, rng)
    corr = proposal.log_weight_correction(xi_new, cloud.xi, model)
    bad = np.isnan(corr) | np.isposinf(corr)
    if np.any(bad):
        raise FilterNumericsError(
            f"proposal density vanished at a sampled point "
            f"(first offending particle index {int(np.flatnonzero(bad)[0])})"
        )
    w_surv = params.p_survive * cloud.w * np.exp(corr)
    y_pred_surv = model.conditional_observation_many(
        cloud.xi, xi_new[:, :nx]
    )

    j = params.birth_particles
    if j > 0:
        z = np.atleast_2d(np.asarray(measurements, dtype=np.float64))
        if params.measurement_driven_birth and z.size > 0:
            picks = birth._pick_components(j, rng)
            assign = rng.integers(0, z.shape[0], size=j)
            xi_birth = _conditioned_birth(birth, z[assign], picks, rng, nx)
        else:
            xi_birth = birth.sample_many(j, rng)
        w_birth = np.full(j, birth.total_mass / j)
        xi_out = np.vstack([xi_new, xi_birth])
        w_out = np.concatenate([w_surv, w_birth])
        y_pred_out = np.vstack([y_pred_surv, xi_birth[:, nx:]])
    else:
        xi_out, w_out, y_pred_out = xi_new, w_surv, y_pred_surv

    return ParticleCloud(
        xi=xi_out, w=w_out, y_pred=y_pred_out,
        state_dim=nx, step=cloud.step + 1,
    )


def update(cloud, model, params, measurements):
    """Measurement update of the intensity approximation.

    Output holds one undetected block (weights scaled by the miss
    probability) plus one block per measurement whose particles have the
    observation channel overwritten by that measurement, copied verbatim.
    Weights are formed in log space; a measurement whose denominator
    underflows (zero clutter intensity and no particle support) contributes
    a zeroed block and a FilterNumericsWarning rather than NaNs.
    """
    z = np.atleast_2d(np.asarray(measurements, dtype=np.float64))
    if z.size == 0:
        z = z.reshape(0, cloud.xi.shape[1] - cloud.state_dim)
    n = len(cloud)
    m = z.shape[0]
    nx = cloud.state_dim
    d = cloud.xi.shape[1]
    ny = d - nx

    w_miss = (1.0 - params.p_detect) * cloud.w
    if m == 0 or params.p_detect == 0.0:
        return ParticleCloud(
            xi=cloud.xi, w=w_miss, y_pred=cloud.y_pred,
            state_dim=nx, step=cloud.step,
        )

    # density of each (measurement, particle) residual about zero
    resid = z[:, None, :] - cloud.y_pred[None, :, :]
    ll = model.measurement_loglik_many(
        resid.reshape(m * n, ny), np.zeros(ny)
    ).reshape(m, n)

    with np.errstate(divide="ignore"):
        log_w = np.log(cloud.w)
        log_kappa = np.log(params.clutter_intensity)
    lw = np.log(params.p_detect) + ll + log_w[None, :]
    denom = np.logaddexp(log_kappa, logsumexp(lw, axis=1))

    dead = ~np.isfinite(denom)
    if np.any(dead):
        warnings.warn(
            f"{int(dead.sum())} measurement(s) had no particle support and "
            "zero clutter intensity; their weight blocks were zeroed",
            FilterNumericsWarning,
            stacklevel=2,
        )
        denom = np.where(dead, 0.0, denom)
    block_w = np.exp(lw - denom[:, None])
    if np.any(dead):
        block_w[dead] = 0.0

    xi_det = np.broadcast_to(cloud.xi, (m, n, d)).copy()
    xi_det[:, :, nx:] = z[:, None, :]

    xi_out = np.vstack([cloud.xi, xi_det.reshape(m * n, d)])
    w_out = np.concatenate([w_miss, block_w.ravel()])
    y_pred_out = np.vstack(
        [cloud.y_pred, np.broadcast_to(cloud.y_pred, (m, n, ny)).reshape(-1, ny)]
    )
    return ParticleCloud(
        xi=xi_out, w=w_out, y_pred=y_pred_out,
        state_dim=nx, step=cloud.step,
    )


def estimate_cardinality(cloud):
    """Expected target count: the total particle mass."""
    return cloud.total_weight


def resample(cloud, params, rng):
    """Resize the cloud to particles_per_target per estimated target.

    Systematic resampling walks the cumulative weights with one uniform
    offset; multinomial draws independently. Either way the selected rows
    are copied verbatim (an observation channel pinned to a measurement
    stays bitwise equal to it) and the total mass is preserved exactly by
    construction of the equal output weights. A cloud whose mass has
    decayed to zero comes back as a fresh zero-weight cloud of one
    target's allocation, keeping the recursion alive for future births.
    """
    total = cloud.total_weight
    if not np.isfinite(total):
        raise FilterNumericsError(
            f"cannot resample: total particle mass is {total}"
        )
    nx = cloud.state_dim
    if total <= 0.0:
        xi = params.birth.sample_many(params.particles_per_target, rng)
        return ParticleCloud(
            xi=xi, w=np.zeros(len(xi)), y_pred=xi[:, nx:],
            state_dim=nx, step=cloud.step,
        )
    n_out = params.particles_per_target * max(1, _round_half_up(total))

    if params.resample_method == "systematic":
        u0 = rng.random()
        idx = _kernels.systematic_resample_indices(
            np.ascontiguousarray(cloud.w), total, n_out, u0
        )
    else:
        cum = np.cumsum(cloud.w)
        points = rng.random(n_out) * total
        idx = np.minimum(
            np.searchsorted(cum, points, side="right"), len(cloud) - 1
        )
    idx = np.asarray(idx)

    return ParticleCloud(
        xi=cloud.xi[idx],
        w=np.full(n_out, total / n_out),
        y_pred=cloud.y_pred[idx],
        state_dim=nx,
        step=cloud.step,
    )


def _kmeans_pp_init(points, weights, k, rng):
    """Weighted k-means++ seeding."""
    n = points.shape[0]
    centers = np.empty((k, points.shape[1]))
    p = weights / weights.sum()
    centers[0] = points[rng.choice(n, p=p)]
    d2 = ((points - centers[0]) ** 2).sum(1)
    for c in range(1, k):
        scores = weights * d2
        s = scores.sum()
        if s <= 0:  # all mass sits on existing centers
            centers[c:] = centers[0]
            break
        centers[c] = points[rng.choice(n, p=scores / s)]
        d2 = np.minimum(d2, ((points - centers[c]) ** 2).sum(1))
    return centers


def _sq_dists(points, centers):
    # (n, k) squared Euclidean distances via the expanded product
    pp = (points**2).sum(1)[:, None]
    cc = (centers**2).sum(1)[None, :]
    return np.maximum(pp + cc - 2.0 * points @ centers.T, 0.0)


def _weighted_kmeans(points, weights, k, seed, restarts=10, iters=100):
    best_cost = np.inf
    best = None
    for restart in range(restarts):
        rng = np.random.default_rng([seed, restart])
        centers = _kmeans_pp_init(points, weights, k, rng)
        for _ in range(iters):
            d2 = _sq_dists(points, centers)
            assign = d2.argmin(1)
            new_centers = centers.copy()
            for c in range(k):
                sel = assign == c
                mass = weights[sel].sum()
                if mass > 0:
                    new_centers[c] = (
                        weights[sel, None] * points[sel]
                    ).sum(0) / mass
                else:  # empty cluster: reseed at the worst-covered point
                    far = (weights * d2.min(1)).argmax()
                    new_centers[c] = points[far]
            if np.allclose(new_centers, centers, rtol=0, atol=1e-10):
                centers = new_centers
                break
            centers = new_centers
        d2 = _sq_dists(points, centers)
        cost = float((weights * d2.min(1)).sum())
        if cost < best_cost:
            best_cost = cost
            best = centers
    return best


def extract_states(cloud, count=None):
    """Point estimates by weighted clustering of the state block.

    The cluster count defaults to the rounded total mass (ties round up).
    Clustering is seeded from the scan index only, so extraction is a
    deterministic function of the cloud. Rows come back in lexicographic
    order. Asking for more clusters than there are distinct particle
    positions pads the count down with a warning.
    """
    n_hat = cloud.total_weight
    k = _round_half_up(n_hat) if count is None else int(count)
    live = cloud.w > 0
    if k <= 0 or not live.any():
        return EstimateSet(
            step=cloud.step, cardinality=n_hat,
            states=np.empty((0, cloud.state_dim)),
        )
    points = cloud.x[live]
    weights = cloud.w[live]
    distinct = np.unique(points, axis=0).shape[0]
    if distinct < k:
        warnings.warn(
            f"cloud holds only {distinct} distinct positions; returning "
            f"{distinct} estimates instead of {k}",
            ExtractionWarning,
            stacklevel=2,
        )
        k = distinct
    centers = _weighted_kmeans(points, weights, k, seed=cloud.step)
    order = np.lexsort(centers.T[::-1])
    return EstimateSet(step=cloud.step, cardinality=n_hat, states=centers[order])


def marginal_intensity(cloud):
    """Weighted samples of the state-space intensity: the particles'
    state blocks with their weights, observation channel dropped.

    A pure relabeling: weights (and hence mass) are unchanged, duplicate
    states stay separate samples.
    """
    return cloud.x.copy(), cloud.w.copy()


def binned_intensity(cloud, dim, edges):
    """Histogram estimate of the intensity along one state coordinate.

    Returns mass per unit length in each cell, so the values integrate to
    the cardinality estimate over the covered range.
    """
    edges = np.asarray(edges, dtype=np.float64)
    hist, _ = np.histogram(cloud.x[:, dim], bins=edges, weights=cloud.w)
    return hist / np.diff(edges)


def filter_step(cloud, model, params, measurements, rng, proposal=None):
    """One full cycle; returns the resampled cloud and the scan's estimates."""
    predicted = predict(cloud, model, params, measurements, rng,
                        proposal=proposal)
    updated = update(predicted, model, params, measurements)
    resampled = resample(updated, params, rng)
    return resampled, extract_states(resampled)
