"""Linear-Gaussian pairwise Markov chains and the classical-model embedding.

The pair (state, observation) evolves jointly: stacked as xi = (x, y), the
chain follows xi_k = B xi_{k-1} + w with w ~ N(0, Sigma). A classical
state-space model (transition f/q, observation h/r) embeds into this family
with two free coupling gains: f2 feeds the previous observation back into
the state, h2 feeds it into the next observation. Zero gains recover the
classical model exactly.
"""

import json
from dataclasses import dataclass, replace

import numpy as np

from . import _kernels
from .gaussian import (
    Gaussian,
    NotPsdError,
    SingularCovarianceError,
    chol_log_norm,
    mvn_sample_many,
    psd_factor,
    symmetry_residual,
)


class InvalidEmbeddingError(ValueError):
    """Coupling gains push a noise block outside the PSD cone."""

    def __init__(self, message, block):
        super().__init__(message)
        self.block = block


def _mat(a, name):
    a = np.asarray(a, dtype=np.float64)
    if a.ndim != 2:
        raise ValueError(f"{name} must be 2-D, got shape {a.shape}")
    return a


@dataclass(frozen=True)
class HmcSpec:
    """Classical state-space model plus the two embedding gains.

    f, q: state transition and its noise covariance (n x n).
    h, r: observation map (m x n) and observation noise covariance (m x m).
    m0, p0: initial state law.
    f2 (n x m), h2 (m x m): coupling gains; zero gains mean the classical
    model unchanged.
    """

    f: np.ndarray
    q: np.ndarray
    h: np.ndarray
    r: np.ndarray
    m0: np.ndarray
    p0: np.ndarray
    f2: np.ndarray
    h2: np.ndarray

    def __post_init__(self):
        f = _mat(self.f, "f")
        q = _mat(self.q, "q")
        h = _mat(self.h, "h")
        r = _mat(self.r, "r")
        f2 = _mat(self.f2, "f2")
        h2 = _mat(self.h2, "h2")
        m0 = np.atleast_1d(np.asarray(self.m0, dtype=np.float64))
        p0 = _mat(self.p0, "p0")
        n = f.shape[0]
        m = h.shape[0]
        checks = [
            (f.shape == (n, n), f"f must be square, got {f.shape}"),
            (q.shape == (n, n), f"q must be {n}x{n}, got {q.shape}"),
            (h.shape == (m, n), f"h must be {m}x{n}, got {h.shape}"),
            (r.shape == (m, m), f"r must be {m}x{m}, got {r.shape}"),
            (f2.shape == (n, m), f"f2 must be {n}x{m}, got {f2.shape}"),
            (h2.shape == (m, m), f"h2 must be {m}x{m}, got {h2.shape}"),
            (m0.shape == (n,), f"m0 must have length {n}, got {m0.shape}"),
            (p0.shape == (n, n), f"p0 must be {n}x{n}, got {p0.shape}"),
        ]
        for ok, msg in checks:
            if not ok:
                raise ValueError(msg)
        for name, mat in (("q", q), ("r", r), ("p0", p0)):
            if symmetry_residual(mat) > 1e-12:
                raise ValueError(f"{name} must be symmetric")
        object.__setattr__(self, "f", f)
        object.__setattr__(self, "q", q)
        object.__setattr__(self, "h", h)
        object.__setattr__(self, "r", r)
        object.__setattr__(self, "m0", m0)
        object.__setattr__(self, "p0", p0)
        object.__setattr__(self, "f2", f2)
        object.__setattr__(self, "h2", h2)

    @property
    def state_dim(self):
        return self.f.shape[0]

    @property
    def obs_dim(self):
        return self.h.shape[0]

    def with_zero_cross_feeds(self):
        """Copy with f2 = 0 and h2 = 0: the classical model as a pair chain."""
        return replace(
            self,
            f2=np.zeros_like(self.f2),
            h2=np.zeros_like(self.h2),
        )

    def save(self, path):
        """Write the model to a JSON file; floats round-trip exactly."""
        payload = {
            name: getattr(self, name).tolist()
            for name in ("f", "q", "h", "r", "m0", "p0", "f2", "h2")
        }
        with open(path, "w") as fh:
            json.dump(payload, fh, indent=2)

    @classmethod
    def load(cls, path):
        with open(path) as fh:
            payload = json.load(fh)
        return cls(**{k: np.asarray(v, dtype=np.float64) for k, v in payload.items()})


@dataclass(frozen=True)
class ModelDiagnostics:
    """Numeric health report for a pair-chain model."""

    sigma_symmetry_residual: float
    sigma_min_eigenvalue: float
    obs_noise_positive_definite: bool
    spectral_radius: float
    warnings: tuple


@dataclass(frozen=True)
class GaussianPmcModel:
    """Pair chain xi_k = b xi_{k-1} + w, w ~ N(0, sigma), xi = (x, y).

    state_dim gives the split point: the first state_dim coordinates are the
    hidden state x, the rest the observation channel y. Cholesky-type factors
    of sigma and of its observation block are cached at construction so the
    per-step hot paths never refactor.
    """

    b: np.ndarray
    sigma: np.ndarray
    init: Gaussian
    state_dim: int

    def __post_init__(self):
        b = _mat(self.b, "b")
        sigma = _mat(self.sigma, "sigma")
        d = b.shape[0]
        nx = int(self.state_dim)
        if b.shape != (d, d):
            raise ValueError(f"b must be square, got {b.shape}")
        if not 0 < nx < d:
            raise ValueError(f"state_dim must be in (0, {d}), got {nx}")
        if sigma.shape != (d, d):
            raise ValueError(f"sigma must be {d}x{d}, got {sigma.shape}")
        if symmetry_residual(sigma) > 1e-12:
            raise ValueError("sigma must be symmetric")
        if self.init.dim != d:
            raise ValueError(
                f"init law has dimension {self.init.dim}, chain has {d}"
            )
        object.__setattr__(self, "b", b)
        object.__setattr__(self, "sigma", sigma)
        object.__setattr__(self, "state_dim", nx)
        l_full, jit_full = psd_factor(sigma, "sigma")
        l_obs, jit_obs = psd_factor(sigma[nx:, nx:], "sigma22")
        object.__setattr__(self, "_l_full", l_full)
        object.__setattr__(self, "_l_obs", l_obs)
        object.__setattr__(self, "_jitter", (jit_full, jit_obs))
        ny = d - nx
        try:
            ln_full = chol_log_norm(l_full, d)
        except SingularCovarianceError:
            ln_full = None  # sampling still works; densities raise at use
        try:
            ln_obs = chol_log_norm(l_obs, ny)
        except SingularCovarianceError:
            ln_obs = None
        object.__setattr__(self, "_log_norm_full", ln_full)
        object.__setattr__(self, "_log_norm_obs", ln_obs)
        l_init, _ = psd_factor(self.init.cov, "init cov")
        object.__setattr__(self, "_l_init", l_init)
        # observation channel conditioned on the freshly drawn state: the
        # noise blocks are jointly Gaussian, so y | x carries a linear gain
        # on the state residual and a deflated covariance (pinv tolerates a
        # singular state block, whose PSD constraint forces sigma21 = 0)
        gain = sigma[nx:, :nx] @ np.linalg.pinv(sigma[:nx, :nx])
        cond = sigma[nx:, nx:] - gain @ sigma[:nx, :nx] @ gain.T
        cond = 0.5 * (cond + cond.T)
        object.__setattr__(self, "_obs_gain", gain)
        object.__setattr__(self, "_obs_cond_cov", cond)
        l_cond, _ = psd_factor(cond, "conditional observation cov")
        object.__setattr__(self, "_l_obs_cond", l_cond)
        try:
            ln_cond = chol_log_norm(l_cond, ny)
        except SingularCovarianceError:
            ln_cond = None
        object.__setattr__(self, "_log_norm_obs_cond", ln_cond)

    @property
    def pair_dim(self):
        return self.b.shape[0]

    @property
    def obs_dim(self):
        return self.pair_dim - self.state_dim

    @property
    def sigma11(self):
        nx = self.state_dim
        return self.sigma[:nx, :nx]

    @property
    def sigma21(self):
        nx = self.state_dim
        return self.sigma[nx:, :nx]

    @property
    def sigma22(self):
        nx = self.state_dim
        return self.sigma[nx:, nx:]

    def init_sample_many(self, n, rng):
        """n pair draws from the initial law, one row per draw."""
        return mvn_sample_many(self.init.mean, self._l_init, n, rng)

    def transition_mean_many(self, xi_prev):
        """Deterministic part b xi for each row of xi_prev."""
        return np.asarray(xi_prev, dtype=np.float64) @ self.b.T

    def transition_sample_many(self, xi_prev, rng):
        """One-step draws xi_k ~ N(b xi_{k-1}, sigma), row-wise."""
        mean = self.transition_mean_many(xi_prev)
        noise = rng.standard_normal(mean.shape) @ self._l_full.T
        return mean + noise

    def transition_sample(self, xi_prev, rng):
        return self.transition_sample_many(
            np.asarray(xi_prev, dtype=np.float64)[None, :], rng
        )[0]

    def transition_logpdf(self, xi_new, xi_prev):
        """log N(xi_new; b xi_prev, sigma)."""
        if self._log_norm_full is None:
            raise SingularCovarianceError(
                "pair noise covariance is singular; transition density "
                "is undefined"
            )
        resid = np.atleast_2d(np.asarray(xi_new, dtype=np.float64)) - (
            self.transition_mean_many(np.atleast_2d(xi_prev))
        )
        out = _kernels.batch_mvn_logpdf(resid, self._l_full, self._log_norm_full)
        return float(out[0]) if np.ndim(xi_new) == 1 else out

    def predicted_observation_many(self, xi_prev):
        """Noise-free observation channel of b xi for each row."""
        return self.transition_mean_many(xi_prev)[:, self.state_dim :]

    @property
    def conditional_obs_cov(self):
        """Covariance of the observation channel given the drawn state."""
        return self._obs_cond_cov

    def conditional_observation_many(self, xi_prev, x_new):
        """Expected observation given the previous pair and the new state.

        Row-wise: the noise-free prediction plus the gain applied to the
        state's own noise realization. This is the mean the measurement
        likelihood is centered on; with decoupled noise blocks it falls
        back to the noise-free prediction.
        """
        mean = self.transition_mean_many(xi_prev)
        nx = self.state_dim
        resid = np.asarray(x_new, dtype=np.float64) - mean[:, :nx]
        return mean[:, nx:] + resid @ self._obs_gain.T

    def measurement_loglik_many(self, z, y_pred):
        """log N(z; y_pred_i, conditional obs cov) per predicted row.

        y_pred rows are conditional predicted observations (see
        conditional_observation_many); the covariance is the observation
        noise left over once the state draw is known.
        """
        if self._log_norm_obs_cond is None:
            raise SingularCovarianceError(
                "conditional observation covariance is singular; "
                "measurement likelihoods are undefined"
            )
        resid = np.asarray(z, dtype=np.float64) - np.asarray(
            y_pred, dtype=np.float64
        )
        return _kernels.batch_mvn_logpdf(
            resid, self._l_obs_cond, self._log_norm_obs_cond
        )

    def measurement_loglik(self, z, y_pred):
        return float(self.measurement_loglik_many(z, np.atleast_2d(y_pred))[0])


def embed_hmc(hmc):
    """Build the pair chain equivalent to a classical model with couplings.

    The four noise blocks are assembled from (q, r) and the gains (f2, h2);
    each must stay PSD or the gains are invalid, reported by block name.
    With zero gains the construction reproduces the classical model exactly.
    """
    f, q, h, r = hmc.f, hmc.q, hmc.h, hmc.r
    f2, h2 = hmc.f2, hmc.h2
    n, m = hmc.state_dim, hmc.obs_dim

    b = np.block([[f - f2 @ h, f2], [h @ f - h2 @ h, h2]])
    s11 = q - f2 @ r @ f2.T
    s21 = h @ q - h2 @ r @ f2.T
    s22 = r - h2 @ r @ h2.T + h @ q @ h.T
    sigma = np.block([[s11, s21.T], [s21, s22]])
    sigma = 0.5 * (sigma + sigma.T)

    for name, blk in (
        ("state noise block (q - f2 r f2^T)", s11),
        ("observation noise block (r - h2 r h2^T + h q h^T)", s22),
        ("full pair noise covariance", sigma),
    ):
        blk = 0.5 * (blk + blk.T)
        eigs = np.linalg.eigvalsh(blk)
        if eigs.min() < -1e-9 * max(np.linalg.norm(blk), 1e-300):
            raise InvalidEmbeddingError(
                f"{name} has eigenvalue {eigs.min():.6e}; "
                "reduce the coupling gains",
                block=name,
            )

    init_mean = np.concatenate([hmc.m0, h @ hmc.m0])
    hp0 = h @ hmc.p0
    init_cov = np.block([[hmc.p0, hp0.T], [hp0, r + hp0 @ h.T]])
    init_cov = 0.5 * (init_cov + init_cov.T)

    try:
        init = Gaussian(mean=init_mean, cov=init_cov)
    except NotPsdError as exc:
        raise InvalidEmbeddingError(
            f"initial pair covariance is not PSD ({exc})",
            block="initial pair covariance",
        ) from exc
    return GaussianPmcModel(b=b, sigma=sigma, init=init, state_dim=n)


def validate_model(model):
    """Numeric health checks; returns diagnostics instead of raising."""
    warnings = []
    sym = symmetry_residual(model.sigma)
    eigs = np.linalg.eigvalsh(0.5 * (model.sigma + model.sigma.T))
    min_eig = float(eigs.min())
    if min_eig < 0:
        warnings.append(
            f"pair noise covariance has negative eigenvalue {min_eig:.3e}"
        )
    obs_eigs = np.linalg.eigvalsh(model.sigma22)
    obs_pd = bool(obs_eigs.min() > 0)
    if not obs_pd:
        warnings.append(
            "observation noise block is singular; measurement likelihoods "
            "will fail"
        )
    rho = float(np.abs(np.linalg.eigvals(model.b)).max())
    if rho >= 1.0 + 1e-12:
        warnings.append(
            f"pair transition has spectral radius {rho:.4f}; the chain "
            "is not mean-square stable"
        )
    return ModelDiagnostics(
        sigma_symmetry_residual=sym,
        sigma_min_eigenvalue=min_eig,
        obs_noise_positive_definite=obs_pd,
        spectral_radius=rho,
        warnings=tuple(warnings),
    )
