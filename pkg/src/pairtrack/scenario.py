"""Ground truth and measurements for the turning multi-target experiment.

Targets fly coordinated-turn dynamics with cross-feeds from the observation
channel; each scan reports detected target observations plus uniform
clutter. Truth lifetimes are scripted by a schedule (targets persist to
their scheduled death), while detection is an independent coin per target
per scan. Missing a detection never perturbs the latent pair trajectory.
"""

import csv
import dataclasses
from dataclasses import dataclass

import numpy as np

from .gaussian import psd_factor
from .pmc import HmcSpec, embed_hmc

CLUTTER_TAG = -1


def turning_transition(omega, period=1.0):
    """Planar coordinated-turn matrix on (px, vx, py, vy).

    The omega -> 0 limit is the constant-velocity matrix; below 1e-8 the
    trigonometric ratios are replaced by their limits to avoid 0/0.
    """
    t = period
    if abs(omega) < 1e-8:
        return np.array(
            [
                [1.0, t, 0.0, 0.0],
                [0.0, 1.0, 0.0, 0.0],
                [0.0, 0.0, 1.0, t],
                [0.0, 0.0, 0.0, 1.0],
            ]
        )
    s, c = np.sin(omega * t), np.cos(omega * t)
    return np.array(
        [
            [1.0, s / omega, 0.0, -(1.0 - c) / omega],
            [0.0, c, 0.0, -s],
            [0.0, (1.0 - c) / omega, 1.0, s / omega],
            [0.0, s, 0.0, c],
        ]
    )


def pair_init_law(mean_x, cov_x, hmc):
    """Complete a state-space prior into the joint pair-space law.

    The observation block is the noise-free projection of the state prior
    plus observation noise, with the implied cross covariance.
    """
    mean_x = np.asarray(mean_x, dtype=np.float64)
    cov_x = np.asarray(cov_x, dtype=np.float64)
    h, r = hmc.h, hmc.r
    mean = np.concatenate([mean_x, h @ mean_x])
    top = np.hstack([cov_x, cov_x @ h.T])
    bottom = np.hstack([h @ cov_x, r + h @ cov_x @ h.T])
    return mean, np.vstack([top, bottom])


@dataclass(frozen=True)
class TargetSchedule:
    """One scripted target: alive on steps [birth_step, death_step]."""

    target_id: int
    birth_step: int
    death_step: int
    mean_x: np.ndarray
    cov_x: np.ndarray

    def __post_init__(self):
        object.__setattr__(
            self, "mean_x", np.asarray(self.mean_x, dtype=np.float64)
        )
        object.__setattr__(
            self, "cov_x", np.asarray(self.cov_x, dtype=np.float64)
        )


@dataclass(frozen=True)
class ScenarioConfig:
    """Everything needed to simulate truth and scans for one experiment."""

    hmc: HmcSpec
    steps: int
    region: tuple  # ((x_lo, x_hi), (y_lo, y_hi)) in position units
    clutter_rate: float
    p_detect: float
    p_survive: float
    schedule: tuple
    omega: float
    period: float

    def __post_init__(self):
        if self.steps < 1:
            raise ValueError("scenario needs at least one step")
        (x_lo, x_hi), (y_lo, y_hi) = self.region
        if not (x_hi > x_lo and y_hi > y_lo):
            raise ValueError("region must have positive extent")
        if self.clutter_rate < 0:
            raise ValueError("clutter_rate must be nonnegative")
        if not 0.0 <= self.p_detect <= 1.0:
            raise ValueError(f"p_detect must be in [0, 1], got {self.p_detect}")
        if not 0.0 <= self.p_survive <= 1.0:
            raise ValueError(
                f"p_survive must be in [0, 1], got {self.p_survive}"
            )
        for s in self.schedule:
            if not 1 <= s.birth_step <= s.death_step <= self.steps:
                raise ValueError(
                    f"target {s.target_id}: schedule "
                    f"[{s.birth_step}, {s.death_step}] outside 1..{self.steps}"
                )

    @property
    def region_volume(self):
        (x_lo, x_hi), (y_lo, y_hi) = self.region
        return (x_hi - x_lo) * (y_hi - y_lo)


@dataclass(frozen=True)
class TruthRecord:
    """Simulated scenario: pairs per step, optionally measurements per step.

    pairs[k-1] lists (target_id, pair vector) alive at step k; measurements
    (once generated) lists (value, provenance) per step, provenance being
    the originating target id or CLUTTER_TAG.
    """

    steps: int
    pairs: tuple
    measurements: tuple = None

    def measurement_arrays(self):
        """Per-step measurement matrix, shape (count, obs_dim)."""
        if self.measurements is None:
            raise ValueError("measurements have not been generated")
        obs_dim = None
        for step in self.measurements:
            for z, _ in step:
                obs_dim = len(z)
                break
            if obs_dim is not None:
                break
        if obs_dim is None:
            obs_dim = 2
        return [
            np.array([z for z, _ in step], dtype=np.float64).reshape(-1, obs_dim)
            for step in self.measurements
        ]


def default_scenario(omega=np.pi / 36, period=1.0):
    """Four turning targets in a square region, two present from the start
    and two appearing at step 20, under moderate clutter."""
    f = turning_transition(omega, period)
    q = np.array(
        [
            [100.0, 1.0, 0.0, 0.0],
            [1.0, 10.0, 0.0, 0.0],
            [0.0, 0.0, 100.0, 1.0],
            [0.0, 0.0, 1.0, 10.0],
        ]
    )
    r = 25.0 * np.eye(2)
    h = np.array([[1.0, 0.0, 0.0, 0.0], [0.0, 0.0, 1.0, 0.0]])
    f2 = np.array([[0.7, 0.0], [0.0, 0.0], [0.0, 0.7], [0.0, 0.0]])
    h2 = 0.1 * np.eye(2)
    hmc = HmcSpec(
        f=f, q=q, h=h, r=r,
        m0=np.zeros(4), p0=np.diag([100.0, 25.0, 100.0, 25.0]),
        f2=f2, h2=h2,
    )
    cov0 = np.diag([100.0, 25.0, 100.0, 25.0])
    schedule = (
        TargetSchedule(1, 1, 50, [-1000.0, 10.0, -500.0, 10.0], cov0),
        TargetSchedule(2, 1, 50, [800.0, -10.0, -800.0, 10.0], cov0),
        TargetSchedule(3, 20, 50, [-800.0, 10.0, 900.0, -10.0], cov0),
        TargetSchedule(4, 20, 50, [900.0, -10.0, 700.0, -10.0], cov0),
    )
    return ScenarioConfig(
        hmc=hmc, steps=50,
        region=((-2000.0, 2000.0), (-2000.0, 2000.0)),
        clutter_rate=10.0, p_detect=0.9, p_survive=0.98,
        schedule=schedule, omega=omega, period=period,
    )


def generate_truth(cfg, rng):
    """Simulate every scheduled target's pair trajectory.

    Draw order is fixed (steps outer, targets by schedule order inner) so a
    seed fully determines the truth.
    """
    model = embed_hmc(cfg.hmc)
    state = {}
    init = {}
    for s in cfg.schedule:
        mean, cov = pair_init_law(s.mean_x, s.cov_x, cfg.hmc)
        init[s.target_id] = (mean, psd_factor(cov, "initial pair cov")[0])
    steps = []
    for k in range(1, cfg.steps + 1):
        alive = []
        for s in cfg.schedule:
            if k == s.birth_step:
                mean, chol = init[s.target_id]
                state[s.target_id] = mean + chol @ rng.standard_normal(
                    mean.size
                )
            elif s.birth_step < k <= s.death_step:
                state[s.target_id] = model.transition_sample(
                    state[s.target_id], rng
                )
            if s.birth_step <= k <= s.death_step:
                alive.append((s.target_id, state[s.target_id].copy()))
        steps.append(tuple(alive))
    return TruthRecord(steps=cfg.steps, pairs=tuple(steps))


def generate_measurements(truth, cfg, rng):
    """Report each alive target's observation with probability p_detect and
    add uniform Poisson clutter; scan order is shuffled."""
    nx = cfg.hmc.state_dim
    (x_lo, x_hi), (y_lo, y_hi) = cfg.region
    scans = []
    for alive in truth.pairs:
        scan = []
        for tid, pair in alive:
            if rng.random() < cfg.p_detect:
                scan.append((pair[nx:].copy(), tid))
        n_clutter = rng.poisson(cfg.clutter_rate)
        for _ in range(n_clutter):
            point = np.array(
                [rng.uniform(x_lo, x_hi), rng.uniform(y_lo, y_hi)]
            )
            scan.append((point, CLUTTER_TAG))
        order = rng.permutation(len(scan))
        scans.append(tuple(scan[i] for i in order))
    return dataclasses.replace(truth, measurements=tuple(scans))


def _fmt(v):
    return repr(float(v))


TRUTH_HEADER = ("run", "step", "target", "px", "vx", "py", "vy", "yx", "yy")
MEAS_HEADER = ("run", "step", "zx", "zy", "provenance")


def truth_rows(truth, run=0):
    """CSV rows, one per (step, target): state then observation components."""
    for k, alive in enumerate(truth.pairs, start=1):
        for tid, pair in alive:
            yield [run, k, tid] + [_fmt(v) for v in pair]


def meas_rows(truth, run=0):
    """CSV rows, one per measurement with provenance (target id or clutter)."""
    if truth.measurements is None:
        raise ValueError("measurements have not been generated")
    for k, scan in enumerate(truth.measurements, start=1):
        for z, tag in scan:
            yield [run, k, _fmt(z[0]), _fmt(z[1]), tag]


def write_truth_csv(truth, path, run=0):
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(TRUTH_HEADER)
        writer.writerows(truth_rows(truth, run))


def write_meas_csv(truth, path, run=0):
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(MEAS_HEADER)
        writer.writerows(meas_rows(truth, run))
