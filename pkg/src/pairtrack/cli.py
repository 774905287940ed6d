"""Experiment driver: seeded Monte Carlo comparisons on simulated scans.

The `run` subcommand generates truth and measurements once per run and
feeds the same scans to each selected filter, so per-run metric
differences are paired. `validate` checks a config without running it;
`plot` turns the CSV outputs into SVG figures.

Exit codes: 0 ok, 1 runtime failure, 2 config error.
"""

from __future__ import annotations

import argparse
import csv
import functools
import sys
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

try:
    import tomllib
except ModuleNotFoundError:  # 3.10: same parser under its original name
    import tomli as tomllib

from .gaussian import NotPsdError
from .ospa import OspaParams, ospa_distance
from .phd import (
    BirthComponent,
    BirthModel,
    FilterNumericsError,
    FilterParams,
    filter_step,
    init_cloud,
)
from .pmc import InvalidEmbeddingError, embed_hmc, validate_model
from .scenario import (
    MEAS_HEADER,
    TRUTH_HEADER,
    HmcSpec,
    ScenarioConfig,
    TargetSchedule,
    default_scenario,
    generate_measurements,
    generate_truth,
    meas_rows,
    pair_init_law,
    truth_rows,
    turning_transition,
)

FILTER_NAMES = ("pmc", "hmc")
# per-run substream indices: 0 feeds truth+measurements, the rest one filter each
_STREAM = {"truth": 0, "pmc": 1, "hmc": 2}

ESTIMATE_HEADER = ("run", "step", "target", "px", "py")
METRIC_HEADER = ("run", "step", "ospa", "nhat")


class ConfigError(ValueError):
    """Bad configuration file or flag values."""


class MissingInputError(FileNotFoundError):
    """Plotting was asked to read files that are not there."""


def _fmt(v):
    return repr(float(v))


@dataclass(frozen=True)
class ExperimentConfig:
    scenario: ScenarioConfig
    filter_params: FilterParams
    ospa: OspaParams
    runs: int
    seed: int
    filters: tuple
    output_dir: Path

    def __post_init__(self):
        if self.runs < 1:
            raise ConfigError(f"runs must be at least 1, got {self.runs}")
        if not self.filters:
            raise ConfigError("at least one filter must be selected")
        bad = [f for f in self.filters if f not in FILTER_NAMES]
        if bad:
            raise ConfigError(
                f"unknown filters {bad}; choose from {list(FILTER_NAMES)}"
            )


def site_birth_model(scenario, mass_per_site=0.05):
    """Birth intensity with one Gaussian per scheduled appearance site.

    Each component is the initial pair law of a scheduled target. Sites are
    deduplicated by target id order; the filter is told where targets can
    appear but not when.
    """
    comps = []
    for entry in scenario.schedule:
        mean, cov = pair_init_law(entry.mean_x, entry.cov_x, scenario.hmc)
        comps.append(BirthComponent(mass_per_site, mean, cov))
    return BirthModel(tuple(comps))


def default_experiment(output_dir="out", runs=25, seed=0,
                       filters=FILTER_NAMES):
    scenario = default_scenario()
    params = FilterParams(
        p_survive=scenario.p_survive,
        p_detect=scenario.p_detect,
        clutter_rate=scenario.clutter_rate,
        region_volume=scenario.region_volume,
        particles_per_target=2000,
        birth=site_birth_model(scenario),
        birth_particles=500,
    )
    return ExperimentConfig(
        scenario=scenario,
        filter_params=params,
        ospa=OspaParams(),
        runs=runs,
        seed=seed,
        filters=tuple(filters),
        output_dir=Path(output_dir),
    )


# ---------------------------------------------------------------------------
# config file


def _check_keys(section, allowed, where):
    unknown = sorted(set(section) - set(allowed))
    if unknown:
        raise ConfigError(f"unknown keys {unknown} in [{where}]")


def _matrix(raw, shape, where):
    try:
        a = np.asarray(raw, dtype=np.float64)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"{where} is not numeric: {exc}") from None
    if a.shape != shape:
        raise ConfigError(f"{where} must have shape {shape}, got {a.shape}")
    return a


def _scalar(section, key, default, where, kind=float):
    raw = section.get(key, default)
    try:
        return kind(raw)
    except (TypeError, ValueError):
        raise ConfigError(f"{where}.{key} must be a {kind.__name__}") from None


def _load_scenario(section):
    base = default_scenario()
    _check_keys(
        section,
        ("steps", "omega", "period", "clutter_rate", "p_detect",
         "p_survive", "region", "model", "targets"),
        "scenario",
    )
    omega = _scalar(section, "omega", base.omega, "scenario")
    period = _scalar(section, "period", base.period, "scenario")
    region_raw = section.get("region")
    if region_raw is None:
        region = base.region
    else:
        r = _matrix(region_raw, (2, 2), "scenario.region")
        region = ((r[0, 0], r[0, 1]), (r[1, 0], r[1, 1]))

    mdl = section.get("model", {})
    _check_keys(
        mdl, ("f", "q", "h", "r", "m0", "p0", "f2", "h2"), "scenario.model"
    )
    hb = base.hmc
    f = (_matrix(mdl["f"], (4, 4), "scenario.model.f") if "f" in mdl
         else turning_transition(omega, period))
    try:
        hmc = HmcSpec(
            f=f,
            q=_matrix(mdl.get("q", hb.q), (4, 4), "scenario.model.q"),
            h=_matrix(mdl.get("h", hb.h), (2, 4), "scenario.model.h"),
            r=_matrix(mdl.get("r", hb.r), (2, 2), "scenario.model.r"),
            m0=_matrix(mdl.get("m0", hb.m0), (4,), "scenario.model.m0"),
            p0=_matrix(mdl.get("p0", hb.p0), (4, 4), "scenario.model.p0"),
            f2=_matrix(mdl.get("f2", hb.f2), (4, 2), "scenario.model.f2"),
            h2=_matrix(mdl.get("h2", hb.h2), (2, 2), "scenario.model.h2"),
        )
    except (ValueError, NotPsdError) as exc:
        raise ConfigError(f"scenario.model: {exc}") from None

    steps = _scalar(section, "steps", base.steps, "scenario", int)
    targets = section.get("targets")
    if targets is None:
        # default targets are scripted to the horizon, so a shorter horizon
        # truncates them; explicit targets are validated as written
        schedule = tuple(
            TargetSchedule(
                target_id=t.target_id,
                birth_step=t.birth_step,
                death_step=min(t.death_step, steps),
                mean_x=t.mean_x,
                cov_x=t.cov_x,
            )
            for t in base.schedule
            if t.birth_step <= steps
        )
    else:
        schedule = []
        for i, t in enumerate(targets):
            where = f"scenario.targets[{i}]"
            _check_keys(t, ("id", "birth", "death", "mean", "cov"), where)
            schedule.append(TargetSchedule(
                target_id=_scalar(t, "id", i + 1, where, int),
                birth_step=_scalar(t, "birth", 1, where, int),
                death_step=_scalar(t, "death", steps, where, int),
                mean_x=_matrix(t.get("mean", np.zeros(4)), (4,),
                               where + ".mean"),
                cov_x=_matrix(t.get("cov", np.diag([100.0, 25.0, 100.0, 25.0])),
                              (4, 4), where + ".cov"),
            ))
        schedule = tuple(schedule)

    try:
        return ScenarioConfig(
            hmc=hmc,
            steps=steps,
            region=region,
            clutter_rate=_scalar(section, "clutter_rate", base.clutter_rate,
                                 "scenario"),
            p_detect=_scalar(section, "p_detect", base.p_detect, "scenario"),
            p_survive=_scalar(section, "p_survive", base.p_survive,
                              "scenario"),
            schedule=schedule,
            omega=omega,
            period=period,
        )
    except ValueError as exc:
        raise ConfigError(f"scenario: {exc}") from None


def _load_filter_params(section, scenario):
    _check_keys(
        section,
        ("particles_per_target", "birth_particles", "birth_mass",
         "resample", "p_survive", "p_detect"),
        "filter",
    )
    birth = site_birth_model(
        scenario, _scalar(section, "birth_mass", 0.05, "filter")
    )
    try:
        return FilterParams(
            p_survive=_scalar(section, "p_survive", scenario.p_survive,
                              "filter"),
            p_detect=_scalar(section, "p_detect", scenario.p_detect,
                             "filter"),
            clutter_rate=scenario.clutter_rate,
            region_volume=scenario.region_volume,
            particles_per_target=_scalar(section, "particles_per_target",
                                         2000, "filter", int),
            birth=birth,
            birth_particles=_scalar(section, "birth_particles", 500,
                                    "filter", int),
            resample_method=str(section.get("resample", "systematic")),
        )
    except ValueError as exc:
        raise ConfigError(f"filter: {exc}") from None


def load_config(path=None, seed=None, runs=None, output=None, filters=None):
    """Build an ExperimentConfig from an optional TOML file plus overrides.

    Flag overrides win over file values; defaults fill the rest. Every
    default matches default_experiment().
    """
    doc = {}
    if path is not None:
        try:
            with open(path, "rb") as fh:
                doc = tomllib.load(fh)
        except FileNotFoundError:
            raise ConfigError(f"config file not found: {path}") from None
        except tomllib.TOMLDecodeError as exc:
            raise ConfigError(f"{path}: {exc}") from None
    _check_keys(
        doc, ("runs", "seed", "filters", "output", "scenario", "filter",
              "ospa"),
        "top level",
    )
    scenario = _load_scenario(doc.get("scenario", {}))
    params = _load_filter_params(doc.get("filter", {}), scenario)
    osec = doc.get("ospa", {})
    _check_keys(osec, ("cutoff", "order"), "ospa")
    try:
        ospa = OspaParams(
            cutoff=_scalar(osec, "cutoff", 100.0, "ospa"),
            order=_scalar(osec, "order", 1.0, "ospa"),
        )
    except ValueError as exc:
        raise ConfigError(f"ospa: {exc}") from None

    raw_filters = filters if filters is not None else doc.get(
        "filters", list(FILTER_NAMES)
    )
    if isinstance(raw_filters, str):
        raw_filters = [s.strip() for s in raw_filters.split(",") if s.strip()]
    return ExperimentConfig(
        scenario=scenario,
        filter_params=params,
        ospa=ospa,
        runs=int(runs if runs is not None else doc.get("runs", 25)),
        seed=int(seed if seed is not None else doc.get("seed", 0)),
        filters=tuple(dict.fromkeys(raw_filters)),
        output_dir=Path(output if output is not None
                        else doc.get("output", "out")),
    )


# ---------------------------------------------------------------------------
# running


@dataclass
class FilterRunResult:
    name: str
    estimate_rows: list = field(default_factory=list)
    metric_rows: list = field(default_factory=list)
    ospa_by_step: np.ndarray | None = None
    nhat_by_step: np.ndarray | None = None
    seconds: float = 0.0
    error: str | None = None


@dataclass
class RunOutcome:
    run: int
    truth_rows: list
    meas_rows: list
    filters: dict


def _model_for(name, hmc):
    if name == "hmc":
        return embed_hmc(hmc.with_zero_cross_feeds())
    return embed_hmc(hmc)


def _truth_positions(truth):
    """Per-step (count, 2) arrays of true planar positions."""
    out = []
    for alive in truth.pairs:
        if alive:
            out.append(np.array([[p[0], p[2]] for _, p in alive]))
        else:
            out.append(np.empty((0, 2)))
    return out


def _run_filter(name, run, truth, cfg):
    model = _model_for(name, cfg.scenario.hmc)
    params = cfg.filter_params
    rng = np.random.default_rng([cfg.seed, run, _STREAM[name]])
    scans = truth.measurement_arrays()
    targets = _truth_positions(truth)
    result = FilterRunResult(name=name)
    n_steps = cfg.scenario.steps
    ospa_steps = np.empty(n_steps)
    nhat_steps = np.empty(n_steps)
    started = time.perf_counter()
    try:
        cloud = init_cloud(params, 0.0, rng, state_dim=model.state_dim)
        for k in range(1, n_steps + 1):
            cloud, est = filter_step(cloud, model, params, scans[k - 1], rng)
            positions = est.states[:, (0, 2)] if est.count else np.empty((0, 2))
            d = ospa_distance(positions, targets[k - 1], cfg.ospa)
            ospa_steps[k - 1] = d
            nhat_steps[k - 1] = est.cardinality
            result.metric_rows.append(
                [run, k, _fmt(d), _fmt(est.cardinality)]
            )
            for idx, (px, py) in enumerate(positions):
                result.estimate_rows.append(
                    [run, k, idx, _fmt(px), _fmt(py)]
                )
    except (FilterNumericsError, NotPsdError, FloatingPointError) as exc:
        result.error = f"{type(exc).__name__}: {exc}"
        result.estimate_rows = []
        result.metric_rows = []
    else:
        result.ospa_by_step = ospa_steps
        result.nhat_by_step = nhat_steps
    result.seconds = time.perf_counter() - started
    return result


def _execute_run(cfg, run):
    rng = np.random.default_rng([cfg.seed, run, _STREAM["truth"]])
    truth = generate_truth(cfg.scenario, rng)
    truth = generate_measurements(truth, cfg.scenario, rng)
    return RunOutcome(
        run=run,
        truth_rows=list(truth_rows(truth, run)),
        meas_rows=list(meas_rows(truth, run)),
        filters={name: _run_filter(name, run, truth, cfg)
                 for name in cfg.filters},
    )


@dataclass(frozen=True)
class FilterSummary:
    name: str
    completed_runs: int
    failed: tuple  # (run index, message) pairs
    step_mean_ospa: np.ndarray
    step_std_ospa: np.ndarray
    step_mean_nhat: np.ndarray
    step_std_nhat: np.ndarray
    overall_mean_ospa: float
    run_mean_ospa: np.ndarray  # per run, NaN where the run failed
    seconds_per_run: float


@dataclass(frozen=True)
class SummaryReport:
    runs: int
    seed: int
    steps: int
    filters: dict


def _summarize(name, outcomes, steps, runs):
    ospa = np.full((runs, steps), np.nan)
    nhat = np.full((runs, steps), np.nan)
    failed = []
    seconds = []
    for oc in outcomes:
        fr = oc.filters[name]
        seconds.append(fr.seconds)
        if fr.error is not None:
            failed.append((oc.run, fr.error))
            continue
        ospa[oc.run] = fr.ospa_by_step
        nhat[oc.run] = fr.nhat_by_step
    ok = ~np.isnan(ospa).any(axis=1)
    if ok.any():
        mean_o, std_o = ospa[ok].mean(axis=0), ospa[ok].std(axis=0)
        mean_n, std_n = nhat[ok].mean(axis=0), nhat[ok].std(axis=0)
        overall = float(ospa[ok].mean())
    else:
        mean_o = std_o = mean_n = std_n = np.full(steps, np.nan)
        overall = float("nan")
    return FilterSummary(
        name=name,
        completed_runs=int(ok.sum()),
        failed=tuple(failed),
        step_mean_ospa=mean_o,
        step_std_ospa=std_o,
        step_mean_nhat=mean_n,
        step_std_nhat=std_n,
        overall_mean_ospa=overall,
        run_mean_ospa=ospa.mean(axis=1),
        seconds_per_run=float(np.mean(seconds)) if seconds else 0.0,
    )


def format_summary(report):
    lines = [
        f"runs: {report.runs}",
        f"seed: {report.seed}",
        f"steps: {report.steps}",
        f"filters: {','.join(report.filters)}",
    ]
    for name, s in report.filters.items():
        lines.append("")
        lines.append(f"[{name}]")
        lines.append(f"completed runs: {s.completed_runs}")
        lines.append(f"failed runs: {len(s.failed)}")
        for run, msg in s.failed:
            lines.append(f"failed run {run}: {msg}")
        lines.append(f"overall mean ospa: {_fmt(s.overall_mean_ospa)}")
        lines.append(f"seconds per run: {s.seconds_per_run:.3f}")
        lines.append("step,mean_ospa,std_ospa,mean_nhat,std_nhat")
        for k in range(report.steps):
            lines.append(",".join([
                str(k + 1),
                _fmt(s.step_mean_ospa[k]), _fmt(s.step_std_ospa[k]),
                _fmt(s.step_mean_nhat[k]), _fmt(s.step_std_nhat[k]),
            ]))
    return "\n".join(lines) + "\n"


def _write_csv(path, header, rows):
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(header)
        writer.writerows(rows)


def run_experiment(cfg, workers=1):
    """Execute all runs, write the output files, return the summary.

    Each run r derives independent generator streams from (seed, r) for
    truth and for each filter, so results do not depend on the worker
    count and both filters always see identical scans.
    """
    out = cfg.output_dir
    out.mkdir(parents=True, exist_ok=True)
    job = functools.partial(_execute_run, cfg)
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            outcomes = list(pool.map(job, range(cfg.runs)))
    else:
        outcomes = [job(r) for r in range(cfg.runs)]

    # single collector, run order: identical bytes for any worker count
    _write_csv(out / "truth.csv", TRUTH_HEADER,
               (row for oc in outcomes for row in oc.truth_rows))
    _write_csv(out / "meas.csv", MEAS_HEADER,
               (row for oc in outcomes for row in oc.meas_rows))
    summaries = {}
    for name in cfg.filters:
        _write_csv(out / f"estimates_{name}.csv", ESTIMATE_HEADER,
                   (row for oc in outcomes
                    for row in oc.filters[name].estimate_rows))
        _write_csv(out / f"metrics_{name}.csv", METRIC_HEADER,
                   (row for oc in outcomes
                    for row in oc.filters[name].metric_rows))
        summaries[name] = _summarize(name, outcomes, cfg.scenario.steps,
                                     cfg.runs)
    report = SummaryReport(runs=cfg.runs, seed=cfg.seed,
                           steps=cfg.scenario.steps, filters=summaries)
    (out / "summary.txt").write_text(format_summary(report))
    return report


# ---------------------------------------------------------------------------
# plotting


def _read_csv_columns(path):
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        rows = list(reader)
    cols = {name: [] for name in header}
    for row in rows:
        for name, value in zip(header, row):
            cols[name].append(float(value))
    return {name: np.asarray(vals) for name, vals in cols.items()}


def _exact_limits(ax, xs, ys):
    xs = np.concatenate([np.atleast_1d(x) for x in xs])
    ys = np.concatenate([np.atleast_1d(y) for y in ys])
    lo, hi = float(xs.min()), float(xs.max())
    ax.set_xlim(lo, hi if hi > lo else lo + 1.0)
    lo, hi = float(ys.min()), float(ys.max())
    ax.set_ylim(lo, hi if hi > lo else lo + 1.0)
    return (ax.get_xlim(), ax.get_ylim())


def emit_plots(output_dir):
    """Render SVG figures from the run outputs in output_dir.

    Returns {figure name: {"path", "xlim", "ylim"}} so callers can check
    the axes against the data without parsing SVG.
    """
    out = Path(output_dir)
    truth_path = out / "truth.csv"
    metric_paths = sorted(out.glob("metrics_*.csv"))
    missing = [p for p in [truth_path] if not p.exists()]
    if not metric_paths:
        missing.append(out / "metrics_<filter>.csv")
    if missing:
        raise MissingInputError(
            "missing plot inputs: " + ", ".join(str(p) for p in missing)
        )
    names = [p.stem.split("_", 1)[1] for p in metric_paths]
    for name in names:
        est = out / f"estimates_{name}.csv"
        if not est.exists():
            raise MissingInputError(f"missing plot inputs: {est}")

    import matplotlib
    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    truth = _read_csv_columns(truth_path)
    if truth["run"].size == 0:
        raise MissingInputError(f"{truth_path} holds no rows")
    metrics = {n: _read_csv_columns(p) for n, p in zip(names, metric_paths)}
    for n, m in metrics.items():
        if m["run"].size == 0:
            raise MissingInputError(f"metrics_{n}.csv holds no rows")
    estimates = {n: _read_csv_columns(out / f"estimates_{n}.csv")
                 for n in names}
    info = {}

    # trajectory overlay for the first run
    fig, ax = plt.subplots(figsize=(7, 7))
    r0 = truth["run"].min()
    sel = truth["run"] == r0
    xs, ys = [], []
    for tid in np.unique(truth["target"][sel]):
        pick = sel & (truth["target"] == tid)
        order = np.argsort(truth["step"][pick])
        px, py = truth["px"][pick][order], truth["py"][pick][order]
        ax.plot(px, py, "-", lw=1.5, label=f"target {int(tid)}")
        xs.append(px)
        ys.append(py)
    markers = {"pmc": "x", "hmc": "+"}
    for n in names:
        e = estimates[n]
        pick = e["run"] == r0
        if pick.any():
            ax.plot(e["px"][pick], e["py"][pick], markers.get(n, "."),
                    ms=4, ls="none", alpha=0.6, label=f"{n} estimates")
            xs.append(e["px"][pick])
            ys.append(e["py"][pick])
    ax.set_xlabel("x position")
    ax.set_ylabel("y position")
    ax.legend(loc="best", fontsize=8)
    xlim, ylim = _exact_limits(ax, xs, ys)
    path = out / "trajectories.svg"
    fig.savefig(path)
    plt.close(fig)
    info["trajectories"] = {"path": path, "xlim": xlim, "ylim": ylim}

    # per-step cardinality: mean estimates vs the scripted truth staircase
    fig, ax = plt.subplots(figsize=(8, 4))
    steps_t = truth["step"][sel].astype(int)
    step_axis = np.arange(1, steps_t.max() + 1)
    alive = np.array([(steps_t == k).sum() for k in step_axis])
    ax.step(step_axis, alive, where="mid", color="k", label="truth")
    ys = [alive.astype(float)]
    for n in names:
        m = metrics[n]
        mean_n = np.array([m["nhat"][m["step"] == k].mean()
                           for k in step_axis])
        ax.plot(step_axis, mean_n, label=n)
        ys.append(mean_n)
    ax.set_xlabel("step")
    ax.set_ylabel("estimated target count")
    ax.legend(loc="best", fontsize=8)
    xlim, ylim = _exact_limits(ax, [step_axis.astype(float)], ys)
    path = out / "cardinality.svg"
    fig.savefig(path)
    plt.close(fig)
    info["cardinality"] = {"path": path, "xlim": xlim, "ylim": ylim}

    # per-step mean distance between estimate set and truth set
    fig, ax = plt.subplots(figsize=(8, 4))
    ys = []
    for n in names:
        m = metrics[n]
        mean_d = np.array([m["ospa"][m["step"] == k].mean()
                           for k in step_axis])
        ax.plot(step_axis, mean_d, label=n)
        ys.append(mean_d)
    ax.set_xlabel("step")
    ax.set_ylabel("mean OSPA")
    ax.legend(loc="best", fontsize=8)
    xlim, ylim = _exact_limits(ax, [step_axis.astype(float)], ys)
    path = out / "ospa.svg"
    fig.savefig(path)
    plt.close(fig)
    info["ospa"] = {"path": path, "xlim": xlim, "ylim": ylim}
    return info


# ---------------------------------------------------------------------------
# subcommands


def validate_config(path=None):
    """Parse a config, embed the model, and report numeric diagnostics.

    Returns the exit code: 0 when everything checks out, 2 otherwise.
    """
    cfg = load_config(path)
    sc = cfg.scenario
    print(f"steps: {sc.steps}")
    print(f"region: {sc.region}")
    print(f"clutter rate: {sc.clutter_rate}")
    print(f"p_survive: {sc.p_survive}  p_detect: {sc.p_detect}")
    print(f"turn rate: {sc.omega} rad/step, period {sc.period}")
    print(f"targets: {len(sc.schedule)}")
    print(f"particles per target: {cfg.filter_params.particles_per_target}")
    print(f"birth particles per scan: {cfg.filter_params.birth_particles}")
    print(f"birth mass per scan: {cfg.filter_params.birth.total_mass}")
    print(f"ospa cutoff {cfg.ospa.cutoff}, order {cfg.ospa.order}")
    try:
        model = embed_hmc(sc.hmc)
    except (InvalidEmbeddingError, NotPsdError) as exc:
        print(f"embedding invalid: {exc}")
        return 2
    diag = validate_model(model)
    print(f"pair noise symmetry residual: {diag.sigma_symmetry_residual:.3e}")
    print(f"pair noise min eigenvalue: {diag.sigma_min_eigenvalue:.6g}")
    print(f"observation noise positive definite: "
          f"{diag.obs_noise_positive_definite}")
    print(f"transition spectral radius: {diag.spectral_radius:.6g}")
    for note in diag.warnings:
        print(f"warning: {note}")
    ok = (diag.sigma_min_eigenvalue >= -1e-9
          and diag.obs_noise_positive_definite and not diag.warnings)
    print("config valid" if ok else "config invalid")
    return 0 if ok else 2


def _cmd_run(args):
    cfg = load_config(args.config, seed=args.seed, runs=args.runs,
                      output=args.out, filters=args.filters)
    report = run_experiment(cfg, workers=args.workers)
    print(f"wrote {cfg.output_dir}/summary.txt")
    for name, s in report.filters.items():
        print(f"{name}: mean ospa {s.overall_mean_ospa:.6g} over "
              f"{s.completed_runs}/{report.runs} runs, "
              f"{s.seconds_per_run:.2f} s/run")
    if any(s.completed_runs == 0 for s in report.filters.values()):
        return 1
    return 0


def _cmd_validate(args):
    return validate_config(args.config)


def _cmd_plot(args):
    info = emit_plots(args.out)
    for name, meta in info.items():
        print(f"wrote {meta['path']}")
    return 0


def _parse_filters(text):
    names = [s.strip() for s in text.split(",") if s.strip()]
    if not names:
        raise argparse.ArgumentTypeError("no filters given")
    return names


def build_parser():
    parser = argparse.ArgumentParser(
        prog="pairtrack",
        description="Seeded multi-target tracking experiments on "
                    "jointly Markov state/observation models.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="run a Monte Carlo experiment")
    p_run.add_argument("--config", default=None, help="TOML config path")
    p_run.add_argument("--seed", type=int, default=None, help="base seed")
    p_run.add_argument("--runs", type=int, default=None,
                       help="Monte Carlo repetitions")
    p_run.add_argument("--out", default=None, help="output directory")
    p_run.add_argument("--filters", type=_parse_filters, default=None,
                       help="comma list from {pmc,hmc}")
    p_run.add_argument("--workers", type=int, default=1,
                       help="parallel worker processes")
    p_run.set_defaults(func=_cmd_run)

    p_val = sub.add_parser("validate", help="check a config without running")
    p_val.add_argument("--config", default=None, help="TOML config path")
    p_val.set_defaults(func=_cmd_validate)

    p_plot = sub.add_parser("plot", help="render SVG figures from outputs")
    p_plot.add_argument("--out", default="out",
                        help="directory holding the run outputs")
    p_plot.set_defaults(func=_cmd_plot)
    return parser


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except MissingInputError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
