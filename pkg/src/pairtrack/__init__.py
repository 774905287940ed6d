"""Particle intensity filter for jointly Markov state/observation pairs.

Top-level exports cover the model layer (pair-chain transitions, the
classical-model embedding), the filter itself, evaluation metrics, and
the benchmark scenario. Exact reference implementations used by the test
suite live in `pairtrack.oracles`; the experiment driver in
`pairtrack.cli`.
"""

from ._kernels import BACKEND, backend_name
from .gaussian import (
    Gaussian,
    NotPsdError,
    SingularCovarianceError,
    mvn_logpdf,
    mvn_sample,
    psd_factor,
)
from .ospa import OspaParams, ospa_distance
from .phd import (
    BirthComponent,
    BirthModel,
    EstimateSet,
    FilterNumericsError,
    FilterParams,
    ParticleCloud,
    PriorProposal,
    estimate_cardinality,
    extract_states,
    filter_step,
    init_cloud,
    predict,
    resample,
    update,
)
from .pmc import (
    GaussianPmcModel,
    HmcSpec,
    InvalidEmbeddingError,
    embed_hmc,
    validate_model,
)
from .scenario import (
    ScenarioConfig,
    TargetSchedule,
    default_scenario,
    generate_measurements,
    generate_truth,
    pair_init_law,
    turning_transition,
)

__version__ = "0.1.0"

__all__ = [
    "BACKEND",
    "backend_name",
    "Gaussian",
    "NotPsdError",
    "SingularCovarianceError",
    "mvn_logpdf",
    "mvn_sample",
    "psd_factor",
    "OspaParams",
    "ospa_distance",
    "BirthComponent",
    "BirthModel",
    "EstimateSet",
    "FilterNumericsError",
    "FilterParams",
    "ParticleCloud",
    "PriorProposal",
    "estimate_cardinality",
    "extract_states",
    "filter_step",
    "init_cloud",
    "predict",
    "resample",
    "update",
    "GaussianPmcModel",
    "HmcSpec",
    "InvalidEmbeddingError",
    "embed_hmc",
    "validate_model",
    "ScenarioConfig",
    "TargetSchedule",
    "default_scenario",
    "generate_measurements",
    "generate_truth",
    "pair_init_law",
    "turning_transition",
    "__version__",
]
