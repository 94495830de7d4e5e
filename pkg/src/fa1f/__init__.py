"""Harris-construction laboratory for the FA1f kinetically constrained model."""

from .census import AssemblyResult, assembly_experiment, avoiding_path_exists, census_trend, encounter_census
from .config import ConfigError, ExperimentConfig, load_config, parse_config
from .contact import ContactParams, coupled_contact, density_experiment, derive_params, domination_experiment
from .dual import (
    DualPath,
    InconsistencyError,
    audit_activation,
    code_path,
    count_skeletons,
    decode_coding,
    enumerate_dual_paths,
    find_non_activated_path,
    skeleton_of,
    vitali_select,
)
from .dynamics import (
    BernoulliConditioned,
    CoupledTrajectory,
    CylinderEvent,
    Delta,
    Explicit,
    Trajectory,
    couple,
    evolve,
    is_t_activated,
)
from .graph import GraphView, HalfLine, build_window, embed_half_line, extend_half_line
from .harris import HarrisScheme, sample_scheme
from .navigated import hitting_stats, navigate, navigation_event
from .oracle import build_chain, exact_decay, spectral_gap, stationary_law, transient_law
from .renorm import (
    RenormParams,
    classify_intervals,
    death_tail,
    p_K_of,
    q_of_K,
    run_semi_oriented,
    subordinate_chain,
    transport_check,
)
from .stats import FitError, FitResult, binomial_se, fit_exponential

__version__ = "0.1.0"

__all__ = [
    "AssemblyResult",
    "BernoulliConditioned",
    "ConfigError",
    "ContactParams",
    "CoupledTrajectory",
    "CylinderEvent",
    "Delta",
    "DualPath",
    "ExperimentConfig",
    "Explicit",
    "FitError",
    "FitResult",
    "GraphView",
    "HalfLine",
    "HarrisScheme",
    "InconsistencyError",
    "RenormParams",
    "Trajectory",
    "assembly_experiment",
    "audit_activation",
    "avoiding_path_exists",
    "binomial_se",
    "build_chain",
    "build_window",
    "census_trend",
    "classify_intervals",
    "code_path",
    "count_skeletons",
    "couple",
    "coupled_contact",
    "death_tail",
    "decode_coding",
    "density_experiment",
    "derive_params",
    "domination_experiment",
    "embed_half_line",
    "encounter_census",
    "enumerate_dual_paths",
    "evolve",
    "exact_decay",
    "extend_half_line",
    "find_non_activated_path",
    "fit_exponential",
    "hitting_stats",
    "is_t_activated",
    "load_config",
    "navigate",
    "navigation_event",
    "p_K_of",
    "parse_config",
    "q_of_K",
    "run_semi_oriented",
    "sample_scheme",
    "skeleton_of",
    "spectral_gap",
    "stationary_law",
    "subordinate_chain",
    "transient_law",
    "transport_check",
    "vitali_select",
]
