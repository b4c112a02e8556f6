"""Effective capacity of a HARQ-backed device-to-device link that shares a
two-tier cellular deployment.

The analytical pipeline moves through four layers: ternary link selection
from noisy pathloss estimates (`modeselect`), a rank-1 Markov block-channel
with per-mode ON/OFF gating (`markov`), finite-blocklength decoding-error
aggregation over truncated HARQ rounds (`harq`), and the companion-matrix
spectral radius that yields the effective capacity (`effcap`). `montecarlo`
re-derives every one of those quantities by simulation, and `optimizer`
finds the EC-maximizing fixed rate. `cli` wires the layers into runnable
experiments.
"""

from ._backend import BACKEND_NAME, HAVE_KERNEL
from .channel import (
    LinkBudget,
    SystemParams,
    db_to_linear,
    dbm_to_watts,
    linear_to_db,
    mean_snr_direct,
    mean_snr_two_hop,
    pathloss_db,
    sir_outage_direct,
    sir_outage_two_hop,
)
from .effcap import (
    ECResult,
    ec_generic,
    ec_harq,
    ec_truncated_n1,
    ec_truncated_n2,
    perron_root,
)
from .errors import (
    ClampWarning,
    ConfigError,
    DegenerateError,
    DomainError,
    ModelWarning,
)
from .harq import (
    CompanionSpec,
    DecodingProfile,
    ZetaPools,
    build_decoding_profile,
    companion_entries,
    decoding_error_conditional,
    default_schedule,
    expected_decoding_error,
    removal_probabilities,
)
from .markov import (
    TransitionRow,
    gamma_req,
    overlay_row,
    stationary_distribution,
    transition_matrix,
    underlay_row,
)
from .modeselect import (
    DetectionProfile,
    compute_thresholds,
    detection_probabilities,
    hypothesis_distribution,
    map_to_hypotheses,
    q_function,
)
from .montecarlo import (
    EmpiricalEC,
    SimConfig,
    empirical_detection,
    empirical_ec,
    empirical_sir_outage,
    simulate_period_outcomes,
    simulate_service_paths,
)
from .optimizer import (
    FrozenCoeffs,
    GDConfig,
    GDResult,
    GridResult,
    analytic_gradient_n1,
    cost_n1,
    gd_optimize,
    grid_search,
)

__version__ = "0.1.0"

__all__ = [
    "BACKEND_NAME",
    "HAVE_KERNEL",
    "ClampWarning",
    "CompanionSpec",
    "ConfigError",
    "DecodingProfile",
    "DegenerateError",
    "DetectionProfile",
    "DomainError",
    "ECResult",
    "EmpiricalEC",
    "FrozenCoeffs",
    "GDConfig",
    "GDResult",
    "GridResult",
    "LinkBudget",
    "ModelWarning",
    "SimConfig",
    "SystemParams",
    "TransitionRow",
    "ZetaPools",
    "analytic_gradient_n1",
    "build_decoding_profile",
    "companion_entries",
    "compute_thresholds",
    "cost_n1",
    "db_to_linear",
    "dbm_to_watts",
    "decoding_error_conditional",
    "default_schedule",
    "detection_probabilities",
    "ec_generic",
    "ec_harq",
    "ec_truncated_n1",
    "ec_truncated_n2",
    "empirical_detection",
    "empirical_ec",
    "empirical_sir_outage",
    "expected_decoding_error",
    "gamma_req",
    "gd_optimize",
    "grid_search",
    "hypothesis_distribution",
    "linear_to_db",
    "map_to_hypotheses",
    "mean_snr_direct",
    "mean_snr_two_hop",
    "overlay_row",
    "pathloss_db",
    "perron_root",
    "q_function",
    "removal_probabilities",
    "simulate_period_outcomes",
    "simulate_service_paths",
    "sir_outage_direct",
    "sir_outage_two_hop",
    "stationary_distribution",
    "transition_matrix",
    "underlay_row",
]
