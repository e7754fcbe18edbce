"""Two-user millimeter-wave beam alignment: models, planner, protocols.

The package simulates a transmitter that localizes two receivers on a
circle with interactive beam scans and then serves them in a shared
data window, minimizing average transmit power under per-user rate
demands. It provides exact interval algebra for beam supports, the
width-based belief dynamics, the convex energy model, the optimal
time-division split, an exact lattice planner over scan widths, the
three end-to-end protocols, and a Monte Carlo harness with a CLI.
"""

from .alignment_state import (
    BeliefState,
    Feedback,
    GroundTruth,
    InconsistencyError,
    OutcomeProbs,
    ack_probabilities,
    feedback,
    initial_state,
    realize_beam,
    sample_ground_truth,
    transition,
    update_supports,
)
from .arcset import ArcSet, complement, contains, intersect, measure, take_measured_subset, union
from .dp_planner import (
    BisectionReport,
    HalvingReport,
    ValueTable,
    backward_induction,
    closed_form_power,
    verify_bisection_optimality,
    verify_halving_identity,
)
from .link_energy import (
    FrameTiming,
    InfeasibleRateError,
    LinkParams,
    convexity_margin,
    energy_deriv1,
    energy_deriv2,
    energy_per_radian,
    snr_factor,
)
from .protocols import (
    SCHEME_BISECTION,
    SCHEME_EXHAUSTIVE,
    SCHEME_NAMES,
    SCHEME_SINGLE_USER,
    DepthChoice,
    ExhaustiveConfig,
    FrameOutcome,
    Policy,
    SingleUserConfig,
    TwoFrameOutcome,
    bisection_policy,
    cell_index,
    exhaustive_expected_power,
    exhaustive_protocol,
    optimize_depth,
    single_user_power,
    single_user_protocol,
)
from .sim_harness import (
    CSV_HEADER,
    SweepRow,
    TrialRecord,
    TrialStats,
    run_episode,
    run_trials,
    sweep,
    trace_frame,
    watts_to_dbm,
    write_csv,
)
from .tdm_scheduler import Schedule, make_schedule, solve_tau, terminal_cost

__version__ = "0.1.0"

__all__ = [
    "ArcSet",
    "BeliefState",
    "BisectionReport",
    "CSV_HEADER",
    "DepthChoice",
    "ExhaustiveConfig",
    "Feedback",
    "FrameOutcome",
    "FrameTiming",
    "GroundTruth",
    "HalvingReport",
    "InconsistencyError",
    "InfeasibleRateError",
    "LinkParams",
    "OutcomeProbs",
    "Policy",
    "SCHEME_BISECTION",
    "SCHEME_EXHAUSTIVE",
    "SCHEME_NAMES",
    "SCHEME_SINGLE_USER",
    "Schedule",
    "SingleUserConfig",
    "SweepRow",
    "TrialRecord",
    "TrialStats",
    "TwoFrameOutcome",
    "ValueTable",
    "ack_probabilities",
    "backward_induction",
    "bisection_policy",
    "cell_index",
    "closed_form_power",
    "complement",
    "contains",
    "convexity_margin",
    "energy_deriv1",
    "energy_deriv2",
    "energy_per_radian",
    "exhaustive_expected_power",
    "exhaustive_protocol",
    "feedback",
    "initial_state",
    "intersect",
    "make_schedule",
    "measure",
    "optimize_depth",
    "realize_beam",
    "run_episode",
    "run_trials",
    "sample_ground_truth",
    "single_user_power",
    "single_user_protocol",
    "snr_factor",
    "solve_tau",
    "sweep",
    "take_measured_subset",
    "terminal_cost",
    "trace_frame",
    "transition",
    "union",
    "update_supports",
    "verify_bisection_optimality",
    "verify_halving_identity",
    "watts_to_dbm",
    "write_csv",
    "__version__",
]
