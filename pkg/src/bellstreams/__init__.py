"""Bell-test data streams: simulation, data matching, cascade retrodiction,
exact identity checks and correlation-polytope feasibility."""

__version__ = "0.1.0"

from .core_streams import (
    AlignedSet,
    CorrelationValue,
    IdentityVerdict,
    InequalityEvaluation,
    Provenance,
    SpinStream,
    StreamError,
    check_identity3,
    check_identity4,
    correlation,
    eval_inequality3,
    eval_inequality4,
)
from .singlet_source import PairRun, SourceConfig, joint_probability, marginal_check, sample_run
from .matching import MatchResult, build_quadruple, build_triple, match_on_label, overdetermination_report
from .cascade import (
    CascadeConfig,
    CascadeRun,
    cascade_correlations,
    sample_cascade,
    sequential_flip_probability,
    spots_roundtrip,
)
from .feasibility import (
    CorrelationPoint,
    FeasibilityResult,
    angle_violation_scan,
    feasible_quadruple,
    feasible_triple,
    induced_fourth_report,
    third_correlation_bounds,
)
