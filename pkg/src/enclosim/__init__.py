"""Deterministic simulation of distance-based target enclosing with unicycles.

The package splits along the structure of the problem: rigidity holds
the interaction pattern and its desired geometry, formation derives the
per-edge error funnels, transform maps errors through the shrinking
barriers, control turns transformed errors into wheel commands, and sim
integrates the closed loop and audits every logged instant.
"""

from .control import (
    ControlGains,
    ControlOutput,
    control_gains,
    evaluate_controls,
    settling_time_bound,
    wrap_angle,
)
from .errors import (
    AngleOutOfRange,
    DegenerateBound,
    DimensionMismatch,
    EnclosimError,
    InfeasibleFormation,
    InitialConditionViolation,
    NumericalDomain,
    OutOfBarrier,
    ParseError,
    SingularityGuard,
    ValidationError,
)
from .formation import (
    ConstraintEnvelope,
    EdgeRanges,
    build_envelope,
    check_feasibility,
    edge_errors,
    edge_ranges,
    time_varying_error_bounds,
)
from .rigidity import (
    DesiredFramework,
    FormationSpec,
    SensingGraph,
    canonical_edges,
    formation_spec,
    henneberg_build,
    is_infinitesimally_rigid,
    rigidity_matrix,
)
from .scenario_io import (
    apply_env_overrides,
    bundled_scenarios,
    load_scenario,
    resolve_scenario,
    write_scenario,
)
from .sim import (
    Scenario,
    SimTrace,
    TargetMotion,
    WorldState,
    metrics,
    monitor,
    run,
    scenario_envelope,
    step,
    target_motion,
    world_state,
)
from .transform import PerformanceFunction, beta, sigma_edge, sigma_theta, zeta_edge
from .verification import CriterionResult, criterion_names, run_criteria

__version__ = "0.1.0"

__all__ = [
    "AngleOutOfRange",
    "ConstraintEnvelope",
    "ControlGains",
    "ControlOutput",
    "CriterionResult",
    "DegenerateBound",
    "DesiredFramework",
    "DimensionMismatch",
    "EdgeRanges",
    "EnclosimError",
    "FormationSpec",
    "InfeasibleFormation",
    "InitialConditionViolation",
    "NumericalDomain",
    "OutOfBarrier",
    "ParseError",
    "PerformanceFunction",
    "Scenario",
    "SensingGraph",
    "SimTrace",
    "SingularityGuard",
    "TargetMotion",
    "ValidationError",
    "WorldState",
    "apply_env_overrides",
    "beta",
    "build_envelope",
    "bundled_scenarios",
    "canonical_edges",
    "check_feasibility",
    "control_gains",
    "criterion_names",
    "edge_errors",
    "edge_ranges",
    "evaluate_controls",
    "formation_spec",
    "henneberg_build",
    "is_infinitesimally_rigid",
    "load_scenario",
    "metrics",
    "monitor",
    "resolve_scenario",
    "rigidity_matrix",
    "run",
    "run_criteria",
    "scenario_envelope",
    "settling_time_bound",
    "sigma_edge",
    "sigma_theta",
    "step",
    "target_motion",
    "time_varying_error_bounds",
    "world_state",
    "wrap_angle",
    "write_scenario",
    "zeta_edge",
    "__version__",
]
