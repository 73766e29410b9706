"""Distance constraints: feasibility, error envelopes, and bound evolution.

The connectivity and collision ranges (d_lower, d_upper) per edge define
static error bounds around the desired distance. Combined with the
initial errors plus a slack mu they give the funnel widths the barrier
transform enforces, and through the performance functions those widths
shrink over time.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import (
    DegenerateBound,
    DimensionMismatch,
    InfeasibleFormation,
    InitialConditionViolation,
    NumericalDomain,
)
from .rigidity import FormationSpec, SensingGraph
from .transform import PerformanceFunction, beta

# Default slack added on top of the initial error magnitude when capping
# the funnel half-widths.
DEFAULT_MU = 3.0


@dataclass(frozen=True)
class EdgeRanges:
    """Per-edge distance windows in canonical order: collision floor and sensing ceiling."""

    d_lower: np.ndarray
    d_upper: np.ndarray

    def __post_init__(self):
        lo = np.asarray(self.d_lower, dtype=float)
        hi = np.asarray(self.d_upper, dtype=float)
        object.__setattr__(self, "d_lower", lo)
        object.__setattr__(self, "d_upper", hi)
        if lo.shape != hi.shape:
            raise DimensionMismatch(f"range shapes differ: {lo.shape} vs {hi.shape}")
        if not np.all(lo > 0):
            raise ValueError("collision distances must be positive")
        if not np.all(hi > lo):
            raise ValueError("sensing ranges must exceed collision distances")


def edge_ranges(graph: SensingGraph, chain_lower, chain_upper, radial_lower, radial_upper) -> EdgeRanges:
    """Assemble canonical per-edge ranges from chain and radial values.

    Scalars broadcast over their group; sequences must match the group
    size (N-1 chain edges, N radial edges).
    """
    n = graph.n_agents
    lo = np.concatenate([
        np.broadcast_to(np.asarray(chain_lower, float), (n - 1,)),
        np.broadcast_to(np.asarray(radial_lower, float), (n,)),
    ])
    hi = np.concatenate([
        np.broadcast_to(np.asarray(chain_upper, float), (n - 1,)),
        np.broadcast_to(np.asarray(radial_upper, float), (n,)),
    ])
    return EdgeRanges(lo, hi)


@dataclass(frozen=True)
class FeasibilityIssue:
    """One violated requirement, with the margin by which it failed."""

    edge: tuple[int, int] | None
    kind: str        # "angle", "collision", "sensing"
    margin: float    # positive margin means satisfied
    message: str


@dataclass(frozen=True)
class FeasibilityReport:
    ok: bool
    issues: tuple[FeasibilityIssue, ...]


def check_feasibility(spec: FormationSpec, ranges: EdgeRanges) -> FeasibilityReport:
    """Verify the desired distances sit strictly inside every window.

    Also re-checks the separation-angle interval so that reports on
    hand-built specs stay complete. Returns a report instead of raising;
    downstream constructors treat a non-ok report as an error.
    """
    issues = []
    for k, a in enumerate(spec.separation_angles_deg):
        margin = min(a, 180.0 - a)
        if margin <= 0:
            issues.append(FeasibilityIssue(None, "angle", float(margin),
                                           f"separation angle {k} = {a} deg outside (0, 180)"))
    dstar = spec.desired_distances
    if ranges.d_lower.shape != dstar.shape:
        raise DimensionMismatch(
            f"ranges cover {ranges.d_lower.shape[0]} edges, spec has {dstar.shape[0]}")
    for k, (i, j) in enumerate(spec.graph.edges):
        lo_margin = float(dstar[k] - ranges.d_lower[k])
        hi_margin = float(ranges.d_upper[k] - dstar[k])
        if lo_margin <= 0:
            issues.append(FeasibilityIssue((i, j), "collision", lo_margin,
                                           f"edge ({i},{j}): desired {dstar[k]:.4f} m under collision floor {ranges.d_lower[k]:.4f} m"))
        if hi_margin <= 0:
            issues.append(FeasibilityIssue((i, j), "sensing", hi_margin,
                                           f"edge ({i},{j}): desired {dstar[k]:.4f} m beyond sensing range {ranges.d_upper[k]:.4f} m"))
    return FeasibilityReport(not issues, tuple(issues))


@dataclass(frozen=True)
class ConstraintEnvelope:
    """Frozen funnel data for one scenario, per edge in canonical order.

    Holds the static windows, the capped error bounds (e_lower_star,
    e_upper_star), their squared counterparts, the normalized bounds the
    barrier uses, and the performance functions that drive the decay.
    """

    d_star: np.ndarray
    d_lower: np.ndarray
    d_upper: np.ndarray
    e_lower_star: np.ndarray
    e_upper_star: np.ndarray
    eta_lower: np.ndarray
    eta_upper: np.ndarray
    xi_lower: np.ndarray
    xi_upper: np.ndarray
    mu: float
    perf: PerformanceFunction


def build_envelope(spec: FormationSpec, ranges: EdgeRanges, initial_errors,
                   mu: float = DEFAULT_MU, perf: PerformanceFunction | None = None) -> ConstraintEnvelope:
    """Derive the error funnels from ranges, initial errors, and slack.

    Each funnel half-width is the smaller of the static margin and the
    initial error magnitude plus mu, so trajectories that start well
    inside the windows get correspondingly tight guarantees. The squared
    bounds follow from eta = e (e + 2 d*), and dividing by beta(0) gives
    the normalized bounds.

    Raises
    ------
    InfeasibleFormation
        If the desired distances violate the windows.
    InitialConditionViolation
        If an initial error starts on or outside its funnel.
    DegenerateBound
        If a lower half-width reaches the desired distance.
    """
    if mu <= 0:
        raise ValueError(f"mu must be positive, got {mu}")
    report = check_feasibility(spec, ranges)
    if not report.ok:
        raise InfeasibleFormation("; ".join(i.message for i in report.issues))
    e0 = np.asarray(initial_errors, dtype=float)
    dstar = spec.desired_distances
    if e0.shape != dstar.shape:
        raise DimensionMismatch(f"initial errors shape {e0.shape}, expected {dstar.shape}")
    if perf is None:
        perf = PerformanceFunction(1.0, 0.15, 0.1)
    perf = perf.broadcast(spec.graph.n_edges)

    cap = np.abs(e0) + mu
    e_lo = np.minimum(dstar - ranges.d_lower, cap)
    e_hi = np.minimum(ranges.d_upper - dstar, cap)
    inside = (-e_lo < e0) & (e0 < e_hi)
    if not np.all(inside):
        k = int(np.argmax(~inside))
        i, j = spec.graph.edges[k]
        raise InitialConditionViolation(
            f"edge ({i},{j}): initial error {e0[k]:.4f} m outside (-{e_lo[k]:.4f}, {e_hi[k]:.4f})")
    if np.any(e_lo >= dstar):
        k = int(np.argmax(e_lo >= dstar))
        i, j = spec.graph.edges[k]
        raise DegenerateBound(
            f"edge ({i},{j}): lower half-width {e_lo[k]:.4f} m reaches desired distance {dstar[k]:.4f} m")

    eta_lo = e_lo * (2.0 * dstar - e_lo)
    eta_hi = e_hi * (e_hi + 2.0 * dstar)
    beta0 = perf.beta0
    return ConstraintEnvelope(
        d_star=dstar.copy(),
        d_lower=ranges.d_lower.copy(),
        d_upper=ranges.d_upper.copy(),
        e_lower_star=e_lo,
        e_upper_star=e_hi,
        eta_lower=eta_lo,
        eta_upper=eta_hi,
        xi_lower=eta_lo / beta0,
        xi_upper=eta_hi / beta0,
        mu=float(mu),
        perf=perf,
    )


@dataclass(frozen=True)
class EdgeErrors:
    """Per-edge distance errors at one instant."""

    d: np.ndarray     # distances
    e: np.ndarray     # d - d_star
    eta: np.ndarray   # d^2 - d_star^2, equals e (e + 2 d_star)
    xi: np.ndarray    # eta / beta(t)


def edge_errors(world, spec: FormationSpec, envelope: ConstraintEnvelope, t: float) -> EdgeErrors:
    """Measure distances against the desired geometry, normalize by beta(t).

    ``world`` is any object exposing ``vertex_coordinates`` with the
    target in row 0 (see the simulator's world state).
    """
    coords = np.asarray(world.vertex_coordinates, dtype=float)
    if coords.shape != (spec.graph.n_vertices, 2):
        raise DimensionMismatch(
            f"world has coordinates {coords.shape}, spec needs {(spec.graph.n_vertices, 2)}")
    idx = np.asarray(spec.graph.edges)
    rel = coords[idx[:, 0]] - coords[idx[:, 1]]
    d = np.sqrt(np.einsum("kd,kd->k", rel, rel))
    e = d - spec.desired_distances
    eta = d * d - spec.desired_distances**2
    b, _ = beta(envelope.perf, t)
    return EdgeErrors(d, e, eta, eta / b)


def time_varying_error_bounds(envelope: ConstraintEnvelope, t) -> tuple[np.ndarray, np.ndarray]:
    """Distance-error bounds implied by the decayed squared bounds at time t.

    Returns (lower, upper) half-widths, both positive: the admissible
    band at time t is -lower < e < upper. Scalar t gives per-edge
    arrays; a 1-D array of times gives (T, E) grids.
    """
    t = np.asarray(t, dtype=float)
    if t.ndim == 1:
        b, _ = beta(envelope.perf, t[:, None])
    else:
        b, _ = beta(envelope.perf, t)
    scale = b / envelope.perf.beta0
    d2 = envelope.d_star**2
    lo_arg = d2 - envelope.eta_lower * scale
    if np.any(lo_arg < 0):
        raise NumericalDomain("decayed lower bound exceeds squared desired distance")
    upper = -envelope.d_star + np.sqrt(d2 + envelope.eta_upper * scale)
    lower = envelope.d_star - np.sqrt(lo_arg)
    return lower, upper
