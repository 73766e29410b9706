"""Sensing graph, desired framework construction, and rigidity checks.

The formation lives on a target-inclusive graph with vertices 0..N where
vertex 0 is the enclosed target. Edges follow one canonical order
everywhere: the ring chain (1,2), (2,3), ..., (N-1,N) followed by the
radial edges (1,0), (2,0), ..., (N,0). Stacked coordinate vectors put
the N agent blocks first and the target block last.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import (
    AngleOutOfRange,
    DecompositionMismatch,
    DimensionMismatch,
    NonpositiveRadius,
)

# Relative cutoff for numerical rank: singular values below
# RANK_TOL * sigma_max count as zero.
RANK_TOL = 1e-8

# The target tail of the rigidity matrix must equal the negated row sum
# of the agent block to this absolute tolerance.
DECOMPOSITION_TOL = 1e-12


def canonical_edges(n_agents: int) -> tuple[tuple[int, int], ...]:
    """Ordered edge list: chain pairs first, then radial pairs to the target."""
    if n_agents < 1:
        raise DimensionMismatch(f"need at least one agent, got {n_agents}")
    chain = [(i, i + 1) for i in range(1, n_agents)]
    radial = [(i, 0) for i in range(1, n_agents + 1)]
    return tuple(chain + radial)


@dataclass(frozen=True)
class SensingGraph:
    """Target-inclusive interaction graph over vertices 0..n_agents."""

    n_agents: int
    edges: tuple[tuple[int, int], ...] = field(init=False)

    def __post_init__(self):
        object.__setattr__(self, "edges", canonical_edges(self.n_agents))

    @property
    def n_edges(self) -> int:
        return 2 * self.n_agents - 1

    @property
    def n_vertices(self) -> int:
        return self.n_agents + 1


@dataclass(frozen=True)
class FormationSpec:
    """Radius and separation angles of the desired enclosing pattern.

    ``separation_angles_deg`` holds the full cycle of consecutive-agent
    angles. For two agents that is the single given angle; from three
    agents on it includes the implied closing angle between the last
    agent and the first, so the entries sum to 360.
    """

    radius: float
    separation_angles_deg: np.ndarray
    graph: SensingGraph
    desired_distances: np.ndarray  # canonical edge order, meters

    @property
    def n_agents(self) -> int:
        return self.graph.n_agents


def formation_spec(radius: float, angles_deg) -> FormationSpec:
    """Validate radius and angles, derive desired distances.

    Parameters
    ----------
    radius : float
        Enclosing circle radius, strictly positive.
    angles_deg : sequence of float
        N-1 separation angles in degrees for N agents, each strictly
        inside (0, 180). For N >= 3 the implied closing angle
        360 - sum(angles) must also lie strictly inside (0, 180); with
        two agents the closing pair coincides with the chain edge and
        no closing constraint applies.
    """
    if radius <= 0:
        raise NonpositiveRadius(f"radius must be positive, got {radius}")
    given = np.asarray(angles_deg, dtype=float)
    if given.ndim != 1 or given.size < 1:
        raise DimensionMismatch("angles must be a non-empty 1-D sequence")
    n_agents = given.size + 1
    for k, a in enumerate(given):
        if not 0.0 < a < 180.0:
            raise AngleOutOfRange(f"separation angle {k} is {a} deg, must lie in (0, 180)")
    if n_agents >= 3:
        closing = 360.0 - float(given.sum())
        if not 0.0 < closing < 180.0:
            raise AngleOutOfRange(
                f"closing angle is {closing} deg (angles sum to {given.sum()}), must lie in (0, 180)"
            )
        cycle = np.append(given, closing)
    else:
        cycle = given.copy()
    graph = SensingGraph(n_agents)
    chain = 2.0 * radius * np.sin(np.deg2rad(given) / 2.0)
    dstar = np.concatenate([chain, np.full(n_agents, float(radius))])
    return FormationSpec(float(radius), cycle, graph, dstar)


@dataclass(frozen=True)
class DesiredFramework:
    """A realization of the desired pattern: spec plus vertex coordinates.

    ``coordinates`` has one row per vertex indexed by vertex id, so the
    target sits in row 0 and agent i in row i.
    """

    spec: FormationSpec
    coordinates: np.ndarray  # (N+1, 2)

    @property
    def graph(self) -> SensingGraph:
        return self.spec.graph

    @property
    def desired_distances(self) -> np.ndarray:
        return self.spec.desired_distances


def henneberg_build(radius: float, angles_deg) -> DesiredFramework:
    """Construct the desired framework by vertex additions on a circle.

    Starts from the triangle (target, agent 1, agent 2) and adds each
    further agent with edges to the target and to its predecessor, which
    keeps the framework minimally rigid at every step. Agent 1 sits at
    polar angle zero; agent i at the cumulative separation angle, all on
    the circle of the given radius around the target at the origin.
    Consecutive-agent distances come out as chord lengths
    2 r sin(angle / 2), radial distances as the radius itself.
    """
    spec = formation_spec(radius, angles_deg)
    n = spec.n_agents
    coords = np.zeros((n + 1, 2))
    # vertex additions: each new agent lands on the circle at the next
    # cumulative angle, meeting both of its desired distances exactly
    cumulative = 0.0
    for i in range(1, n + 1):
        if i > 1:
            cumulative += np.deg2rad(spec.separation_angles_deg[i - 2])
        coords[i] = radius * np.array([np.cos(cumulative), np.sin(cumulative)])
    return DesiredFramework(spec, coords)


def _check_coordinates(coordinates: np.ndarray, graph: SensingGraph) -> np.ndarray:
    coords = np.asarray(coordinates, dtype=float)
    if coords.shape != (graph.n_vertices, 2):
        raise DimensionMismatch(
            f"coordinates shape {coords.shape} does not match {graph.n_vertices} vertices"
        )
    return coords


def edge_vectors(coordinates: np.ndarray, graph: SensingGraph) -> np.ndarray:
    """Relative positions p_i - p_j per canonical edge, shape (2N-1, 2)."""
    coords = _check_coordinates(coordinates, graph)
    idx = np.asarray(graph.edges)
    return coords[idx[:, 0]] - coords[idx[:, 1]]


def edge_function(coordinates: np.ndarray, graph: SensingGraph) -> np.ndarray:
    """Squared vertex distances in canonical edge order.

    Parameters
    ----------
    coordinates : ndarray, shape (N+1, 2)
        Vertex positions indexed by vertex id (target in row 0).
    graph : SensingGraph

    Returns
    -------
    ndarray, shape (2N-1,)
    """
    rel = edge_vectors(coordinates, graph)
    return np.einsum("kd,kd->k", rel, rel)


def rigidity_matrix(coordinates: np.ndarray, graph: SensingGraph) -> np.ndarray:
    """Half Jacobian of the edge function w.r.t. stacked coordinates.

    The row for edge (i, j) carries the relative position p_i - p_j in
    the block of vertex i and its negation in the block of vertex j.
    Columns stack the N agent blocks first and the target block last,
    giving shape (2N-1, 2N+2).
    """
    coords = _check_coordinates(coordinates, graph)
    n = graph.n_agents
    R = np.zeros((graph.n_edges, 2 * n + 2))
    for k, (i, j) in enumerate(graph.edges):
        rel = coords[i] - coords[j]
        R[k, 2 * (i - 1):2 * i] = rel
        if j == 0:
            R[k, 2 * n:2 * n + 2] = -rel
        else:
            R[k, 2 * (j - 1):2 * j] = -rel
    return R


def stack_coordinates(coordinates: np.ndarray) -> np.ndarray:
    """Flatten vertex rows into the stacked order (agents first, target last)."""
    coords = np.asarray(coordinates, dtype=float)
    return np.concatenate([coords[1:].ravel(), coords[0]])


def unstack_coordinates(stacked: np.ndarray) -> np.ndarray:
    """Inverse of :func:`stack_coordinates`."""
    flat = np.asarray(stacked, dtype=float)
    if flat.ndim != 1 or flat.size % 2 != 0 or flat.size < 4:
        raise DimensionMismatch(f"stacked vector has invalid size {flat.shape}")
    pts = flat.reshape(-1, 2)
    return np.vstack([pts[-1], pts[:-1]])


@dataclass(frozen=True)
class RigidityDecomposition:
    """Split of the rigidity matrix into agent block and target tail.

    The tail always equals the negated row sum of the agent block over
    agent positions, i.e. target columns never add rank.
    """

    full: np.ndarray          # (2N-1, 2N+2)
    agent_block: np.ndarray   # (2N-1, 2N)
    target_tail: np.ndarray   # (2N-1, 2)


def decompose(R: np.ndarray) -> RigidityDecomposition:
    """Split R into [M, tail] and verify tail == -M (1_N kron I_2)."""
    R = np.asarray(R, dtype=float)
    if R.ndim != 2 or R.shape[1] < 4 or R.shape[1] % 2 != 0:
        raise DimensionMismatch(f"rigidity matrix has invalid shape {R.shape}")
    n = (R.shape[1] - 2) // 2
    if R.shape[0] != 2 * n - 1:
        raise DimensionMismatch(
            f"rigidity matrix shape {R.shape} inconsistent: expected {2 * n - 1} rows for {n} agents"
        )
    M = R[:, : 2 * n]
    tail = R[:, 2 * n:]
    # row sum of M over agent blocks, i.e. M (1_N kron I_2)
    row_sum = M.reshape(R.shape[0], n, 2).sum(axis=1)
    residual = np.abs(tail + row_sum).max()
    if residual > DECOMPOSITION_TOL:
        raise DecompositionMismatch(
            f"target tail deviates from negated agent row sum by {residual:.3e}"
        )
    return RigidityDecomposition(R, M, tail)


def is_infinitesimally_rigid(
    coordinates: np.ndarray, graph: SensingGraph, tol: float = RANK_TOL
) -> tuple[bool, float]:
    """Numerical rank test of the rigidity matrix.

    Returns
    -------
    rigid : bool
        True when the numerical rank equals 2(N+1) - 3 = 2N - 1, the
        isostatic count for the target-inclusive framework.
    sigma_min : float
        Smallest of the first 2N-1 singular values, the margin the
        simulator monitors along trajectories.
    """
    R = rigidity_matrix(coordinates, graph)
    s = np.linalg.svd(R, compute_uv=False)
    required = 2 * graph.n_agents - 1
    rank = int(np.count_nonzero(s > tol * s[0])) if s[0] > 0 else 0
    return rank == required, float(s[required - 1])


def min_eigenvalue_MMt(M: np.ndarray) -> float:
    """Smallest eigenvalue of M M^T, clipped at zero against roundoff."""
    M = np.asarray(M, dtype=float)
    if M.ndim != 2:
        raise DimensionMismatch(f"expected a matrix, got shape {M.shape}")
    w = np.linalg.eigvalsh(M @ M.T)
    return float(max(w[0], 0.0))
