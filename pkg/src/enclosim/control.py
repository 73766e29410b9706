"""Enclosing controller: virtual planar input and its unicycle realization.

Every agent steers a virtual single-integrator input assembled from its
barrier-transformed edge errors plus the target velocity feedforward.
The unicycle tracks that input through a desired heading, a linear
velocity scaled by the heading mismatch, and an angular velocity with a
barrier term and a fractional-power term giving fixed-time alignment.
"""
from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .errors import DimensionMismatch, SingularityGuard
from .formation import ConstraintEnvelope, EdgeErrors, edge_errors
from .rigidity import FormationSpec, SensingGraph, canonical_edges, edge_vectors
from .transform import (
    TransformRates,
    TransformState,
    beta,
    sigma_edge,
    sigma_theta,
    sigma_dot_edge,
    zeta_dot_edge,
    zeta_edge,
)

# Below this input magnitude the desired heading is left at zero rather
# than read off a vanishing vector.
EPS_U = 1e-9

# Linear velocity is refused this close to a 90 degree heading error.
SINGULARITY_MARGIN = 1e-6


@dataclass(frozen=True)
class ControlGains:
    """Per-edge and per-agent gains plus the heading error bound (radians)."""

    k_edge: np.ndarray        # (E,)
    k_h1: np.ndarray          # (N,)
    k_h2: np.ndarray          # (N,)
    heading_bound: np.ndarray  # (N,), each in (0, pi/2)


def control_gains(graph: SensingGraph, k_edge, k_h1, k_h2, heading_bound) -> ControlGains:
    """Broadcast scalars to the graph sizes and validate positivity."""
    ke = np.broadcast_to(np.asarray(k_edge, float), (graph.n_edges,)).copy()
    h1 = np.broadcast_to(np.asarray(k_h1, float), (graph.n_agents,)).copy()
    h2 = np.broadcast_to(np.asarray(k_h2, float), (graph.n_agents,)).copy()
    hb = np.broadcast_to(np.asarray(heading_bound, float), (graph.n_agents,)).copy()
    if not (np.all(ke > 0) and np.all(h1 > 0) and np.all(h2 > 0)):
        raise ValueError("gains must be strictly positive")
    if not np.all((hb > 0) & (hb < np.pi / 2)):
        raise ValueError("heading bound must lie strictly inside (0, pi/2) radians")
    return ControlGains(ke, h1, h2, hb)


@lru_cache(maxsize=None)
def _assembly(n_agents: int) -> np.ndarray:
    """Signed edge-to-agent assembly: row i collects -p_ij terms of agent i+1."""
    edges = canonical_edges(n_agents)
    B = np.zeros((n_agents, len(edges)))
    for k, (i, j) in enumerate(edges):
        B[i - 1, k] = -1.0
        if j > 0:
            B[j - 1, k] = 1.0
    B.setflags(write=False)
    return B


def virtual_input(world, graph: SensingGraph, transforms: TransformState,
                  gains: ControlGains, target_velocity) -> np.ndarray:
    """Per-agent planar input: barrier-weighted edge sums plus feedforward.

    u_i = - sum over neighbors of p_ij zeta_ij k_ij sigma_ij, with the
    target treated as one more neighbor, plus the target velocity.
    """
    rel = edge_vectors(world.vertex_coordinates, graph)
    w = transforms.zeta * gains.k_edge * transforms.sigma
    u = _assembly(graph.n_agents) @ (rel * w[:, None])
    return u + np.asarray(target_velocity, float)


def desired_heading(u: np.ndarray) -> np.ndarray:
    """Direction of the virtual input; zero where the input vanishes."""
    u = np.atleast_2d(np.asarray(u, float))
    norm2 = np.einsum("id,id->i", u, u)
    return np.where(norm2 > EPS_U * EPS_U, np.arctan2(u[:, 1], u[:, 0]), 0.0)


def wrap_angle(x) -> np.ndarray:
    """Wrap to the half-open interval (-pi, pi]."""
    x = np.asarray(x, dtype=float)
    return np.pi - (np.pi - x) % (2.0 * np.pi)


def heading_error(theta, theta_desired) -> np.ndarray:
    """Wrapped difference between actual and desired headings."""
    return wrap_angle(np.asarray(theta, float) - np.asarray(theta_desired, float))


def linear_velocity(u: np.ndarray, e_theta) -> np.ndarray:
    """Forward speed |u| / cos(e_theta); guarded near 90 degrees."""
    e = np.asarray(e_theta, dtype=float)
    near = np.abs(e) >= np.pi / 2 - SINGULARITY_MARGIN
    if np.any(near):
        i = int(np.argmax(near))
        raise SingularityGuard(f"agent {i}: heading error {e.ravel()[i]:.6f} rad too close to pi/2")
    u = np.atleast_2d(np.asarray(u, float))
    return np.linalg.norm(u, axis=1) / np.cos(e)


def eta_dot_edges(world, graph: SensingGraph, agent_velocities, target_velocity) -> np.ndarray:
    """Time derivative of squared distances: 2 p_ij . (pdot_i - pdot_j)."""
    rel = edge_vectors(world.vertex_coordinates, graph)
    vel = np.vstack([np.asarray(target_velocity, float)[None, :],
                     np.asarray(agent_velocities, float)])
    idx = np.asarray(graph.edges)
    veldiff = vel[idx[:, 0]] - vel[idx[:, 1]]
    return 2.0 * np.einsum("kd,kd->k", rel, veldiff)


def u_dot(world, graph: SensingGraph, agent_velocities, transforms: TransformState,
          rates: TransformRates, gains: ControlGains, target_velocity,
          target_acceleration) -> np.ndarray:
    """Time derivative of the virtual input along the current motion.

    Differentiates each edge term by the product rule: moving relative
    positions, the drifting slope factor, and the moving barrier value,
    plus the target acceleration feedforward.
    """
    rel = edge_vectors(world.vertex_coordinates, graph)
    vel = np.vstack([np.asarray(target_velocity, float)[None, :],
                     np.asarray(agent_velocities, float)])
    idx = np.asarray(graph.edges)
    veldiff = vel[idx[:, 0]] - vel[idx[:, 1]]
    w_static = transforms.zeta * gains.k_edge * transforms.sigma
    w_moving = gains.k_edge * (rates.zeta_dot * transforms.sigma + transforms.zeta * rates.sigma_dot)
    contrib = veldiff * w_static[:, None] + rel * w_moving[:, None]
    return _assembly(graph.n_agents) @ contrib + np.asarray(target_acceleration, float)


def theta_d_dot(u: np.ndarray, u_rate: np.ndarray) -> np.ndarray:
    """Rotation rate of the input direction: (u x udot) / |u|^2, zero for tiny u."""
    u = np.atleast_2d(np.asarray(u, float))
    ur = np.atleast_2d(np.asarray(u_rate, float))
    norm2 = np.einsum("id,id->i", u, u)
    live = norm2 > EPS_U * EPS_U
    cross = u[:, 0] * ur[:, 1] - u[:, 1] * ur[:, 0]
    return np.where(live, cross / np.where(live, norm2, 1.0), 0.0)


def _signed_sqrt(x: np.ndarray) -> np.ndarray:
    return np.sqrt(np.abs(x)) * np.sign(x)


def angular_velocity(e_theta, gains: ControlGains, theta_d_rate) -> np.ndarray:
    """Turn rate: barrier term, fractional-power term, and direction feedforward.

    w = -k_h1 b^2 sigma_theta
        - k_h2 ((b^2 - e^2) / b^2)^2 sqrt(|sigma_theta|) sign(sigma_theta)
        + theta_d_rate
    """
    e = np.asarray(e_theta, dtype=float)
    sth, _ = sigma_theta(e, gains.heading_bound)
    b2 = gains.heading_bound**2
    shrink = (b2 - e * e) / b2
    return -gains.k_h1 * b2 * sth - gains.k_h2 * shrink**2 * _signed_sqrt(sth) + np.asarray(theta_d_rate, float)


def settling_time_bound(k_h1, k_h2):
    """Fixed-time bound on heading alignment: 1/(4 k_h1) + 4/(2^(3/4) k_h2).

    Nonpositive gains give an infinite bound.
    """
    h1 = np.asarray(k_h1, dtype=float)
    h2 = np.asarray(k_h2, dtype=float)
    with np.errstate(divide="ignore"):
        t1 = np.where(h1 > 0, 1.0 / (4.0 * h1), np.inf)
        t2 = np.where(h2 > 0, 4.0 / (2.0**0.75 * h2), np.inf)
    out = t1 + t2
    return float(out) if out.ndim == 0 else out


@dataclass(frozen=True)
class ControlOutput:
    """Everything the controller produces for one instant."""

    u: np.ndarray                 # (N, 2) virtual input
    theta_d: np.ndarray           # (N,) desired headings
    e_theta: np.ndarray           # (N,) wrapped heading errors
    v: np.ndarray                 # (N,) linear velocities
    w: np.ndarray                 # (N,) angular velocities
    theta_d_rate: np.ndarray      # (N,) desired heading rates
    agent_velocities: np.ndarray  # (N, 2) realized planar velocities


def evaluate_controls(world, spec: FormationSpec, envelope: ConstraintEnvelope,
                      gains: ControlGains, target_velocity, target_acceleration,
                      ) -> tuple[EdgeErrors, TransformState, TransformRates, ControlOutput]:
    """Full control pipeline at one world state.

    Order: edge errors and barrier transforms, virtual inputs, heading
    quantities and linear velocities, realized planar velocities, then
    the transform rates that feed the input derivative and finally the
    angular velocities. Neighbor velocities enter exactly (each agent is
    granted its neighbors' realized velocities).
    """
    graph = spec.graph
    t = world.time
    errs = edge_errors(world, spec, envelope, t)
    b, b_rate = beta(envelope.perf, t)
    sig = sigma_edge(errs.xi, envelope.xi_lower, envelope.xi_upper)
    zet = zeta_edge(errs.xi, envelope.xi_lower, envelope.xi_upper, b)

    v0 = np.asarray(target_velocity, dtype=float)
    a0 = np.asarray(target_acceleration, dtype=float)
    partial = TransformState(sig, zet, np.zeros(graph.n_agents))
    u = virtual_input(world, graph, partial, gains, v0)
    th_d = desired_heading(u)
    e_th = heading_error(world.headings, th_d)
    sth, _ = sigma_theta(e_th, gains.heading_bound)
    transforms = TransformState(sig, zet, sth)
    v = linear_velocity(u, e_th)
    pdot = v[:, None] * np.column_stack([np.cos(world.headings), np.sin(world.headings)])

    eta_rate = eta_dot_edges(world, graph, pdot, v0)
    z_rate = zeta_dot_edge(errs.xi, envelope.xi_lower, envelope.xi_upper, b, b_rate, eta_rate)
    s_rate = sigma_dot_edge(zet, eta_rate, b_rate, errs.xi)
    rates = TransformRates(z_rate, s_rate)
    du = u_dot(world, graph, pdot, transforms, rates, gains, v0, a0)
    tdd = theta_d_dot(u, du)
    w = angular_velocity(e_th, gains, tdd)
    out = ControlOutput(u, th_d, e_th, v, w, tdd, pdot)
    return errs, transforms, rates, out
