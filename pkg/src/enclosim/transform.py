"""Prescribed-performance transforms for edge and heading errors.

Each squared edge error eta is normalized by an exponentially decaying
performance function beta and mapped through a rational barrier that
blows up at the normalized bounds. Heading errors get the same
treatment with a static symmetric bound. All functions are elementwise
and accept scalars or arrays.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import OutOfBarrier

# Relative guard band: a normalized error within this fraction of its
# bound counts as "at the barrier" and raises instead of evaluating.
BARRIER_GUARD = 1e-12


@dataclass(frozen=True)
class PerformanceFunction:
    """Exponential funnel beta(t) = (beta0 - beta_inf) exp(-gamma t) + beta_inf.

    Fields may be scalars or per-edge arrays (one triple per edge).
    Requires beta0 >= beta_inf > 0 and gamma > 0 elementwise.
    """

    beta0: np.ndarray
    beta_inf: np.ndarray
    gamma: np.ndarray

    def __post_init__(self):
        for name in ("beta0", "beta_inf", "gamma"):
            object.__setattr__(self, name, np.asarray(getattr(self, name), dtype=float))
        if not np.all(self.beta_inf > 0):
            raise ValueError("beta_inf must be positive")
        if not np.all(self.beta0 >= self.beta_inf):
            raise ValueError("beta0 must not fall below beta_inf")
        if not np.all(self.gamma > 0):
            raise ValueError("gamma must be positive")

    def broadcast(self, n: int) -> "PerformanceFunction":
        """Expand scalar triples to n edges; per-edge triples pass through."""
        return PerformanceFunction(
            np.broadcast_to(self.beta0, (n,)).copy(),
            np.broadcast_to(self.beta_inf, (n,)).copy(),
            np.broadcast_to(self.gamma, (n,)).copy(),
        )


def beta(perf: PerformanceFunction, t) -> tuple[np.ndarray, np.ndarray]:
    """Performance function value and time derivative at t.

    Broadcasting applies: per-edge parameter arrays with a scalar t give
    per-edge values, a column of times gives a (T, E) grid.
    """
    t = np.asarray(t, dtype=float)
    decay = (perf.beta0 - perf.beta_inf) * np.exp(-perf.gamma * t)
    return perf.beta_inf + decay, -perf.gamma * decay


def _barrier_check(kind: str, value, lower, upper):
    """Raise OutOfBarrier when value is within the guard band of a bound."""
    v, lo, up = np.broadcast_arrays(np.asarray(value, float), np.asarray(lower, float),
                                    np.asarray(upper, float))
    bad_up = v >= up * (1.0 - BARRIER_GUARD)
    bad_lo = v <= -lo * (1.0 - BARRIER_GUARD)
    bad = bad_up | bad_lo | ~np.isfinite(v)
    if np.any(bad):
        idx = int(np.argmax(bad.ravel()))
        vv = v.ravel()[idx]
        bb = up.ravel()[idx] if bad_up.ravel()[idx] else -lo.ravel()[idx]
        raise OutOfBarrier(kind, idx, float(vv), float(bb))


def sigma_edge(xi, xi_lower, xi_upper) -> np.ndarray:
    """Barrier transform of a normalized edge error.

    sigma = xi_up xi_lo xi / ((xi_up - xi)(xi_lo + xi)), strictly
    increasing on (-xi_lo, xi_up), zero at zero, unbounded at either
    end. Raises OutOfBarrier at or beyond a bound.
    """
    _barrier_check("edge", xi, xi_lower, xi_upper)
    xi = np.asarray(xi, dtype=float)
    return xi_upper * xi_lower * xi / ((xi_upper - xi) * (xi_lower + xi))


def zeta_edge(xi, xi_lower, xi_upper, beta_value) -> np.ndarray:
    """Barrier slope factor, dsigma/dxi scaled by 1/beta. Always positive."""
    _barrier_check("edge", xi, xi_lower, xi_upper)
    xi = np.asarray(xi, dtype=float)
    du = xi_upper - xi
    dl = xi_lower + xi
    prod = xi_upper * xi_lower
    return prod * (prod + xi * xi) / (du * du * dl * dl) / beta_value


def zeta_dot_edge(xi, xi_lower, xi_upper, beta_value, beta_rate, eta_rate) -> np.ndarray:
    """Time derivative of the slope factor along a trajectory.

    Uses the closed form with the second barrier derivative; eta_rate is
    the time derivative of the squared edge error and beta_value,
    beta_rate the performance function and its derivative at the same
    instant.
    """
    _barrier_check("edge", xi, xi_lower, xi_upper)
    xi = np.asarray(xi, dtype=float)
    du = xi_upper - xi
    dl = xi_lower + xi
    prod = xi_upper * xi_lower
    g = prod * (prod + xi * xi) / (du * du * dl * dl)
    # d/dxi of the numerator chain: 2 xu xl (xi^3 + 3 xu xl xi - xu^2 xl + xu xl^2)
    g_slope = 2.0 * prod * (xi**3 + 3.0 * prod * xi - prod * (xi_upper - xi_lower)) / (du**3 * dl**3)
    return (g_slope * (eta_rate - beta_rate * xi) - g * beta_rate) / (beta_value * beta_value)


def sigma_dot_edge(zeta, eta_rate, beta_rate, xi) -> np.ndarray:
    """Time derivative of the edge barrier value: zeta (eta_rate - beta_rate xi)."""
    return np.asarray(zeta, float) * (np.asarray(eta_rate, float) - np.asarray(beta_rate, float) * np.asarray(xi, float))


def sigma_theta(e_theta, bound) -> tuple[np.ndarray, np.ndarray]:
    """Barrier transform of a heading error with symmetric static bound.

    Returns the transformed value b^2 e / (b^2 - e^2) and its slope
    (b^4 + b^2 e^2) / (b^2 - e^2)^2 with respect to the heading error.
    Raises OutOfBarrier when |e_theta| reaches the bound.
    """
    _barrier_check("heading", e_theta, bound, bound)
    e = np.asarray(e_theta, dtype=float)
    b2 = np.asarray(bound, dtype=float) ** 2
    den = b2 - e * e
    return b2 * e / den, (b2 * b2 + b2 * e * e) / (den * den)


@dataclass(frozen=True)
class TransformState:
    """Transformed errors at one instant: per-edge sigma and zeta, per-agent sigma_theta."""

    sigma: np.ndarray
    zeta: np.ndarray
    sigma_theta: np.ndarray


@dataclass(frozen=True)
class TransformRates:
    """Per-edge time derivatives of the transform quantities."""

    zeta_dot: np.ndarray
    sigma_dot: np.ndarray
