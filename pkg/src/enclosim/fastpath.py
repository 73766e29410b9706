"""Compiled inner loop for the integrator.

Mirrors the numpy control pipeline exactly (same formulas, float64) so
the readable path in :mod:`control` stays the reference; an equivalence
test pins the two together. Functions here avoid allocation in the hot
loop and report guard trips as status codes instead of exceptions.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from numba import njit

OK = 0
EDGE_BARRIER = 1
HEADING_BARRIER = 2
SINGULARITY = 3

MODEL_CONSTANT = 0
MODEL_SINE_Y = 1
MODEL_CIRCULAR = 2

# Literal copies of the guard constants; a test asserts they match the
# values in transform.py / control.py so the compiled cache can never
# drift from the reference path.
_GUARD = 1e-12
_EPS_U = 1e-9
_SING_MARGIN = 1e-6


@njit(cache=True)
def _target_velocity(model, par, t):
    if model == MODEL_SINE_Y:
        return par[0], par[1] + par[2] * np.cos(par[3] * t)
    if model == MODEL_CIRCULAR:
        return par[0] * np.cos(par[1] * t + par[2]), par[0] * np.sin(par[1] * t + par[2])
    return par[0], par[1]


@njit(cache=True)
def _target_acceleration(model, par, t):
    if model == MODEL_SINE_Y:
        return 0.0, -par[2] * par[3] * np.sin(par[3] * t)
    if model == MODEL_CIRCULAR:
        return -par[0] * par[1] * np.sin(par[1] * t + par[2]), par[0] * par[1] * np.cos(par[1] * t + par[2])
    return 0.0, 0.0


@njit(cache=True)
def _rhs(t, y, out, I, J, dstar2, b0, binf, gam, xiu, xil, ke, kh1, kh2, ebar, model, mpar):
    """State derivative; returns (status, offending index)."""
    n = (y.shape[0] - 2) // 3
    m = I.shape[0]
    v0x, v0y = _target_velocity(model, mpar, t)
    a0x, a0y = _target_acceleration(model, mpar, t)
    qx = y[0]
    qy = y[1]

    relx = np.empty(m)
    rely = np.empty(m)
    xi = np.empty(m)
    bet = np.empty(m)
    betd = np.empty(m)
    sig = np.empty(m)
    zet = np.empty(m)
    for k in range(m):
        i = I[k]
        j = J[k]
        ax = y[2 + 3 * (i - 1)]
        ay = y[3 + 3 * (i - 1)]
        if j == 0:
            bx = qx
            by = qy
        else:
            bx = y[2 + 3 * (j - 1)]
            by = y[3 + 3 * (j - 1)]
        rx = ax - bx
        ry = ay - by
        relx[k] = rx
        rely[k] = ry
        eta = rx * rx + ry * ry - dstar2[k]
        decay = (b0[k] - binf[k]) * np.exp(-gam[k] * t)
        b = binf[k] + decay
        bet[k] = b
        betd[k] = -gam[k] * decay
        x = eta / b
        xi[k] = x
        if not np.isfinite(x) or x >= xiu[k] * (1.0 - _GUARD) or x <= -xil[k] * (1.0 - _GUARD):
            return EDGE_BARRIER, k
        du = xiu[k] - x
        dl = xil[k] + x
        prod = xiu[k] * xil[k]
        sig[k] = prod * x / (du * dl)
        zet[k] = prod * (prod + x * x) / (du * du * dl * dl) / b

    ux = np.empty(n)
    uy = np.empty(n)
    for i in range(n):
        ux[i] = v0x
        uy[i] = v0y
    for k in range(m):
        wk = zet[k] * ke[k] * sig[k]
        i = I[k] - 1
        ux[i] -= relx[k] * wk
        uy[i] -= rely[k] * wk
        j = J[k]
        if j > 0:
            ux[j - 1] += relx[k] * wk
            uy[j - 1] += rely[k] * wk

    thd = np.empty(n)
    eth = np.empty(n)
    for i in range(n):
        un2 = ux[i] * ux[i] + uy[i] * uy[i]
        if un2 > _EPS_U * _EPS_U:
            td = np.arctan2(uy[i], ux[i])
        else:
            td = 0.0
        thd[i] = td
        et = np.pi - (np.pi - (y[4 + 3 * i] - td)) % (2.0 * np.pi)
        eth[i] = et
        if not np.isfinite(et) or abs(et) >= ebar[i] * (1.0 - _GUARD):
            return HEADING_BARRIER, i
    pdx = np.empty(n)
    pdy = np.empty(n)
    for i in range(n):
        if abs(eth[i]) >= np.pi / 2 - _SING_MARGIN:
            return SINGULARITY, i
        th = y[4 + 3 * i]
        v = np.sqrt(ux[i] * ux[i] + uy[i] * uy[i]) / np.cos(eth[i])
        pdx[i] = v * np.cos(th)
        pdy[i] = v * np.sin(th)

    udx = np.empty(n)
    udy = np.empty(n)
    for i in range(n):
        udx[i] = a0x
        udy[i] = a0y
    for k in range(m):
        i = I[k] - 1
        j = J[k]
        if j == 0:
            vdx = pdx[i] - v0x
            vdy = pdy[i] - v0y
        else:
            vdx = pdx[i] - pdx[j - 1]
            vdy = pdy[i] - pdy[j - 1]
        etad = 2.0 * (relx[k] * vdx + rely[k] * vdy)
        x = xi[k]
        du = xiu[k] - x
        dl = xil[k] + x
        prod = xiu[k] * xil[k]
        g = prod * (prod + x * x) / (du * du * dl * dl)
        g_slope = 2.0 * prod * (x**3 + 3.0 * prod * x - prod * (xiu[k] - xil[k])) / (du**3 * dl**3)
        zetd = (g_slope * (etad - betd[k] * x) - g * betd[k]) / (bet[k] * bet[k])
        sigd = zet[k] * (etad - betd[k] * x)
        w_static = zet[k] * ke[k] * sig[k]
        w_moving = ke[k] * (zetd * sig[k] + zet[k] * sigd)
        cx = vdx * w_static + relx[k] * w_moving
        cy = vdy * w_static + rely[k] * w_moving
        udx[i] -= cx
        udy[i] -= cy
        if j > 0:
            udx[j - 1] += cx
            udy[j - 1] += cy

    out[0] = v0x
    out[1] = v0y
    for i in range(n):
        un2 = ux[i] * ux[i] + uy[i] * uy[i]
        if un2 > _EPS_U * _EPS_U:
            tdd = (ux[i] * udy[i] - uy[i] * udx[i]) / un2
        else:
            tdd = 0.0
        e = eth[i]
        b2 = ebar[i] * ebar[i]
        den = b2 - e * e
        sth = b2 * e / den
        root = np.sqrt(abs(sth))
        if sth < 0.0:
            root = -root
        w = -kh1[i] * b2 * sth - kh2[i] * (den / b2) ** 2 * root + tdd
        out[2 + 3 * i] = pdx[i]
        out[3 + 3 * i] = pdy[i]
        out[4 + 3 * i] = w
    return OK, -1


@njit(cache=True)
def _advance(base_step, dt, n_steps, y, I, J, dstar2, b0, binf, gam, xiu, xil,
             ke, kh1, kh2, ebar, model, mpar):
    """Run n_steps classical fourth-order steps in place.

    Times come from the step counter (t = step * dt) so long runs do not
    accumulate drift. Headings are wrapped to (-pi, pi] after each
    accepted step. Returns (status, offending index, steps completed);
    on a guard trip y holds the last accepted state.
    """
    dim = y.shape[0]
    k1 = np.empty(dim)
    k2 = np.empty(dim)
    k3 = np.empty(dim)
    k4 = np.empty(dim)
    ytmp = np.empty(dim)
    n_agents = (dim - 2) // 3
    for s in range(n_steps):
        t = (base_step + s) * dt
        st, idx = _rhs(t, y, k1, I, J, dstar2, b0, binf, gam, xiu, xil, ke, kh1, kh2, ebar, model, mpar)
        if st != OK:
            return st, idx, s
        for q in range(dim):
            ytmp[q] = y[q] + 0.5 * dt * k1[q]
        st, idx = _rhs(t + 0.5 * dt, ytmp, k2, I, J, dstar2, b0, binf, gam, xiu, xil, ke, kh1, kh2, ebar, model, mpar)
        if st != OK:
            return st, idx, s
        for q in range(dim):
            ytmp[q] = y[q] + 0.5 * dt * k2[q]
        st, idx = _rhs(t + 0.5 * dt, ytmp, k3, I, J, dstar2, b0, binf, gam, xiu, xil, ke, kh1, kh2, ebar, model, mpar)
        if st != OK:
            return st, idx, s
        for q in range(dim):
            ytmp[q] = y[q] + dt * k3[q]
        st, idx = _rhs(t + dt, ytmp, k4, I, J, dstar2, b0, binf, gam, xiu, xil, ke, kh1, kh2, ebar, model, mpar)
        if st != OK:
            return st, idx, s
        for q in range(dim):
            y[q] = y[q] + dt / 6.0 * (k1[q] + 2.0 * k2[q] + 2.0 * k3[q] + k4[q])
        for i in range(n_agents):
            y[4 + 3 * i] = np.pi - (np.pi - y[4 + 3 * i]) % (2.0 * np.pi)
    return OK, -1, n_steps


@dataclass
class Kernel:
    """Packed scenario constants bound to the compiled loop."""

    edge_i: np.ndarray
    edge_j: np.ndarray
    dstar2: np.ndarray
    beta0: np.ndarray
    beta_inf: np.ndarray
    gamma: np.ndarray
    xi_upper: np.ndarray
    xi_lower: np.ndarray
    k_edge: np.ndarray
    k_h1: np.ndarray
    k_h2: np.ndarray
    heading_bound: np.ndarray
    model: int
    model_params: np.ndarray
    dt: float

    def _args(self):
        return (self.edge_i, self.edge_j, self.dstar2, self.beta0, self.beta_inf,
                self.gamma, self.xi_upper, self.xi_lower, self.k_edge, self.k_h1,
                self.k_h2, self.heading_bound, self.model, self.model_params)

    def rhs(self, t: float, y: np.ndarray) -> tuple[int, int, np.ndarray]:
        """Single derivative evaluation; returns (status, index, ydot)."""
        out = np.empty_like(y)
        st, idx = _rhs(float(t), np.asarray(y, float), out, *self._args())
        return st, idx, out

    def advance(self, base_step: int, y: np.ndarray, n_steps: int) -> tuple[int, int, int]:
        """Integrate n_steps in place from t = base_step * dt."""
        return _advance(int(base_step), self.dt, int(n_steps), y, *self._args())


def target_velocity(model: int, params: np.ndarray, t: float) -> np.ndarray:
    vx, vy = _target_velocity(model, params, float(t))
    return np.array([vx, vy])


def target_acceleration(model: int, params: np.ndarray, t: float) -> np.ndarray:
    ax, ay = _target_acceleration(model, params, float(t))
    return np.array([ax, ay])
