"""Acceptance criteria, runnable from pytest or the command line.

Each criterion produces one CriterionResult with a measured value, the
threshold it is judged against, and a one-line detail string. Expected
values are either frozen references or recomputed through independent
routes (finite differences, step-halving, randomized identities), never
read back from the code under test.

SIM_* environment overrides are honored on the reference run so that a
broken configuration produces failing criteria instead of a green table.
"""
from __future__ import annotations

import math
import os
from dataclasses import dataclass, replace as dc_replace
from pathlib import Path
from time import perf_counter

import numpy as np

from .control import (
    control_gains,
    desired_heading,
    evaluate_controls,
    settling_time_bound,
    u_dot,
    virtual_input,
    wrap_angle,
)
from .errors import ValidationError
from .formation import EdgeRanges, build_envelope, edge_errors
from .rigidity import (
    decompose,
    edge_function,
    formation_spec,
    henneberg_build,
    is_infinitesimally_rigid,
    min_eigenvalue_MMt,
    rigidity_matrix,
    stack_coordinates,
    unstack_coordinates,
)
from .scenario_io import apply_env_overrides, resolve_scenario, write_scenario
from .sim import (
    Scenario,
    build_kernel,
    metrics,
    monitor,
    run,
    scenario_envelope,
    state_vector,
    step,
    target_motion,
    world_state,
)
from .transform import (
    PerformanceFunction,
    TransformState,
    beta,
    sigma_dot_edge,
    sigma_edge,
    sigma_theta,
    zeta_dot_edge,
    zeta_edge,
)

GOLDEN_SCENARIO = "pentagon_sine"

# Frozen 4 dp references for the bundled formation: chords of 65, 75,
# 75, 80 degree arcs on a 5 m circle, then the radius five times over.
GOLDEN_DSTAR_4DP = np.array([5.3730, 6.0876, 6.0876, 6.4279, 5.0, 5.0, 5.0, 5.0, 5.0])

DSTAR_TOL = 5e-5
DSTAR_TIME_LIMIT = 1e-3
WALL_LIMIT = 10.0
EDGE_ERROR_TOL = 0.05
HEADING_TOL_DEG = 0.5
VELOCITY_TOL = 0.02
BARRIER_SLACK = 1e-6
ORDER_FLOOR = 3.5
RIGIDITY_CASES = 50
SWEEP_CASES = 50
RIGIDITY_SEED = 1723
SWEEP_SEED = 411

# The guarantees presuppose virtual inputs bounded away from zero; a
# candidate whose input norm dips under this floor breaches that
# hypothesis and is resampled, never judged. At dt = 1e-3 and input
# rates of a few m/s^2 the input moves ~0.003 per step, so below 0.05
# the desired heading can rotate tens of degrees within a single step.
INPUT_NORM_FLOOR = 0.05
SWEEP_CANDIDATE_CAP = 150


@dataclass(frozen=True)
class CriterionResult:
    name: str
    passed: bool
    measured: float
    threshold: float
    detail: str


def format_result(r: CriterionResult) -> str:
    word = "PASS" if r.passed else "FAIL"
    return f"{word} {r.name}: measured {r.measured:.6g} vs threshold {r.threshold:.6g} ({r.detail})"


@dataclass
class _GoldenRun:
    file_scenario: object
    run_scenario: object
    trace: object
    wall: float
    overrides: dict


class _Context:
    """Shared state across criteria: the reference run is computed once."""

    def __init__(self, environ=None, out_dir=None):
        self.environ = os.environ if environ is None else environ
        self.out_dir = None if out_dir is None else Path(out_dir)
        self._golden = None
        self._metrics = None

    def golden(self) -> _GoldenRun:
        if self._golden is None:
            file_scn = resolve_scenario(GOLDEN_SCENARIO)
            run_scn, overrides = apply_env_overrides(file_scn, self.environ)
            warm = dc_replace(run_scn, duration=abs(run_scn.dt) * 20, emit_plots=False)
            run(warm)  # compile the integration kernel outside the timed window
            t0 = perf_counter()
            trace = run(run_scn)
            wall = perf_counter() - t0
            self._golden = _GoldenRun(file_scn, run_scn, trace, wall, overrides)
        return self._golden

    def golden_metrics(self):
        if self._metrics is None:
            self._metrics = metrics(self.golden().trace)
        return self._metrics


def _crit_desired_distances(ctx: _Context) -> CriterionResult:
    best = math.inf
    spec = None
    for _ in range(7):
        t0 = perf_counter()
        spec = formation_spec(5.0, [65.0, 75.0, 75.0, 80.0])
        best = min(best, perf_counter() - t0)
    gap = float(np.max(np.abs(spec.desired_distances - GOLDEN_DSTAR_4DP)))
    passed = gap < DSTAR_TOL and best < DSTAR_TIME_LIMIT
    detail = (f"max deviation {gap:.2e} m from the 4 dp references, "
              f"construction {best * 1e6:.0f} us (limit {DSTAR_TIME_LIMIT * 1e3:.0f} ms)")
    return CriterionResult("desired_distances", passed, gap, DSTAR_TOL, detail)


def _crit_golden_run_clean(ctx: _Context) -> CriterionResult:
    g = ctx.golden()
    report = monitor(g.trace)
    worst = min(c.worst_margin for c in report.checks)
    passed = g.trace.completed and report.ok and g.wall < WALL_LIMIT
    detail = (f"{g.trace.n_records} records over {g.trace.t[-1]:.1f} s, "
              f"halt status {report.violation}, worst monitor margin {worst:.3g}, "
              f"wall {g.wall:.2f} s")
    if g.overrides:
        detail += f", overrides {g.overrides}"
    return CriterionResult("golden_run_clean", passed, g.wall, WALL_LIMIT, detail)


def _crit_heading_settling(ctx: _Context) -> CriterionResult:
    g = ctx.golden()
    m = ctx.golden_metrics()
    # the bound is pinned to the gains in the scenario file, so a gain
    # override has to beat the original budget to pass
    bound = float(np.max(settling_time_bound(g.file_scenario.gains.k_h1,
                                             g.file_scenario.gains.k_h2)))
    worst = float(np.max(m.heading_settling_times))
    passed = math.isfinite(worst) and worst <= bound
    detail = (f"all agents inside {HEADING_TOL_DEG} deg by {worst:.3f} s and staying, "
              f"gain-implied budget {bound:.4f} s")
    return CriterionResult("heading_settling", passed, worst, bound, detail)


def _crit_edge_error_convergence(ctx: _Context) -> CriterionResult:
    g = ctx.golden()
    m = ctx.golden_metrics()
    final = float(np.max(m.final_abs_edge_errors))
    funnel = monitor(g.trace).check("decayed_funnel")
    passed = final < EDGE_ERROR_TOL and funnel.ok and g.trace.completed
    detail = (f"max final |e| {final:.2e} m across {g.trace.e.shape[1]} edges, "
              f"shrinking funnels held at every logged step "
              f"(worst margin {funnel.worst_margin:.3g} m)")
    return CriterionResult("edge_error_convergence", passed, final, EDGE_ERROR_TOL, detail)


def _crit_velocity_tracking(ctx: _Context) -> CriterionResult:
    m = ctx.golden_metrics()
    worst = float(np.max(m.final_velocity_mismatch))
    passed = worst < VELOCITY_TOL and m.completed
    detail = f"max terminal speed mismatch {worst:.2e} m/s against the target velocity"
    return CriterionResult("velocity_tracking", passed, worst, VELOCITY_TOL, detail)


def _random_cycle_angles(rng, n: int) -> np.ndarray:
    """n angles in degrees summing to 360, each strictly inside (25, 155)."""
    while True:
        a = rng.dirichlet(np.full(n, 5.0)) * 360.0
        if np.all((a > 25.0) & (a < 155.0)):
            return a


def _random_given_angles(rng, n_agents: int) -> np.ndarray:
    if n_agents == 2:
        return np.array([float(rng.uniform(20.0, 160.0))])
    return _random_cycle_angles(rng, n_agents)[:-1]


def _fd_jacobian_gap(coordinates: np.ndarray, graph) -> float:
    """Central differences of the squared-distance map against 2 R."""
    y0 = stack_coordinates(coordinates)
    ref = 2.0 * rigidity_matrix(coordinates, graph)
    h = 1e-6
    worst = 0.0
    for m in range(y0.size):
        yp = y0.copy()
        yp[m] += h
        ym = y0.copy()
        ym[m] -= h
        col = (edge_function(unstack_coordinates(yp), graph)
               - edge_function(unstack_coordinates(ym), graph)) / (2.0 * h)
        worst = max(worst, float(np.max(np.abs(col - ref[:, m]))))
    return worst


def _crit_rigidity_suite(ctx: _Context) -> CriterionResult:
    rng = np.random.default_rng(RIGIDITY_SEED)
    worst_fd = 0.0
    worst_resid = 0.0
    min_eig = math.inf
    min_sing = math.inf
    bad = []
    for case in range(RIGIDITY_CASES):
        n = int(rng.integers(2, 11))
        fw = henneberg_build(float(rng.uniform(2.0, 8.0)), _random_given_angles(rng, n))
        R = rigidity_matrix(fw.coordinates, fw.graph)
        rigid, sing = is_infinitesimally_rigid(fw.coordinates, fw.graph)
        lam = min_eigenvalue_MMt(decompose(R).agent_block)
        v = rng.uniform(-1.0, 1.0, 2)
        resid = float(np.max(np.abs(R @ np.tile(v, fw.graph.n_vertices))))
        fd = _fd_jacobian_gap(fw.coordinates, fw.graph)
        ok = (fw.graph.n_edges == 2 * n - 1 and R.shape == (2 * n - 1, 2 * n + 2)
              and rigid and lam > 0.0 and resid < 1e-12 and fd < 1e-6)
        if not ok:
            bad.append(case)
        worst_fd = max(worst_fd, fd)
        worst_resid = max(worst_resid, resid)
        min_eig = min(min_eig, lam)
        min_sing = min(min_sing, sing)
    passed = not bad
    detail = (f"{RIGIDITY_CASES} random patterns with 2..10 agents: rank 2N-1 and "
              f"min singular value >= {min_sing:.3g} everywhere, agent-block min "
              f"eigenvalue >= {min_eig:.3g}, translation residual <= {worst_resid:.1e}, "
              f"derivative gap <= {worst_fd:.1e}")
    if bad:
        detail += f"; failing cases {bad}"
    return CriterionResult("rigidity_suite", passed, worst_fd, 1e-6, detail)


def _order_check_scenario(ctx: _Context):
    """Near-converged variant of the reference scenario for step halving.

    Agents start on the desired circle around the initial target, nudged
    in position and heading, so every guard stays far away even at the
    coarsest step. Heading offsets are one sided and the horizon is kept
    short: the steering law loses smoothness where a heading error hits
    zero, and a clean order measurement has to stay away from that point.
    """
    base = ctx.golden().file_scenario
    rng = np.random.default_rng(7)
    spec = base.spec
    n = spec.n_agents
    fw = henneberg_build(spec.radius, spec.separation_angles_deg[: n - 1])
    target0 = base.initial.target_position
    pos = fw.coordinates[1:] + target0 + rng.uniform(-0.08, 0.08, (n, 2))

    world0 = world_state(0.0, target0, np.column_stack([pos, np.zeros(n)]))
    rel = world0.vertex_coordinates
    e0 = edge_function(rel, spec.graph) ** 0.5 - spec.desired_distances
    env = build_envelope(spec, base.ranges, e0, base.mu, base.perf)
    errs = edge_errors(world0, spec, env, 0.0)
    b0, _ = beta(env.perf, 0.0)
    sig = sigma_edge(errs.xi, env.xi_lower, env.xi_upper)
    zet = zeta_edge(errs.xi, env.xi_lower, env.xi_upper, b0)
    u = virtual_input(world0, spec.graph, TransformState(sig, zet, np.zeros(n)),
                      base.gains, base.motion.velocity(0.0))
    theta = desired_heading(u) + rng.uniform(0.15, 0.25, n)
    initial = world_state(0.0, target0, np.column_stack([pos, theta]))
    return dc_replace(base, name="order_check", initial=initial, duration=0.32,
                      log_decimation=1, emit_plots=False)


def _terminal_state(scenario, dt: float) -> np.ndarray:
    scn = dc_replace(scenario, dt=dt)
    kern = build_kernel(scn, scenario_envelope(scn))
    y = state_vector(scn.initial)
    status, index, _ = kern.advance(0, y, round(scn.duration / dt))
    if status != 0:
        raise RuntimeError(f"guard {status} tripped at index {index} during the dt={dt} order run")
    return y


def _crit_derivative_oracles(ctx: _Context) -> CriterionResult:
    issues = []

    # barrier map slope against central differences over a bound grid
    worst_slope = 0.0
    for xi_up, xi_lo in ((1.0, 1.0), (2.5, 0.7), (0.3, 1.8)):
        grid = np.linspace(-0.85 * xi_lo, 0.85 * xi_up, 41)
        h = 1e-7 * (xi_up + xi_lo)
        fd = (sigma_edge(grid + h, xi_lo, xi_up) - sigma_edge(grid - h, xi_lo, xi_up)) / (2 * h)
        for b in (1.0, 0.4):
            closed = zeta_edge(grid, xi_lo, xi_up, b) * b
            rel = np.abs(fd - closed) / np.maximum(np.abs(closed), 1e-12)
            worst_slope = max(worst_slope, float(rel.max()))
    if worst_slope >= 1e-6:
        issues.append(f"barrier slope gap {worst_slope:.1e}")

    # barrier rate closed forms along an analytic squared-error path
    eta_lo, eta_up = 16.0, 56.0
    perf = PerformanceFunction(1.0, 0.15, 0.1)
    h = 1e-5
    worst_zrate = worst_srate = 0.0

    def path(tt: float) -> float:
        return 0.5 * eta_lo * math.sin(0.7 * tt) * math.exp(-0.3 * tt)

    def path_rate(tt: float) -> float:
        damp = math.exp(-0.3 * tt)
        return 0.5 * eta_lo * damp * (0.7 * math.cos(0.7 * tt) - 0.3 * math.sin(0.7 * tt))

    def zeta_at(tt: float) -> float:
        bv, _ = beta(perf, tt)
        return float(zeta_edge(path(tt) / bv, eta_lo, eta_up, bv))

    def sigma_at(tt: float) -> float:
        bv, _ = beta(perf, tt)
        return float(sigma_edge(path(tt) / bv, eta_lo, eta_up))

    for t in (0.3, 0.9, 1.7, 3.1, 5.0):
        bv, br = beta(perf, t)
        xi = path(t) / bv
        z_closed = float(zeta_dot_edge(xi, eta_lo, eta_up, bv, br, path_rate(t)))
        z_fd = (zeta_at(t + h) - zeta_at(t - h)) / (2 * h)
        worst_zrate = max(worst_zrate, abs(z_fd - z_closed) / max(1.0, abs(z_closed)))
        z0 = float(zeta_edge(xi, eta_lo, eta_up, bv))
        s_closed = float(sigma_dot_edge(z0, path_rate(t), br, xi))
        s_fd = (sigma_at(t + h) - sigma_at(t - h)) / (2 * h)
        worst_srate = max(worst_srate, abs(s_fd - s_closed) / max(1.0, abs(s_closed)))
    if worst_zrate >= 1e-6:
        issues.append(f"barrier rate gap {worst_zrate:.1e}")
    if worst_srate >= 1e-6:
        issues.append(f"transform rate gap {worst_srate:.1e}")

    # input and steering-direction rates along the reference trajectory
    g = ctx.golden()
    scn = g.run_scenario
    env = g.trace.envelope
    worst_input = 0.0
    for t_probe in (1.0, 2.0, 4.0):
        row = int(np.argmin(np.abs(g.trace.t - t_probe)))
        world = world_state(g.trace.t[row], g.trace.target[row], g.trace.poses[row])
        v0 = scn.motion.velocity(world.time)
        a0 = scn.motion.acceleration(world.time)
        _, transforms, rates, out = evaluate_controls(world, scn.spec, env, scn.gains, v0, a0)
        du = u_dot(world, scn.spec.graph, out.agent_velocities, transforms, rates,
                   scn.gains, v0, a0)
        ahead = step(world, dc_replace(scn, dt=h), env)
        behind = step(world, dc_replace(scn, dt=-h), env)
        _, _, _, out_a = evaluate_controls(ahead, scn.spec, env, scn.gains,
                                           scn.motion.velocity(ahead.time),
                                           scn.motion.acceleration(ahead.time))
        _, _, _, out_b = evaluate_controls(behind, scn.spec, env, scn.gains,
                                           scn.motion.velocity(behind.time),
                                           scn.motion.acceleration(behind.time))
        fd_u = (out_a.u - out_b.u) / (2 * h)
        gap_u = float(np.max(np.abs(fd_u - du))) / max(1.0, float(np.max(np.abs(du))))
        fd_td = wrap_angle(out_a.theta_d - out_b.theta_d) / (2 * h)
        gap_td = float(np.max(np.abs(fd_td - out.theta_d_rate))) / max(
            1.0, float(np.max(np.abs(out.theta_d_rate))))
        worst_input = max(worst_input, gap_u, gap_td)
    if worst_input >= 1e-3:
        issues.append(f"input rate gap {worst_input:.1e}")

    # integrator order by step halving against a fine reference
    order_scn = _order_check_scenario(ctx)
    y_ref = _terminal_state(order_scn, 3.125e-4)
    dts = np.array([0.04, 0.02, 0.01, 0.005])
    errs = []
    for dt in dts:
        y = _terminal_state(order_scn, float(dt))
        diff = y - y_ref
        diff[4::3] = wrap_angle(diff[4::3])
        errs.append(float(np.max(np.abs(diff))))
    slope = float(np.polyfit(np.log(dts), np.log(errs), 1)[0])
    if slope < ORDER_FLOOR:
        issues.append(f"observed order {slope:.2f}")

    passed = not issues
    detail = (f"observed order {slope:.2f}; worst gaps: barrier slope {worst_slope:.1e}, "
              f"barrier rate {worst_zrate:.1e}, transform rate {worst_srate:.1e}, "
              f"input rate {worst_input:.1e}")
    if issues:
        detail += "; failed: " + "; ".join(issues)
    return CriterionResult("derivative_oracles", passed, slope, ORDER_FLOOR, detail)


def _crit_barrier_decrease(ctx: _Context) -> CriterionResult:
    g = ctx.golden()
    tr = g.trace
    gains = g.run_scenario.gains
    sth, slope = sigma_theta(tr.e_theta, gains.heading_bound[None, :])
    V = 0.5 * sth**2
    vdot = sth * slope * (tr.w - tr.theta_d_rate)
    ceiling = -4.0 * gains.k_h1 * V**2 - 2.0**0.75 * gains.k_h2 * V**0.75
    gap = float(np.max(vdot - ceiling))
    passed = tr.completed and gap <= BARRIER_SLACK
    detail = (f"largest decrease deficit {gap:.3g} across {tr.n_records} records "
              f"and {tr.e_theta.shape[1]} agents (slack {BARRIER_SLACK:g})")
    return CriterionResult("barrier_decrease", passed, gap, BARRIER_SLACK, detail)


def _random_scenario(rng, index: int):
    """Feasible randomized scenario: perturbed pattern, bounded headings."""
    n = int(rng.integers(3, 7))
    given = _random_given_angles(rng, n)
    radius = float(rng.uniform(2.0, 8.0))
    spec = formation_spec(radius, given)
    dstar = spec.desired_distances
    ranges = EdgeRanges(0.15 * dstar, 2.2 * dstar)
    perf = PerformanceFunction(1.0, float(rng.uniform(0.1, 0.2)),
                               float(rng.uniform(0.1, 0.3))).broadcast(spec.graph.n_edges)
    gains = control_gains(spec.graph, 0.2, 0.5, 0.5, np.deg2rad(60.0))

    if rng.uniform() < 0.5:
        # speed floor keeps the converged input norm healthy: after the
        # errors die out the virtual input settles onto the target velocity
        speed = float(rng.uniform(0.15, 0.5))
        heading = float(rng.uniform(0.0, 2.0 * math.pi))
        motion = target_motion("constant",
                               {"vx": speed * math.cos(heading), "vy": speed * math.sin(heading)},
                               speed * 1.25 + 0.05)
    else:
        vx = float(rng.uniform(0.2, 0.8))
        amp = float(rng.uniform(0.2, 1.0))
        motion = target_motion(
            "sine_y",
            {"vx": vx, "vy_offset": 0.0, "amplitude": amp,
             "angular_frequency": float(rng.uniform(0.2, 1.0))},
            math.hypot(vx, amp) * 1.15 + 0.01)

    target0 = rng.uniform(-3.0, 3.0, 2)
    fw = henneberg_build(radius, given)
    ang = rng.uniform(0.0, 2.0 * math.pi)
    rot = np.array([[math.cos(ang), -math.sin(ang)], [math.sin(ang), math.cos(ang)]])
    base = fw.coordinates[1:] @ rot.T + target0
    pos = base
    for _ in range(100):
        trial = base + rng.uniform(-0.15 * radius, 0.15 * radius, base.shape)
        coords = np.vstack([target0[None, :], trial])
        d0 = edge_function(coords, spec.graph) ** 0.5
        if np.all(d0 > 1.3 * ranges.d_lower) and np.all(d0 < 0.8 * ranges.d_upper):
            pos = trial
            break

    world0 = world_state(0.0, target0, np.column_stack([pos, np.zeros(n)]))
    coords = world0.vertex_coordinates
    e0 = edge_function(coords, spec.graph) ** 0.5 - dstar
    env = build_envelope(spec, ranges, e0, 3.0, perf)
    errs = edge_errors(world0, spec, env, 0.0)
    b0, _ = beta(env.perf, 0.0)
    sig = sigma_edge(errs.xi, env.xi_lower, env.xi_upper)
    zet = zeta_edge(errs.xi, env.xi_lower, env.xi_upper, b0)
    u = virtual_input(world0, spec.graph, TransformState(sig, zet, np.zeros(n)),
                      gains, motion.velocity(0.0))
    theta = desired_heading(u) + rng.uniform(-0.6, 0.6, n) * gains.heading_bound
    initial = world_state(0.0, target0, np.column_stack([pos, theta]))

    return Scenario(name=f"sweep_{index:02d}", spec=spec, ranges=ranges, perf=perf,
                    gains=gains, mu=3.0, initial=initial, motion=motion,
                    duration=8.0, dt=1e-3, log_decimation=10)


def _min_input_norm(trace) -> float:
    norms = np.linalg.norm(trace.u, axis=2)
    return float(np.nanmin(norms)) if np.any(np.isfinite(norms)) else 0.0


def _crit_invariance_sweep(ctx: _Context) -> CriterionResult:
    """Constraint invariance across randomized scenarios.

    Candidates whose virtual input norm falls under INPUT_NORM_FLOOR are
    resampled: there the desired heading degenerates and the guarantees
    make no claim. The screen looks only at the input norm, never at
    whether a funnel was violated, so genuine counterexamples with
    healthy inputs always count and fail the criterion.
    """
    rng = np.random.default_rng(SWEEP_SEED)
    failures = []
    examined = 0
    screened = 0
    candidate = 0
    while examined < SWEEP_CASES and candidate < SWEEP_CANDIDATE_CAP:
        scn = _random_scenario(rng, candidate)
        candidate += 1
        trace = run(scn)
        if not trace.completed:
            # decide on a step-resolution replay: a dip between logged
            # records must not disguise a genuine violation, or vice versa
            replay = run(dc_replace(scn, log_decimation=1))
            if _min_input_norm(replay) < INPUT_NORM_FLOOR:
                screened += 1
                continue
            examined += 1
            failures.append((scn, monitor(trace)))
            continue
        if _min_input_norm(trace) < INPUT_NORM_FLOOR:
            screened += 1
            continue
        examined += 1
        report = monitor(trace)
        if not report.ok:
            failures.append((scn, report))
    if failures and ctx.out_dir is not None:
        ctx.out_dir.mkdir(parents=True, exist_ok=True)
        for scn, report in failures:
            write_scenario(scn, ctx.out_dir / f"counterexample_{scn.name}.yaml")
    passed = not failures and examined == SWEEP_CASES
    detail = (f"{examined} randomized feasible scenarios, 3..6 agents, 8 s horizons, "
              f"{screened} candidate(s) resampled for near-zero inputs: "
              f"{len(failures)} constraint violation(s)")
    if failures:
        names = ", ".join(f"{scn.name} ({rep.violation})" for scn, rep in failures)
        detail += f"; {names}"
        if ctx.out_dir is not None:
            detail += f"; archived under {ctx.out_dir}"
    return CriterionResult("invariance_sweep", passed, float(len(failures)), 0.0, detail)


CRITERIA = {
    "desired_distances": _crit_desired_distances,
    "golden_run_clean": _crit_golden_run_clean,
    "heading_settling": _crit_heading_settling,
    "edge_error_convergence": _crit_edge_error_convergence,
    "velocity_tracking": _crit_velocity_tracking,
    "rigidity_suite": _crit_rigidity_suite,
    "derivative_oracles": _crit_derivative_oracles,
    "barrier_decrease": _crit_barrier_decrease,
    "invariance_sweep": _crit_invariance_sweep,
}


def criterion_names() -> tuple[str, ...]:
    return tuple(CRITERIA)


def run_criteria(names=None, out_dir=None, environ=None) -> list[CriterionResult]:
    """Run the selected criteria (all by default), in their fixed order.

    A criterion that raises is reported as failed with the error in its
    detail line rather than aborting the remaining criteria.
    """
    if names:
        selected = [n for n in CRITERIA if any(pick in n for pick in names)]
        if not selected:
            raise ValidationError(
                f"no criterion matches {names!r}; available: {', '.join(CRITERIA)}")
    else:
        selected = list(CRITERIA)
    ctx = _Context(environ, out_dir)
    results = []
    for name in selected:
        try:
            results.append(CRITERIA[name](ctx))
        except Exception as exc:  # honest failure instead of a crashed table
            results.append(CriterionResult(name, False, math.nan, math.nan,
                                           f"raised {type(exc).__name__}: {exc}"))
    return results
