"""World state, scenarios, and the fixed-step integration harness.

The integrator is classical fourth order with the controller
re-evaluated at every internal stage. Guard trips (a barrier reached, a
heading singularity) are findings, not crashes: the run halts, the final
record carries the status flag, and the trace up to that point survives
for the monitor and the plots.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np

from . import fastpath
from .control import (
    ControlGains,
    evaluate_controls,
    settling_time_bound,
)
from .errors import (
    DimensionMismatch,
    InitialConditionViolation,
    OutOfBarrier,
    SingularityGuard,
    ValidationError,
)
from .formation import (
    ConstraintEnvelope,
    EdgeRanges,
    build_envelope,
    edge_errors,
    time_varying_error_bounds,
)
from .rigidity import (
    FormationSpec,
    edge_vectors,
    henneberg_build,
    is_infinitesimally_rigid,
    rigidity_matrix,
)
from .transform import PerformanceFunction

# The rigidity margin must stay above this fraction of the largest
# singular value of the desired framework's rigidity matrix.
RIGIDITY_FLOOR_REL = 1e-6

# Status codes shared with the compiled loop.
VIOLATION_NAMES = {
    fastpath.OK: "none",
    fastpath.EDGE_BARRIER: "edge_barrier",
    fastpath.HEADING_BARRIER: "heading_barrier",
    fastpath.SINGULARITY: "heading_singularity",
}

_MODEL_IDS = {
    "constant": fastpath.MODEL_CONSTANT,
    "sine_y": fastpath.MODEL_SINE_Y,
    "circular": fastpath.MODEL_CIRCULAR,
}

# Required parameter names per target motion model, in packing order.
TARGET_MODELS = {
    "constant": ("vx", "vy"),
    "sine_y": ("vx", "vy_offset", "amplitude", "angular_frequency"),
    "circular": ("speed", "angular_frequency", "phase"),
}


@dataclass(frozen=True)
class TargetMotion:
    """Named analytic target velocity model with its derivative and a speed bound."""

    model: str
    params: dict
    speed_bound: float

    def _packed(self) -> tuple[int, np.ndarray]:
        order = TARGET_MODELS[self.model]
        return _MODEL_IDS[self.model], np.array([float(self.params[k]) for k in order])

    def velocity(self, t) -> np.ndarray:
        """Target velocity at time t; scalar t gives (2,), 1-D t gives (T, 2)."""
        t = np.asarray(t, dtype=float)
        mid, par = self._packed()
        if t.ndim == 0:
            return fastpath.target_velocity(mid, par, float(t))
        return np.stack([fastpath.target_velocity(mid, par, float(tk)) for tk in t])

    def acceleration(self, t) -> np.ndarray:
        t = np.asarray(t, dtype=float)
        mid, par = self._packed()
        if t.ndim == 0:
            return fastpath.target_acceleration(mid, par, float(t))
        return np.stack([fastpath.target_acceleration(mid, par, float(tk)) for tk in t])


def target_motion(model: str, params: dict, speed_bound: float) -> TargetMotion:
    """Validate the model name, its parameter set, and the speed bound."""
    if model not in TARGET_MODELS:
        raise ValidationError(f"unknown target motion model {model!r}, known: {sorted(TARGET_MODELS)}")
    required = set(TARGET_MODELS[model])
    given = set(params)
    if given != required:
        raise ValidationError(
            f"target motion {model!r} needs parameters {sorted(required)}, got {sorted(given)}")
    if not speed_bound > 0:
        raise ValidationError(f"target speed bound must be positive, got {speed_bound}")
    return TargetMotion(model, {k: float(v) for k, v in params.items()}, float(speed_bound))


@dataclass(frozen=True)
class WorldState:
    """Snapshot of the world: time, target position, agent poses (x, y, heading)."""

    time: float
    target_position: np.ndarray  # (2,)
    agent_states: np.ndarray     # (N, 3), headings in radians

    @property
    def n_agents(self) -> int:
        return self.agent_states.shape[0]

    @property
    def agent_positions(self) -> np.ndarray:
        return self.agent_states[:, :2]

    @property
    def headings(self) -> np.ndarray:
        return self.agent_states[:, 2]

    @property
    def vertex_coordinates(self) -> np.ndarray:
        """Vertex-indexed positions, target in row 0."""
        return np.vstack([self.target_position[None, :], self.agent_states[:, :2]])


def world_state(time: float, target_position, agent_states) -> WorldState:
    target = np.asarray(target_position, dtype=float)
    agents = np.asarray(agent_states, dtype=float)
    if target.shape != (2,):
        raise DimensionMismatch(f"target position must have shape (2,), got {target.shape}")
    if agents.ndim != 2 or agents.shape[1] != 3:
        raise DimensionMismatch(f"agent states must have shape (N, 3), got {agents.shape}")
    return WorldState(float(time), target, agents)


@dataclass(frozen=True)
class Scenario:
    """Complete deterministic description of one simulation."""

    name: str
    spec: FormationSpec
    ranges: EdgeRanges
    perf: PerformanceFunction
    gains: ControlGains
    mu: float
    initial: WorldState
    motion: TargetMotion
    duration: float
    dt: float
    log_decimation: int = 10
    emit_plots: bool = False
    seed: int | None = None


def initial_edge_errors(scenario: Scenario) -> np.ndarray:
    """Distance errors of the initial placement, canonical edge order."""
    rel = edge_vectors(scenario.initial.vertex_coordinates, scenario.spec.graph)
    d0 = np.linalg.norm(rel, axis=1)
    return d0 - scenario.spec.desired_distances


def scenario_envelope(scenario: Scenario) -> ConstraintEnvelope:
    """Build the constraint envelope for this scenario's initial condition."""
    return build_envelope(scenario.spec, scenario.ranges, initial_edge_errors(scenario),
                          scenario.mu, scenario.perf)


def check_initial_state(scenario: Scenario, envelope: ConstraintEnvelope) -> None:
    """Verify the full control pipeline is defined at t = 0.

    Edge errors are already interior by envelope construction; this adds
    the heading errors, which depend on the initial virtual inputs.
    """
    world = scenario.initial
    try:
        evaluate_controls(world, scenario.spec, envelope, scenario.gains,
                          scenario.motion.velocity(world.time),
                          scenario.motion.acceleration(world.time))
    except (OutOfBarrier, SingularityGuard) as exc:
        raise InitialConditionViolation(f"control pipeline undefined at t=0: {exc}") from exc


def state_vector(world: WorldState) -> np.ndarray:
    """Flatten to the integrator layout [target, (x, y, heading) per agent]."""
    return np.concatenate([world.target_position, world.agent_states.ravel()])


def world_from_vector(time: float, y: np.ndarray) -> WorldState:
    y = np.asarray(y, dtype=float)
    if y.ndim != 1 or (y.size - 2) % 3 != 0 or y.size < 5:
        raise DimensionMismatch(f"state vector has invalid size {y.shape}")
    n = (y.size - 2) // 3
    return WorldState(float(time), y[:2].copy(), y[2:].reshape(n, 3).copy())


def state_derivative(world: WorldState, scenario: Scenario,
                     envelope: ConstraintEnvelope) -> np.ndarray:
    """Reference-path derivative of the integrator state at one instant."""
    v0 = scenario.motion.velocity(world.time)
    a0 = scenario.motion.acceleration(world.time)
    _, _, _, out = evaluate_controls(world, scenario.spec, envelope, scenario.gains, v0, a0)
    deriv = np.empty(2 + 3 * world.n_agents)
    deriv[:2] = v0
    deriv[2::3] = out.agent_velocities[:, 0]
    deriv[3::3] = out.agent_velocities[:, 1]
    deriv[4::3] = out.w
    return deriv


def step(world: WorldState, scenario: Scenario,
         envelope: ConstraintEnvelope | None = None) -> WorldState:
    """One fixed-step fourth-order step along the reference path.

    Controls are re-evaluated at each of the four stages; headings are
    wrapped afterwards. The production loop in :func:`run` integrates
    the identical dynamics in compiled form.
    """
    env = scenario_envelope(scenario) if envelope is None else envelope
    dt = scenario.dt
    t = world.time
    y = state_vector(world)
    k1 = state_derivative(world_from_vector(t, y), scenario, env)
    k2 = state_derivative(world_from_vector(t + dt / 2, y + dt / 2 * k1), scenario, env)
    k3 = state_derivative(world_from_vector(t + dt / 2, y + dt / 2 * k2), scenario, env)
    k4 = state_derivative(world_from_vector(t + dt, y + dt * k3), scenario, env)
    y_next = y + dt / 6 * (k1 + 2 * k2 + 2 * k3 + k4)
    y_next[4::3] = np.pi - (np.pi - y_next[4::3]) % (2 * np.pi)
    return world_from_vector(t + dt, y_next)


def build_kernel(scenario: Scenario, envelope: ConstraintEnvelope) -> fastpath.Kernel:
    """Pack scenario constants for the compiled loop."""
    graph = scenario.spec.graph
    idx = np.asarray(graph.edges, dtype=np.int64)
    model_id, model_params = scenario.motion._packed()
    return fastpath.Kernel(
        edge_i=np.ascontiguousarray(idx[:, 0]),
        edge_j=np.ascontiguousarray(idx[:, 1]),
        dstar2=scenario.spec.desired_distances**2,
        beta0=envelope.perf.beta0,
        beta_inf=envelope.perf.beta_inf,
        gamma=envelope.perf.gamma,
        xi_upper=envelope.xi_upper,
        xi_lower=envelope.xi_lower,
        k_edge=scenario.gains.k_edge,
        k_h1=scenario.gains.k_h1,
        k_h2=scenario.gains.k_h2,
        heading_bound=scenario.gains.heading_bound,
        model=model_id,
        model_params=model_params,
        dt=scenario.dt,
    )


@dataclass
class SimTrace:
    """Logged run history. Arrays are indexed [record, ...]."""

    scenario: Scenario
    envelope: ConstraintEnvelope
    t: np.ndarray                 # (L,)
    target: np.ndarray            # (L, 2)
    poses: np.ndarray             # (L, N, 3)
    u: np.ndarray                 # (L, N, 2)
    theta_d: np.ndarray           # (L, N)
    e_theta: np.ndarray           # (L, N)
    v: np.ndarray                 # (L, N)
    w: np.ndarray                 # (L, N)
    theta_d_rate: np.ndarray      # (L, N)
    d: np.ndarray                 # (L, E)
    e: np.ndarray                 # (L, E)
    eta: np.ndarray               # (L, E)
    xi: np.ndarray                # (L, E)
    sigma: np.ndarray             # (L, E)
    e_bound_lower: np.ndarray     # (L, E) positive half-widths
    e_bound_upper: np.ndarray     # (L, E)
    sigma_min_rigidity: np.ndarray  # (L,)
    violation: np.ndarray         # (L,) status codes, 0 clean
    completed: bool
    violation_info: tuple[int, int, float] | None  # (status, index, time)

    @property
    def n_records(self) -> int:
        return self.t.shape[0]


def _snapshot(scenario: Scenario, envelope: ConstraintEnvelope, world: WorldState):
    """Everything one trace record holds, recomputed on the reference path."""
    n = world.n_agents
    errs = edge_errors(world, scenario.spec, envelope, world.time)
    nan_agents = np.full(n, np.nan)
    try:
        _, transforms, _, out = evaluate_controls(
            world, scenario.spec, envelope, scenario.gains,
            scenario.motion.velocity(world.time), scenario.motion.acceleration(world.time))
        sigma = transforms.sigma
        controls = (out.u, out.theta_d, out.e_theta, out.v, out.w, out.theta_d_rate)
    except (OutOfBarrier, SingularityGuard):
        # at or past a guard: record what is still defined, pad the rest
        sigma = np.full(errs.d.shape, np.nan)
        controls = (np.full((n, 2), np.nan), nan_agents, nan_agents, nan_agents,
                    nan_agents, nan_agents)
    lower, upper = time_varying_error_bounds(envelope, world.time)
    _, sigma_min = is_infinitesimally_rigid(world.vertex_coordinates, scenario.spec.graph)
    return errs, sigma, controls, lower, upper, sigma_min


def run(scenario: Scenario) -> SimTrace:
    """Integrate the scenario over its horizon and log at the decimation.

    The first record is the initial state; afterwards one record per
    log_decimation steps, plus the final step. A guard trip ends the run
    early with the offending status flagged on the last record.
    """
    envelope = scenario_envelope(scenario)
    check_initial_state(scenario, envelope)
    kernel = build_kernel(scenario, envelope)

    n_steps = round(scenario.duration / scenario.dt)
    dec = max(1, int(scenario.log_decimation))
    n = scenario.initial.n_agents
    n_edges = scenario.spec.graph.n_edges
    max_rows = n_steps // dec + 3

    t_log = np.empty(max_rows)
    target = np.empty((max_rows, 2))
    poses = np.empty((max_rows, n, 3))
    u_log = np.empty((max_rows, n, 2))
    theta_d = np.empty((max_rows, n))
    e_theta = np.empty((max_rows, n))
    v_log = np.empty((max_rows, n))
    w_log = np.empty((max_rows, n))
    tdd_log = np.empty((max_rows, n))
    d_log = np.empty((max_rows, n_edges))
    e_log = np.empty((max_rows, n_edges))
    eta_log = np.empty((max_rows, n_edges))
    xi_log = np.empty((max_rows, n_edges))
    sigma_log = np.empty((max_rows, n_edges))
    lo_log = np.empty((max_rows, n_edges))
    up_log = np.empty((max_rows, n_edges))
    smin_log = np.empty(max_rows)
    flag_log = np.zeros(max_rows, dtype=np.int64)

    def log_row(row: int, world: WorldState, flag: int):
        errs, sigma, controls, lower, upper, sigma_min = _snapshot(scenario, envelope, world)
        t_log[row] = world.time
        target[row] = world.target_position
        poses[row] = world.agent_states
        u_log[row], theta_d[row], e_theta[row], v_log[row], w_log[row], tdd_log[row] = controls
        d_log[row], e_log[row], eta_log[row], xi_log[row] = errs.d, errs.e, errs.eta, errs.xi
        sigma_log[row] = sigma
        lo_log[row], up_log[row] = lower, upper
        smin_log[row] = sigma_min
        flag_log[row] = flag

    y = state_vector(scenario.initial)
    log_row(0, scenario.initial, fastpath.OK)
    rows = 1
    steps_done = 0
    completed = True
    violation_info = None
    while steps_done < n_steps:
        chunk = min(dec, n_steps - steps_done)
        status, index, done = kernel.advance(steps_done, y, chunk)
        steps_done += done
        t_now = steps_done * scenario.dt
        world = world_from_vector(t_now, y)
        if status != fastpath.OK:
            log_row(rows, world, status)
            rows += 1
            completed = False
            violation_info = (int(status), int(index), t_now)
            break
        log_row(rows, world, fastpath.OK)
        rows += 1

    return SimTrace(
        scenario=scenario, envelope=envelope,
        t=t_log[:rows], target=target[:rows], poses=poses[:rows],
        u=u_log[:rows], theta_d=theta_d[:rows], e_theta=e_theta[:rows],
        v=v_log[:rows], w=w_log[:rows], theta_d_rate=tdd_log[:rows],
        d=d_log[:rows], e=e_log[:rows], eta=eta_log[:rows], xi=xi_log[:rows],
        sigma=sigma_log[:rows], e_bound_lower=lo_log[:rows], e_bound_upper=up_log[:rows],
        sigma_min_rigidity=smin_log[:rows], violation=flag_log[:rows],
        completed=completed, violation_info=violation_info,
    )


@dataclass(frozen=True)
class CheckResult:
    """Outcome of one monitored condition over a whole trace."""

    name: str
    ok: bool
    first_bad_index: int | None
    worst_margin: float


@dataclass(frozen=True)
class MonitorReport:
    ok: bool
    checks: tuple[CheckResult, ...]
    halted_early: bool
    violation: str  # name of the status that ended the run, "none" if clean

    def check(self, name: str) -> CheckResult:
        for c in self.checks:
            if c.name == name:
                return c
        raise KeyError(name)


def _margin_check(name: str, margins: np.ndarray) -> CheckResult:
    """margins > 0 means satisfied; NaN counts as violated."""
    per_row = margins.min(axis=1) if margins.ndim > 1 else margins
    bad = ~(per_row > 0)
    ok = not bad.any()
    first = None if ok else int(np.argmax(bad))
    return CheckResult(name, ok, first, float(per_row.min()))


def monitor(trace: SimTrace) -> MonitorReport:
    """Evaluate the four run-wide conditions on the logged records.

    (a) errors inside the static funnels, (b) errors inside the decayed
    funnels, (c) heading errors inside their bounds, (d) rigidity margin
    above the floor tied to the desired framework.
    """
    env = trace.envelope
    scenario = trace.scenario
    static = np.minimum(env.e_upper_star - trace.e, trace.e + env.e_lower_star)
    decayed = np.minimum(trace.e_bound_upper - trace.e, trace.e + trace.e_bound_lower)
    heading = scenario.gains.heading_bound - np.abs(trace.e_theta)

    desired = henneberg_build(scenario.spec.radius,
                              scenario.spec.separation_angles_deg[:scenario.spec.n_agents - 1])
    s_desired = np.linalg.svd(rigidity_matrix(desired.coordinates, desired.graph),
                              compute_uv=False)
    floor = RIGIDITY_FLOOR_REL * s_desired[0]
    rigidity = trace.sigma_min_rigidity - floor

    checks = (
        _margin_check("static_funnel", static),
        _margin_check("decayed_funnel", decayed),
        _margin_check("heading_bound", heading),
        _margin_check("rigidity_margin", rigidity),
    )
    halted = not trace.completed
    status = int(trace.violation.max()) if trace.violation.size else 0
    ok = all(c.ok for c in checks) and not halted and status == 0
    return MonitorReport(ok, checks, halted, VIOLATION_NAMES.get(status, str(status)))


def _settle_time(t: np.ndarray, within: np.ndarray) -> float:
    """First time from which the flag stays True through the end; inf if never."""
    if within.size == 0 or not within[-1]:
        return math.inf
    idx = within.size - 1
    while idx > 0 and within[idx - 1]:
        idx -= 1
    return float(t[idx])


@dataclass(frozen=True)
class SimMetrics:
    """Headline numbers of one run."""

    final_abs_edge_errors: np.ndarray   # (E,)
    edge_settling_times: np.ndarray     # (E,) first time |e| < e_tol for good
    heading_settling_times: np.ndarray  # (N,) first time |e_theta| < heading_tol for good
    final_velocity_mismatch: np.ndarray  # (N,) |pdot_i - target velocity| at the end
    min_rigidity_margin: float
    heading_settling_bound: float       # gain-implied bound, for reference
    completed: bool

    def to_mapping(self) -> dict:
        return {
            "final_abs_edge_errors": [float(x) for x in self.final_abs_edge_errors],
            "edge_settling_times": [float(x) for x in self.edge_settling_times],
            "heading_settling_times": [float(x) for x in self.heading_settling_times],
            "final_velocity_mismatch": [float(x) for x in self.final_velocity_mismatch],
            "min_rigidity_margin": float(self.min_rigidity_margin),
            "heading_settling_bound": float(self.heading_settling_bound),
            "completed": self.completed,
        }


def metrics(trace: SimTrace, e_tol: float = 0.05, heading_tol: float = np.deg2rad(0.5)) -> SimMetrics:
    """Summarize convergence: final errors, settling times, tracking mismatch."""
    scenario = trace.scenario
    edge_settle = np.array([
        _settle_time(trace.t, np.abs(trace.e[:, k]) < e_tol)
        for k in range(trace.e.shape[1])
    ])
    heading_settle = np.array([
        _settle_time(trace.t, np.abs(trace.e_theta[:, i]) < heading_tol)
        for i in range(trace.e_theta.shape[1])
    ])
    final = trace.n_records - 1
    headings = trace.poses[final, :, 2]
    pdot = trace.v[final][:, None] * np.column_stack([np.cos(headings), np.sin(headings)])
    v0 = scenario.motion.velocity(trace.t[final])
    mismatch = np.linalg.norm(pdot - v0[None, :], axis=1)
    bound = settling_time_bound(scenario.gains.k_h1, scenario.gains.k_h2)
    return SimMetrics(
        final_abs_edge_errors=np.abs(trace.e[final]),
        edge_settling_times=edge_settle,
        heading_settling_times=heading_settle,
        final_velocity_mismatch=mismatch,
        min_rigidity_margin=float(trace.sigma_min_rigidity.min()),
        heading_settling_bound=float(np.max(bound)),
        completed=trace.completed,
    )
