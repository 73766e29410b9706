"""Scenario files: strict YAML loading, normalized echo, env overrides.

Files use degrees for angles and plain numbers or lists for per-edge and
per-agent quantities; everything is converted and broadcast on load so
the in-memory Scenario always carries radians and full-length arrays.
Unknown keys are rejected rather than ignored.
"""
from __future__ import annotations

import os
from dataclasses import replace as dc_replace
from importlib import resources
from pathlib import Path

import numpy as np
import yaml

from .control import ControlGains, control_gains
from .errors import ParseError, ValidationError
from .formation import DEFAULT_MU, edge_ranges
from .rigidity import formation_spec
from .sim import Scenario, scenario_envelope, target_motion, world_state
from .transform import PerformanceFunction

# Environment variables that may override a validated scenario.
OVERRIDE_VARS = ("SIM_K_EDGE", "SIM_K_H1", "SIM_K_H2", "SIM_DT")

_SPEED_SAMPLES = 512


def _require_mapping(node, where: str) -> dict:
    if not isinstance(node, dict):
        raise ValidationError(f"{where} must be a mapping, got {type(node).__name__}")
    return node


def _check_keys(node: dict, where: str, required: set, optional: set = frozenset()):
    missing = required - node.keys()
    if missing:
        raise ValidationError(f"{where} is missing required key(s): {sorted(missing)}")
    unknown = node.keys() - required - optional
    if unknown:
        raise ValidationError(f"{where} has unknown key(s): {sorted(unknown)}")


def _as_float(value, where: str) -> float:
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ValidationError(f"{where} must be a number, got {value!r}")
    return float(value)


def _as_int(value, where: str) -> int:
    if isinstance(value, bool) or not isinstance(value, int):
        raise ValidationError(f"{where} must be an integer, got {value!r}")
    return int(value)


def _scalar_or_list(value, where: str):
    """A plain number passes through; a list becomes a float array."""
    if isinstance(value, list):
        return np.array([_as_float(v, f"{where}[{k}]") for k, v in enumerate(value)])
    return _as_float(value, where)


def load_scenario(path) -> Scenario:
    """Parse and fully validate one scenario file."""
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ParseError(f"cannot read {path}: {exc}") from exc
    return parse_scenario(text, default_name=path.stem)


def parse_scenario(text: str, default_name: str = "scenario") -> Scenario:
    try:
        raw = yaml.safe_load(text)
    except yaml.YAMLError as exc:
        mark = getattr(exc, "problem_mark", None)
        at = f" at line {mark.line + 1}, column {mark.column + 1}" if mark else ""
        raise ParseError(f"invalid YAML{at}: {exc}") from exc
    root = _require_mapping(raw, "scenario")
    _check_keys(root, "scenario",
                required={"formation", "ranges", "performance", "gains",
                          "heading_bound_deg", "initial", "target_motion", "run"},
                optional={"name", "mu", "outputs", "seed"})

    name = root.get("name", default_name)
    if not isinstance(name, str) or not name:
        raise ValidationError("name must be a non-empty string")

    form = _require_mapping(root["formation"], "formation")
    _check_keys(form, "formation", {"radius", "separation_angles_deg"})
    angles = form["separation_angles_deg"]
    if not isinstance(angles, list):
        raise ValidationError("formation.separation_angles_deg must be a list")
    spec = formation_spec(
        _as_float(form["radius"], "formation.radius"),
        [_as_float(a, f"formation.separation_angles_deg[{k}]") for k, a in enumerate(angles)])
    graph = spec.graph

    rng = _require_mapping(root["ranges"], "ranges")
    _check_keys(rng, "ranges", {"chain_lower", "chain_upper", "radial_lower", "radial_upper"})
    ranges = edge_ranges(
        graph,
        _scalar_or_list(rng["chain_lower"], "ranges.chain_lower"),
        _scalar_or_list(rng["chain_upper"], "ranges.chain_upper"),
        _scalar_or_list(rng["radial_lower"], "ranges.radial_lower"),
        _scalar_or_list(rng["radial_upper"], "ranges.radial_upper"))

    perf_node = _require_mapping(root["performance"], "performance")
    _check_keys(perf_node, "performance", {"beta0", "beta_inf", "gamma"})
    try:
        perf = PerformanceFunction(
            _scalar_or_list(perf_node["beta0"], "performance.beta0"),
            _scalar_or_list(perf_node["beta_inf"], "performance.beta_inf"),
            _scalar_or_list(perf_node["gamma"], "performance.gamma"),
        ).broadcast(graph.n_edges)
    except ValueError as exc:
        raise ValidationError(f"performance: {exc}") from exc

    gains_node = _require_mapping(root["gains"], "gains")
    _check_keys(gains_node, "gains", {"k_edge", "k_h1", "k_h2"})
    bound_deg = _scalar_or_list(root["heading_bound_deg"], "heading_bound_deg")
    try:
        gains = control_gains(
            graph,
            _scalar_or_list(gains_node["k_edge"], "gains.k_edge"),
            _scalar_or_list(gains_node["k_h1"], "gains.k_h1"),
            _scalar_or_list(gains_node["k_h2"], "gains.k_h2"),
            np.deg2rad(bound_deg))
    except ValueError as exc:
        raise ValidationError(f"gains: {exc}") from exc

    mu = _as_float(root.get("mu", DEFAULT_MU), "mu")

    init = _require_mapping(root["initial"], "initial")
    _check_keys(init, "initial", {"target", "agents"})
    tgt = init["target"]
    if not isinstance(tgt, list) or len(tgt) != 2:
        raise ValidationError("initial.target must be [x, y]")
    agents_node = init["agents"]
    if not isinstance(agents_node, list) or len(agents_node) != graph.n_agents:
        raise ValidationError(
            f"initial.agents must list {graph.n_agents} entries of [x, y, heading_deg]")
    agent_states = np.empty((graph.n_agents, 3))
    for i, row in enumerate(agents_node):
        if not isinstance(row, list) or len(row) != 3:
            raise ValidationError(f"initial.agents[{i}] must be [x, y, heading_deg]")
        agent_states[i, 0] = _as_float(row[0], f"initial.agents[{i}][0]")
        agent_states[i, 1] = _as_float(row[1], f"initial.agents[{i}][1]")
        agent_states[i, 2] = np.deg2rad(_as_float(row[2], f"initial.agents[{i}][2]"))
    initial = world_state(0.0, [_as_float(tgt[0], "initial.target[0]"),
                                _as_float(tgt[1], "initial.target[1]")], agent_states)

    tm = _require_mapping(root["target_motion"], "target_motion")
    _check_keys(tm, "target_motion", {"model", "params", "speed_bound"})
    params = _require_mapping(tm["params"], "target_motion.params")
    motion = target_motion(str(tm["model"]),
                           {k: _as_float(v, f"target_motion.params.{k}") for k, v in params.items()},
                           _as_float(tm["speed_bound"], "target_motion.speed_bound"))

    run_node = _require_mapping(root["run"], "run")
    _check_keys(run_node, "run", {"duration", "dt"}, {"log_decimation"})
    duration = _as_float(run_node["duration"], "run.duration")
    if duration < 0:
        raise ValidationError(f"run.duration must be nonnegative, got {duration}")
    dt = _as_float(run_node["dt"], "run.dt")
    if dt <= 0:
        raise ValidationError(f"run.dt must be positive, got {dt}")
    decimation = _as_int(run_node.get("log_decimation", 10), "run.log_decimation")
    if decimation < 1:
        raise ValidationError(f"run.log_decimation must be at least 1, got {decimation}")

    outputs = _require_mapping(root.get("outputs", {}), "outputs")
    _check_keys(outputs, "outputs", set(), {"plots"})
    plots = outputs.get("plots", False)
    if not isinstance(plots, bool):
        raise ValidationError("outputs.plots must be a boolean")

    seed = root.get("seed")
    if seed is not None:
        seed = _as_int(seed, "seed")

    scenario = Scenario(name=name, spec=spec, ranges=ranges, perf=perf, gains=gains,
                        mu=mu, initial=initial, motion=motion, duration=duration,
                        dt=dt, log_decimation=decimation, emit_plots=plots, seed=seed)
    _validate_dynamics(scenario)
    return scenario


def _validate_dynamics(scenario: Scenario) -> None:
    """Cross-field checks that need the assembled scenario.

    Builds the envelope once so infeasible windows or out-of-funnel
    initial distances surface at load time, and samples the target speed
    over the horizon against its declared bound.
    """
    try:
        scenario_envelope(scenario)
    except Exception as exc:
        raise ValidationError(f"scenario {scenario.name!r}: {exc}") from exc
    horizon = max(scenario.duration, scenario.dt)
    ts = np.linspace(0.0, horizon, _SPEED_SAMPLES)
    speeds = np.linalg.norm(scenario.motion.velocity(ts), axis=1)
    worst = float(speeds.max())
    if worst >= scenario.motion.speed_bound:
        raise ValidationError(
            f"target speed reaches {worst:.4f} m/s over the horizon, "
            f"declared bound is {scenario.motion.speed_bound:.4f} m/s")


def scenario_to_mapping(scenario: Scenario) -> dict:
    """Normalized plain-dict form of a scenario, ready for YAML."""
    n = scenario.spec.n_agents
    given_angles = scenario.spec.separation_angles_deg[:n - 1]
    mapping = {
        "name": scenario.name,
        "formation": {
            "radius": float(scenario.spec.radius),
            "separation_angles_deg": [float(a) for a in given_angles],
        },
        "ranges": {
            "chain_lower": [float(x) for x in scenario.ranges.d_lower[:n - 1]],
            "chain_upper": [float(x) for x in scenario.ranges.d_upper[:n - 1]],
            "radial_lower": [float(x) for x in scenario.ranges.d_lower[n - 1:]],
            "radial_upper": [float(x) for x in scenario.ranges.d_upper[n - 1:]],
        },
        "performance": {
            "beta0": [float(x) for x in scenario.perf.beta0],
            "beta_inf": [float(x) for x in scenario.perf.beta_inf],
            "gamma": [float(x) for x in scenario.perf.gamma],
        },
        "gains": {
            "k_edge": [float(x) for x in scenario.gains.k_edge],
            "k_h1": [float(x) for x in scenario.gains.k_h1],
            "k_h2": [float(x) for x in scenario.gains.k_h2],
        },
        "heading_bound_deg": [float(x) for x in np.rad2deg(scenario.gains.heading_bound)],
        "mu": float(scenario.mu),
        "initial": {
            "target": [float(x) for x in scenario.initial.target_position],
            "agents": [
                [float(s[0]), float(s[1]), float(np.rad2deg(s[2]))]
                for s in scenario.initial.agent_states
            ],
        },
        "target_motion": {
            "model": scenario.motion.model,
            "params": {k: float(v) for k, v in scenario.motion.params.items()},
            "speed_bound": float(scenario.motion.speed_bound),
        },
        "run": {
            "duration": float(scenario.duration),
            "dt": float(scenario.dt),
            "log_decimation": int(scenario.log_decimation),
        },
        "outputs": {"plots": bool(scenario.emit_plots)},
    }
    if scenario.seed is not None:
        mapping["seed"] = int(scenario.seed)
    return mapping


def write_scenario(scenario: Scenario, path) -> None:
    """Write the normalized echo; floats keep full precision."""
    with open(path, "w") as fh:
        yaml.safe_dump(scenario_to_mapping(scenario), fh, sort_keys=False)


def apply_env_overrides(scenario: Scenario, environ=None) -> tuple[Scenario, dict]:
    """Apply SIM_* variables on top of a validated scenario.

    Overrides land after validation on purpose: an override that breaks
    the closed loop should produce an honestly failing run, not a load
    error. Returns the adjusted scenario and the values applied.
    """
    env = os.environ if environ is None else environ
    applied = {}

    def pull(var: str) -> float | None:
        if var not in env:
            return None
        try:
            value = float(env[var])
        except ValueError as exc:
            raise ValidationError(f"{var} must be a number, got {env[var]!r}") from exc
        applied[var] = value
        return value

    gains = scenario.gains
    k_edge = pull("SIM_K_EDGE")
    if k_edge is not None:
        gains = dc_replace(gains, k_edge=np.full_like(gains.k_edge, k_edge))
    k_h1 = pull("SIM_K_H1")
    if k_h1 is not None:
        gains = dc_replace(gains, k_h1=np.full_like(gains.k_h1, k_h1))
    k_h2 = pull("SIM_K_H2")
    if k_h2 is not None:
        gains = dc_replace(gains, k_h2=np.full_like(gains.k_h2, k_h2))
    out = dc_replace(scenario, gains=gains)
    dt = pull("SIM_DT")
    if dt is not None:
        out = dc_replace(out, dt=dt)
    return out, applied


def bundled_scenarios() -> tuple[str, ...]:
    """Names of the scenario files shipped inside the package."""
    base = resources.files("enclosim") / "scenarios"
    names = sorted(p.name[:-5] for p in base.iterdir() if p.name.endswith(".yaml"))
    return tuple(names)


def resolve_scenario(name_or_path: str) -> Scenario:
    """Load from a filesystem path, else from the bundled set by name."""
    p = Path(name_or_path)
    if p.exists():
        return load_scenario(p)
    base = resources.files("enclosim") / "scenarios"
    candidate = base / f"{name_or_path}.yaml"
    if candidate.is_file():
        return parse_scenario(candidate.read_text(), default_name=name_or_path)
    raise ValidationError(
        f"no scenario file or bundled name {name_or_path!r}; bundled scenarios: "
        + ", ".join(bundled_scenarios()))
