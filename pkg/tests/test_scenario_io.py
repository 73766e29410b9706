"""Scenario file parsing, echo round trip, env overrides, trace files."""

import dataclasses
from importlib import resources

import numpy as np
import pytest
import yaml

from enclosim.errors import AngleOutOfRange, ParseError, ValidationError
from enclosim.scenario_io import (
    OVERRIDE_VARS,
    apply_env_overrides,
    bundled_scenarios,
    load_scenario,
    parse_scenario,
    resolve_scenario,
    scenario_to_mapping,
    write_scenario,
)
from enclosim.sim import run
from enclosim.trace_io import read_trace, write_trace

# Chain distances of the bundled pentagon, d = 2 * 5 * sin(angle / 2)
# for angles 65, 75, 75, 80 degrees, rounded to 4 decimals.
PENTAGON_CHAIN_4DP = np.array([5.3730, 6.0876, 6.0876, 6.4279])


def bundled_text(name="pentagon_sine"):
    return (resources.files("enclosim") / "scenarios" / f"{name}.yaml").read_text()


def parse_mapping(mapping):
    return parse_scenario(yaml.safe_dump(mapping, sort_keys=False))


@pytest.fixture()
def base_mapping():
    """Editable copy of the bundled pentagon scenario."""
    return yaml.safe_load(bundled_text())


class TestBundledScenario:
    def test_parses_with_expected_geometry(self, golden_scenario):
        scn = golden_scenario
        assert scn.name == "pentagon_sine"
        assert scn.spec.n_agents == 5
        d = scn.spec.desired_distances
        np.testing.assert_allclose(d[:4], PENTAGON_CHAIN_4DP, atol=5e-5)
        np.testing.assert_allclose(d[4:], 5.0)

    def test_broadcasts_scalars_to_per_edge_arrays(self, golden_scenario):
        scn = golden_scenario
        n_edges = scn.spec.graph.n_edges
        assert scn.perf.beta0.shape == (n_edges,)
        np.testing.assert_array_equal(scn.perf.beta0, 1.0)
        assert scn.gains.k_edge.shape == (n_edges,)
        assert scn.gains.k_h1.shape == (5,)

    def test_degrees_convert_to_radians(self, golden_scenario):
        scn = golden_scenario
        np.testing.assert_allclose(scn.gains.heading_bound, np.deg2rad(50.0))
        assert scn.initial.agent_states[0, 2] == np.deg2rad(110.0)

    def test_run_block_and_extras(self, golden_scenario):
        scn = golden_scenario
        assert scn.duration == 50.0
        assert scn.dt == 1e-3
        assert scn.log_decimation == 10
        assert scn.emit_plots is True
        assert scn.mu == 3.0
        assert scn.motion.model == "sine_y"
        assert scn.motion.speed_bound == 1.9


class TestParseErrors:
    def test_missing_heading_bound_names_the_field(self, base_mapping):
        del base_mapping["heading_bound_deg"]
        with pytest.raises(ValidationError, match="heading_bound_deg"):
            parse_mapping(base_mapping)

    def test_unknown_top_level_key_is_listed(self, base_mapping):
        base_mapping["wind_model"] = {"gust": 1.0}
        with pytest.raises(ValidationError, match="wind_model"):
            parse_mapping(base_mapping)

    def test_angles_summing_past_full_circle(self, base_mapping):
        # closing angle becomes 360 - 400 = -40 degrees
        base_mapping["formation"]["separation_angles_deg"] = [100.0, 100.0, 100.0, 100.0]
        with pytest.raises(AngleOutOfRange):
            parse_mapping(base_mapping)

    def test_bool_is_not_a_number(self, base_mapping):
        base_mapping["formation"]["radius"] = True
        with pytest.raises(ValidationError, match="formation.radius"):
            parse_mapping(base_mapping)

    def test_agent_count_must_match_formation(self, base_mapping):
        base_mapping["initial"]["agents"] = base_mapping["initial"]["agents"][:3]
        with pytest.raises(ValidationError, match="5 entries"):
            parse_mapping(base_mapping)

    def test_nonpositive_dt_rejected(self, base_mapping):
        base_mapping["run"]["dt"] = 0.0
        with pytest.raises(ValidationError, match="run.dt"):
            parse_mapping(base_mapping)

    def test_negative_duration_rejected(self, base_mapping):
        base_mapping["run"]["duration"] = -2.0
        with pytest.raises(ValidationError, match="run.duration"):
            parse_mapping(base_mapping)

    def test_malformed_yaml_is_a_parse_error(self):
        with pytest.raises(ParseError, match="invalid YAML"):
            parse_scenario("formation: [unclosed\n  radius: 5")

    def test_non_mapping_root_rejected(self):
        with pytest.raises(ValidationError, match="mapping"):
            parse_scenario("just a string")

    def test_missing_file_is_a_parse_error(self, tmp_path):
        with pytest.raises(ParseError, match="cannot read"):
            load_scenario(tmp_path / "nope.yaml")

    def test_infeasible_window_rejected_at_load(self, base_mapping):
        # radial ceiling below the enclosing radius, no funnel fits
        base_mapping["ranges"]["radial_upper"] = 4.0
        with pytest.raises(ValidationError, match="pentagon_sine"):
            parse_mapping(base_mapping)

    def test_initial_pose_outside_funnel_rejected_at_load(self, base_mapping):
        base_mapping["initial"]["agents"][0] = [40.0, 1.3, 110.0]
        with pytest.raises(ValidationError, match="pentagon_sine"):
            parse_mapping(base_mapping)

    def test_target_speed_above_declared_bound(self, base_mapping):
        # sine_y peak speed is hypot(1.0, 1.5) = 1.803 at t = 0
        base_mapping["target_motion"]["speed_bound"] = 1.5
        with pytest.raises(ValidationError, match="target speed"):
            parse_mapping(base_mapping)


class TestRoundTrip:
    def test_write_then_load_reproduces_scenario(self, golden_scenario, tmp_path):
        path = tmp_path / "echo.yaml"
        write_scenario(golden_scenario, path)
        back = load_scenario(path)

        assert back.name == golden_scenario.name
        assert back.spec.radius == golden_scenario.spec.radius
        assert back.spec.graph.edges == golden_scenario.spec.graph.edges
        np.testing.assert_allclose(
            back.spec.desired_distances, golden_scenario.spec.desired_distances,
            rtol=0, atol=1e-12)
        np.testing.assert_array_equal(back.ranges.d_lower, golden_scenario.ranges.d_lower)
        np.testing.assert_array_equal(back.ranges.d_upper, golden_scenario.ranges.d_upper)
        np.testing.assert_array_equal(back.perf.beta0, golden_scenario.perf.beta0)
        np.testing.assert_array_equal(back.perf.beta_inf, golden_scenario.perf.beta_inf)
        np.testing.assert_array_equal(back.perf.gamma, golden_scenario.perf.gamma)
        np.testing.assert_array_equal(back.gains.k_edge, golden_scenario.gains.k_edge)
        np.testing.assert_array_equal(back.gains.k_h1, golden_scenario.gains.k_h1)
        np.testing.assert_array_equal(back.gains.k_h2, golden_scenario.gains.k_h2)
        # heading bound and initial headings pass through a radian/degree
        # conversion each way, exactness is not guaranteed
        np.testing.assert_allclose(
            back.gains.heading_bound, golden_scenario.gains.heading_bound,
            rtol=0, atol=1e-12)
        np.testing.assert_array_equal(
            back.initial.target_position, golden_scenario.initial.target_position)
        np.testing.assert_allclose(
            back.initial.agent_states, golden_scenario.initial.agent_states,
            rtol=0, atol=1e-12)
        assert back.mu == golden_scenario.mu
        assert back.motion.model == golden_scenario.motion.model
        assert back.motion.params == golden_scenario.motion.params
        assert back.motion.speed_bound == golden_scenario.motion.speed_bound
        assert back.duration == golden_scenario.duration
        assert back.dt == golden_scenario.dt
        assert back.log_decimation == golden_scenario.log_decimation
        assert back.emit_plots == golden_scenario.emit_plots
        assert back.seed == golden_scenario.seed

    def test_mapping_is_plain_yaml_types(self, golden_scenario):
        mapping = scenario_to_mapping(golden_scenario)
        text = yaml.safe_dump(mapping)
        assert yaml.safe_load(text) == mapping

    def test_mapping_normalizes_scalars_to_lists(self, golden_scenario):
        mapping = scenario_to_mapping(golden_scenario)
        assert mapping["ranges"]["radial_lower"] == [0.8] * 5
        assert mapping["performance"]["beta0"] == [1.0] * 9
        assert mapping["heading_bound_deg"] == pytest.approx([50.0] * 5)


class TestEnvOverrides:
    def test_override_vars_tuple(self):
        assert OVERRIDE_VARS == ("SIM_K_EDGE", "SIM_K_H1", "SIM_K_H2", "SIM_DT")

    def test_no_variables_applies_nothing(self, golden_scenario):
        out, applied = apply_env_overrides(golden_scenario, environ={})
        assert applied == {}
        np.testing.assert_array_equal(out.gains.k_edge, golden_scenario.gains.k_edge)
        assert out.dt == golden_scenario.dt

    def test_gain_and_step_overrides_apply(self, golden_scenario):
        env = {"SIM_K_EDGE": "0.5", "SIM_DT": "0.01", "UNRELATED": "7"}
        out, applied = apply_env_overrides(golden_scenario, environ=env)
        assert applied == {"SIM_K_EDGE": 0.5, "SIM_DT": 0.01}
        np.testing.assert_array_equal(out.gains.k_edge, 0.5)
        assert out.dt == 0.01
        # source scenario is untouched
        np.testing.assert_array_equal(golden_scenario.gains.k_edge, 0.2)
        assert golden_scenario.dt == 1e-3

    def test_heading_gain_overrides_fill_per_agent(self, golden_scenario):
        env = {"SIM_K_H1": "0.9", "SIM_K_H2": "0.05"}
        out, applied = apply_env_overrides(golden_scenario, environ=env)
        assert applied == {"SIM_K_H1": 0.9, "SIM_K_H2": 0.05}
        np.testing.assert_array_equal(out.gains.k_h1, np.full(5, 0.9))
        np.testing.assert_array_equal(out.gains.k_h2, np.full(5, 0.05))

    def test_non_numeric_value_names_the_variable(self, golden_scenario):
        with pytest.raises(ValidationError, match="SIM_K_H1"):
            apply_env_overrides(golden_scenario, environ={"SIM_K_H1": "fast"})


class TestResolve:
    def test_bundled_names_include_pentagon(self):
        assert "pentagon_sine" in bundled_scenarios()

    def test_resolves_filesystem_path_first(self, golden_scenario, tmp_path):
        path = tmp_path / "local.yaml"
        write_scenario(dataclasses.replace(golden_scenario, name="local"), path)
        scn = resolve_scenario(str(path))
        assert scn.name == "local"

    def test_unknown_name_lists_bundled_set(self):
        with pytest.raises(ValidationError, match="pentagon_sine"):
            resolve_scenario("octagon_drift")


@pytest.fixture(scope="module")
def short_trace(golden_scenario):
    scn = dataclasses.replace(golden_scenario, duration=0.05)
    return run(scn)


class TestTraceFile:
    def test_round_trip_is_exact(self, short_trace, tmp_path):
        # %.17e prints enough digits to pin each double exactly
        path = tmp_path / "trace.csv"
        write_trace(short_trace, path)
        table = read_trace(path)
        assert table.n_rows == short_trace.t.shape[0]
        np.testing.assert_array_equal(table.columns["t"], short_trace.t)
        np.testing.assert_array_equal(table.columns["target_x"], short_trace.target[:, 0])
        np.testing.assert_array_equal(table.agent("theta", 3), short_trace.poses[:, 2, 2])
        np.testing.assert_array_equal(table.agent("v", 1), short_trace.v[:, 0])
        np.testing.assert_array_equal(table.edge("e", 1, 2), short_trace.e[:, 0])
        np.testing.assert_array_equal(table.edge("sigma", 5, 0), short_trace.sigma[:, 8])
        np.testing.assert_array_equal(
            table.columns["sigma_min_R"], short_trace.sigma_min_rigidity)
        np.testing.assert_array_equal(table.columns["violation"], 0.0)

    def test_structure_recovered_from_header_alone(self, short_trace, tmp_path, golden_scenario):
        path = tmp_path / "trace.csv"
        write_trace(short_trace, path)
        table = read_trace(path)
        assert table.n_agents == 5
        assert table.edges == golden_scenario.spec.graph.edges

    def test_missing_header_rejected(self, tmp_path):
        path = tmp_path / "raw.csv"
        path.write_text("1.0,2.0,3.0\n")
        with pytest.raises(ParseError, match="header"):
            read_trace(path)

    def test_column_count_mismatch_rejected(self, tmp_path):
        path = tmp_path / "short.csv"
        path.write_text("t,target_x,target_y\n0.0,1.0\n")
        with pytest.raises(ParseError, match="columns"):
            read_trace(path)
