"""End-to-end command line checks: exit codes, report files, messages."""

from importlib import resources

import pytest
import yaml

from enclosim.cli import EXIT_CLEAN, EXIT_INVALID, EXIT_VIOLATION, main

PDF_NAMES = ("trajectories.pdf", "heading_errors.pdf", "velocities.pdf", "edge_errors.pdf")


def pentagon_mapping():
    text = (resources.files("enclosim") / "scenarios" / "pentagon_sine.yaml").read_text()
    return yaml.safe_load(text)


@pytest.fixture(scope="module")
def short_file(tmp_path_factory):
    """Half-second variant of the bundled pentagon, plots off."""
    mapping = pentagon_mapping()
    mapping["name"] = "shortrun"
    mapping["run"]["duration"] = 0.5
    mapping["outputs"]["plots"] = False
    path = tmp_path_factory.mktemp("scn") / "shortrun.yaml"
    path.write_text(yaml.safe_dump(mapping, sort_keys=False))
    return path


@pytest.fixture(scope="module")
def bad_heading_file(tmp_path_factory):
    """Agent 1 faces away from its required direction by half a turn."""
    mapping = pentagon_mapping()
    mapping["name"] = "badheading"
    mapping["initial"]["agents"][0][2] = 290.0
    path = tmp_path_factory.mktemp("scn") / "badheading.yaml"
    path.write_text(yaml.safe_dump(mapping, sort_keys=False))
    return path


class TestRunCommand:
    def test_clean_run_writes_report(self, short_file, tmp_path, capsys):
        out = tmp_path / "report"
        assert main(["run", str(short_file), "--out", str(out)]) == EXIT_CLEAN
        for name in ("trace.csv", "scenario_echo.yaml", "summary.yaml"):
            assert (out / name).is_file()
        assert not list(out.glob("*.pdf"))

        summary = yaml.safe_load((out / "summary.yaml").read_text())
        assert summary["completed"] is True
        assert summary["violation"] == "none"
        assert summary["overrides"] == {}
        # 500 steps logged every 10th plus the initial record
        assert summary["records"] == 51
        assert summary["monitor"]["ok"] is True
        assert set(summary["monitor"]["checks"]) == {
            "static_funnel", "decayed_funnel", "heading_bound", "rigidity_margin"}

        stdout = capsys.readouterr().out
        assert "clean" in stdout
        assert "static_funnel: ok" in stdout

    def test_plots_flag_renders_figures(self, short_file, tmp_path, capsys):
        out = tmp_path / "report"
        assert main(["run", str(short_file), "--out", str(out), "--plots"]) == EXIT_CLEAN
        for name in PDF_NAMES:
            assert (out / name).stat().st_size > 0
        summary = yaml.safe_load((out / "summary.yaml").read_text())
        assert set(PDF_NAMES) <= set(summary["outputs"])

    def test_full_rate_logs_every_step(self, short_file, tmp_path, capsys):
        out = tmp_path / "report"
        assert main(["run", str(short_file), "--out", str(out), "--full-rate"]) == EXIT_CLEAN
        summary = yaml.safe_load((out / "summary.yaml").read_text())
        assert summary["records"] == 501

    def test_default_output_directory_from_name(self, short_file, tmp_path, monkeypatch, capsys):
        monkeypatch.chdir(tmp_path)
        assert main(["run", str(short_file)]) == EXIT_CLEAN
        assert (tmp_path / "shortrun_out" / "summary.yaml").is_file()

    def test_coarse_step_override_trips_barrier(self, short_file, tmp_path, monkeypatch, capsys):
        # one 0.2 s step overshoots the stiffest funnel wall
        monkeypatch.setenv("SIM_DT", "0.2")
        out = tmp_path / "report"
        assert main(["run", str(short_file), "--out", str(out)]) == EXIT_VIOLATION
        # the report is still written for offline inspection
        for name in ("trace.csv", "summary.yaml"):
            assert (out / name).is_file()
        summary = yaml.safe_load((out / "summary.yaml").read_text())
        assert summary["completed"] is False
        assert summary["violation"] == "edge_barrier"
        assert summary["overrides"] == {"SIM_DT": 0.2}
        assert "violated" in capsys.readouterr().out

    def test_rejected_initial_state_is_invalid(self, bad_heading_file, tmp_path, capsys):
        code = main(["run", str(bad_heading_file), "--out", str(tmp_path / "x")])
        assert code == EXIT_INVALID
        assert "error:" in capsys.readouterr().err


class TestCheckCommand:
    def test_feasible_scenario(self, capsys):
        assert main(["check", "pentagon_sine"]) == EXIT_CLEAN
        stdout = capsys.readouterr().out
        assert "5 agents, 9 edges" in stdout
        assert "(1,2)" in stdout
        assert "feasible" in stdout

    def test_heading_problem_reported(self, bad_heading_file, capsys):
        assert main(["check", str(bad_heading_file)]) == EXIT_INVALID
        assert "problem:" in capsys.readouterr().out


class TestVerifyCommand:
    def test_single_criterion_passes(self, tmp_path, capsys):
        code = main(["verify", "--filter", "desired_distances", "--out", str(tmp_path)])
        assert code == EXIT_CLEAN
        stdout = capsys.readouterr().out
        assert "PASS desired_distances" in stdout
        assert "1/1 criteria passed" in stdout

    def test_unknown_filter_lists_criteria(self, tmp_path, capsys):
        code = main(["verify", "--filter", "bogus", "--out", str(tmp_path)])
        assert code == EXIT_INVALID
        assert "no criterion matches" in capsys.readouterr().err


class TestBadInput:
    def test_unknown_scenario_name(self, capsys):
        assert main(["run", "octagon_drift"]) == EXIT_INVALID
        err = capsys.readouterr().err
        assert "error:" in err
        assert "pentagon_sine" in err
