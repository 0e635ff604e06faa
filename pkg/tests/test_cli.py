import numpy as np
import pytest

from surfnav.cli import main, singularity_demo

SMALL_SCENARIO = """
[surface]
name = "torus"
params = [6.0, 2.0]

[swarm]
robots = 4
sensing_radius = 0.6
safe_radius = 0.4
gain_k = 0.6
gain_c = 3.0

[run]
duration = 0.3
dt = 0.001
record_every = 10

[initial]
seed = 5
"""

VIOLATING_SCENARIO = """
[swarm]
robots = 2
gain_c = 20.0

[run]
duration = 0.9
dt = 0.09

[initial]
positions = [[8.0, 0.0, 0.0], [8.0, 0.0, 0.0]]
omega = [[0.45, 0.0], [-0.45, 0.0]]
"""


@pytest.fixture
def small_scenario(tmp_path):
    path = tmp_path / "small.toml"
    path.write_text(SMALL_SCENARIO, encoding="utf-8")
    return path


def test_simulate_writes_all_artifacts(small_scenario, tmp_path, capsys):
    import xml.etree.ElementTree as ET

    out = tmp_path / "run"
    assert main(["simulate", str(small_scenario), "--out", str(out)]) == 0
    for name in ("trajectory.csv", "metrics.csv", "run_manifest.toml",
                 "phi_max.svg", "eps.svg", "min_separation.svg",
                 "lyapunov.svg"):
        assert (out / name).exists(), name
    for name in ("phi_max.svg", "eps.svg", "min_separation.svg",
                 "lyapunov.svg"):
        root = ET.parse(out / name).getroot()
        assert root.tag.endswith("svg")
        assert any(child.tag.endswith("polyline") for child in root)
    stdout = capsys.readouterr().out
    assert "dt=0.001" in stdout
    assert "seed=5" in stdout

    trajectory = (out / "trajectory.csv").read_text().splitlines()
    assert trajectory[0] == ("time,robot_id,x_1,x_2,x_3,omega_1,omega_2,"
                             "omega_hat_1,omega_hat_2")
    # 31 records (every 10 of 300 steps, plus the initial one) x 4 robots
    assert len(trajectory) == 1 + 31 * 4

    metrics = (out / "metrics.csv").read_text().splitlines()
    assert metrics[0] == ("time,phi_max,mean_offset,min_sep,max_neighbor_sep,"
                          "lyapunov,eps_max")
    assert len(metrics) == 1 + 31


def test_rerun_from_manifest_is_byte_identical(small_scenario, tmp_path):
    first = tmp_path / "first"
    second = tmp_path / "second"
    assert main(["simulate", str(small_scenario), "--out", str(first)]) == 0
    manifest = first / "run_manifest.toml"
    assert main(["simulate", str(manifest), "--out", str(second)]) == 0
    for name in ("trajectory.csv", "metrics.csv", "phi_max.svg", "eps.svg",
                 "min_separation.svg", "lyapunov.svg"):
        assert (first / name).read_bytes() == (second / name).read_bytes(), name


def test_cli_overrides_are_recorded_in_manifest(small_scenario, tmp_path):
    out = tmp_path / "override"
    assert main(["simulate", str(small_scenario), "--out", str(out),
                 "--seed", "9", "--duration", "0.1"]) == 0
    manifest = (out / "run_manifest.toml").read_text()
    assert "seed = 9" in manifest
    assert "duration = 0.1" in manifest


def test_separation_violation_exits_with_diagnostic(tmp_path, capsys):
    path = tmp_path / "violates.toml"
    path.write_text(VIOLATING_SCENARIO, encoding="utf-8")
    code = main(["simulate", str(path), "--out", str(tmp_path / "boom")])
    assert code == 2
    err = capsys.readouterr().err
    assert "robots 0 and 1" in err
    assert "halve dt" in err


def test_coarse_step_on_flagship_scenario_fails_loudly(tmp_path, capsys):
    from importlib import resources

    bundled = resources.files("surfnav").joinpath("data/torus22.toml")
    code = main(["simulate", str(bundled), "--out", str(tmp_path / "coarse"),
                 "--dt", "0.5", "--duration", "5.0"])
    assert code == 2
    err = capsys.readouterr().err
    assert "between robots" in err


def test_validate_accepts_and_echoes(small_scenario, capsys):
    assert main(["validate", str(small_scenario)]) == 0
    stdout = capsys.readouterr().out
    assert "dt = 0.001" in stdout
    assert "record_every = 10" in stdout
    assert stdout.rstrip().endswith(f"ok: {small_scenario}")


def test_validate_rejects_bad_file(tmp_path, capsys):
    path = tmp_path / "bad.toml"
    path.write_text("[swarm]\nrobots = 0\n", encoding="utf-8")
    assert main(["validate", str(path)]) == 1
    assert "positive integer" in capsys.readouterr().err


def test_batch_mode_runs_multiple_scenarios(small_scenario, tmp_path):
    other = tmp_path / "other.toml"
    other.write_text(SMALL_SCENARIO.replace("seed = 5", "seed = 6"),
                     encoding="utf-8")
    out = tmp_path / "batch"
    assert main(["simulate", str(small_scenario), str(other),
                 "--out", str(out), "--jobs", "2"]) == 0
    assert (out / "small" / "trajectory.csv").exists()
    assert (out / "other" / "trajectory.csv").exists()
    first = (out / "small" / "trajectory.csv").read_text()
    second = (out / "other" / "trajectory.csv").read_text()
    assert first != second


def test_demo_singularity_command(capsys):
    assert main(["demo-singularity", "--samples", "2000"]) == 0
    stdout = capsys.readouterr().out
    assert "singular point located: yes" in stdout
    assert "demo result: pass" in stdout


def test_singularity_demo_report():
    report = singularity_demo(samples=3000, seed=1)
    assert report["sphere_min_norm"] < 1e-9
    point = report["sphere_singular_point"]
    assert abs(abs(point[2]) - 1.0) < 1e-12
    assert report["lifted_min_norm"] > report["lifted_threshold"]
    assert np.isfinite(report["lifted_min_norm"])
