import pytest
from click.testing import CliRunner

from castcool.cli import main
from castcool.harness import ExperimentConfig


MACHINE_CFG = """
[run]
t_end = 4.0
v = 0.0166667
t_cast = 1820.0
material = st40

[grid]
q = 0.01
d_phi = 0.01

[layout]
l = 0.1

[section 1]
kind = curvilinear
r_m = 8.0
phi_span = 0.2
nozzles = 0.1
w = 0.04
alpha_c = 250
alpha_p = 750
c_i = 4.5e-8
t_i = 350
"""


@pytest.fixture()
def runner():
    return CliRunner()


def write_experiment(path, **overrides):
    cfg = ExperimentConfig(t_settle=30.0, sa_max_iter=12, **overrides)
    cfg.write_resolved(path)
    return cfg


def test_simulate_writes_snapshots(tmp_path, runner):
    cfg = tmp_path / "machine.txt"
    cfg.write_text(MACHINE_CFG)
    out = tmp_path / "out"
    result = runner.invoke(main, ["simulate", "--config", str(cfg), "--out", str(out)])
    assert result.exit_code == 0, result.output
    assert (out / "fields.csv").exists()
    assert (out / "fronts.csv").exists()
    assert (out / "resolved_config.txt").exists()


def test_simulate_missing_config_exits_2(tmp_path, runner):
    result = runner.invoke(main, ["simulate", "--config", str(tmp_path / "nope.txt")])
    assert result.exit_code == 2


def test_identify_synthesizes_and_reports(tmp_path, runner):
    cfg_path = tmp_path / "exp.txt"
    write_experiment(cfg_path)
    out = tmp_path / "out"
    result = runner.invoke(main, ["identify", "--config", str(cfg_path),
                                  "--out", str(out)])
    assert result.exit_code == 0, result.output
    assert "alpha_c" in result.output
    assert (out / "identification_report.csv").exists()
    assert (out / "profile.txt").exists()
    assert (out / "resolved_config.txt").exists()


def test_identify_degenerate_measurements_exits_4(tmp_path, runner):
    cfg_path = tmp_path / "exp.txt"
    cfg = write_experiment(cfg_path)
    grid = cfg.grid()
    meas = tmp_path / "meas.csv"
    rows = ["coord,T,xi,fully_solid"]
    # every node exactly at the environment temperature: no information
    rows += [f"{c:.10g},{cfg.t_i},{grid.across[0] + 0.05:.10g},0" for c in grid.along]
    meas.write_text("\n".join(rows) + "\n")
    result = runner.invoke(main, ["identify", "--config", str(cfg_path),
                                  "--measurements", str(meas),
                                  "--out", str(tmp_path / "out")])
    assert result.exit_code == 4, result.output


def test_identify_wrong_node_count_exits_2(tmp_path, runner):
    cfg_path = tmp_path / "exp.txt"
    write_experiment(cfg_path)
    meas = tmp_path / "meas.csv"
    meas.write_text("coord,T\n0.0,1200.0\n0.01,1200.0\n")
    result = runner.invoke(main, ["identify", "--config", str(cfg_path),
                                  "--measurements", str(meas),
                                  "--out", str(tmp_path / "out")])
    assert result.exit_code == 2


def test_tune_runs_and_writes_trajectory(tmp_path, runner):
    cfg_path = tmp_path / "exp.txt"
    write_experiment(cfg_path)
    out = tmp_path / "out"
    result = runner.invoke(main, ["tune", "--config", str(cfg_path),
                                  "--seq", "harmonic", "--a", "1.0",
                                  "--out", str(out)])
    assert result.exit_code == 0, result.output
    assert list(out.glob("trajectory_*.csv"))


def test_tune_negative_b_exits_2(tmp_path, runner):
    cfg_path = tmp_path / "exp.txt"
    write_experiment(cfg_path)
    result = runner.invoke(main, ["tune", "--config", str(cfg_path),
                                  "--seq", "harmonic", "--a", "1.0", "--b", "-3",
                                  "--out", str(tmp_path / "out")])
    assert result.exit_code == 2
    assert "config error" in result.output


def test_tune_unstable_dt_exits_3(tmp_path, runner):
    cfg_path = tmp_path / "exp.txt"
    write_experiment(cfg_path, dt=50.0)   # far beyond the stability bound
    result = runner.invoke(main, ["tune", "--config", str(cfg_path),
                                  "--seq", "harmonic", "--a", "1.0",
                                  "--out", str(tmp_path / "out")])
    assert result.exit_code == 3
    assert "numeric failure" in result.output


def test_sweep_with_grid_file(tmp_path, runner):
    cfg_path = tmp_path / "exp.txt"
    write_experiment(cfg_path)
    grid_path = tmp_path / "grid.txt"
    grid_path.write_text("[sweep]\ncell1 = harmonic 1.0\n")
    out = tmp_path / "out"
    result = runner.invoke(main, ["sweep", "--config", str(cfg_path),
                                  "--grid", str(grid_path), "--out", str(out)])
    assert result.exit_code == 0, result.output
    assert (out / "sweep_summary.csv").exists()
    assert (out / "tuning_trajectories.svg").exists()


def test_sweep_bad_grid_exits_2(tmp_path, runner):
    cfg_path = tmp_path / "exp.txt"
    write_experiment(cfg_path)
    grid_path = tmp_path / "grid.txt"
    grid_path.write_text("[sweep]\ncell1 = harmonic\n")
    result = runner.invoke(main, ["sweep", "--config", str(cfg_path),
                                  "--grid", str(grid_path),
                                  "--out", str(tmp_path / "out")])
    assert result.exit_code == 2
