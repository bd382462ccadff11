import numpy as np
import pytest

from castcool import configio, kvformat
from castcool.errors import ConfigError


MINIMAL = """
[run]
t_end = 2.0
v = 0.0166667
t_cast = 1820.0

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
"""


def load(tmp_path, text):
    path = tmp_path / "machine.txt"
    path.write_text(text)
    return configio.load_simulation(path)


def test_minimal_section_only_machine(tmp_path):
    machine, run, scalars = load(tmp_path, MINIMAL)
    assert machine.mould_solver is None
    assert list(machine.sections) == ["curv1"]
    assert run["t_end"] == 2.0
    machine.run_to_time(run["t_end"])
    assert np.isfinite(machine.section("curv1").t).all()


def test_mould_block_enables_mould(tmp_path):
    text = MINIMAL + "\n[mould]\nbig_z = 0.7\nd = 0.135\nz0 = -0.1\ndelta = 0.0005\n"
    machine, run, _ = load(tmp_path, text)
    assert machine.mould_solver is not None
    machine.run_to_time(1.0)


def test_shell_initial_profile_applies_to_sections(tmp_path):
    text = MINIMAL + ("\n[run]\nt_surface_init = 1350\n"
                      "t_core_init = 1820\nshell_depth = 0.05\n")
    machine, _, _ = load(tmp_path, text)
    solver = machine.section("curv1")
    assert solver.t[2, :].max() == pytest.approx(1820.0)
    assert solver.t[2, 1] < 1820.0


def test_unknown_section_kind_rejected(tmp_path):
    with pytest.raises(ConfigError, match="unknown kind"):
        load(tmp_path, MINIMAL.replace("kind = curvilinear", "kind = wavy"))


def test_two_rectilinear_sections_rejected(tmp_path):
    extra = """
[section r1]
kind = rectilinear
x_f = 1.0
nozzles = 0.5
w = 0.1

[section r2]
kind = rectilinear
x_f = 1.0
nozzles = 0.5
w = 0.1
"""
    with pytest.raises(ConfigError, match="rectilinear"):
        load(tmp_path, MINIMAL + extra)


def test_empty_machine_rejected(tmp_path):
    with pytest.raises(ConfigError, match="no machine parts"):
        load(tmp_path, "[run]\nt_end = 1.0\n")


def test_resolved_copy_roundtrips(tmp_path):
    _, _, scalars = load(tmp_path, MINIMAL)
    path = configio.write_resolved_copy(scalars, tmp_path / "out")
    back, _ = kvformat.read_kv_file(path)
    assert back["run.t_end"] == "2.0"
    assert back["section 1.kind"] == "curvilinear"


def test_kvformat_errors():
    with pytest.raises(ConfigError, match="expected"):
        kvformat.parse_kv_text("just some words\n")
    with pytest.raises(ConfigError, match="ragged"):
        kvformat.parse_kv_text("[t]\n1 2\n1 2 3\n")
    scalars, tables = kvformat.parse_kv_text("a = 1\n[t]\n1 2\n3 4\n")
    assert tables["t"].shape == (2, 2)
    assert kvformat.get_float(scalars, "a") == 1.0
    with pytest.raises(ConfigError, match="not a number"):
        kvformat.get_float({"x": "abc"}, "x")
    with pytest.raises(ConfigError, match="missing"):
        kvformat.get_float(scalars, "absent")
