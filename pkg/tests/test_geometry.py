import numpy as np
import pytest
from hypothesis import given, strategies as st

from castcool.errors import ConfigError
from castcool.geometry import (CurvilinearSection, GridSpec, MouldGeometry,
                               RectilinearSection, build_section_grid,
                               classify_surface, nearest_offset,
                               nozzle_offset_checked)


def section(nozzles=(0.1,), w=0.02, span=0.2):
    return CurvilinearSection(index_m=1, r_m=2.0, phi_span=span,
                              nozzles=nozzles, w=w)


def test_no_nozzles_all_k():
    grid = build_section_grid(section(nozzles=()), 0.05, GridSpec(q=0.01, d_phi=0.01))
    assert not grid.in_b.any()
    assert grid.b_nodes().size == 0
    assert grid.k_nodes().size == grid.n_along


def test_node_inside_footprint_is_b():
    in_b, y, idx = classify_surface((0.0,), 0.05, np.array([0.02]))
    assert in_b[0] and y[0] == pytest.approx(0.02) and idx[0] == 0


def test_footprint_boundary_inclusive():
    in_b, y, _ = classify_surface((0.0,), 0.05, np.array([0.05]))
    assert in_b[0] and y[0] == pytest.approx(0.05)


def test_k_b_partition_covers_surface(small_curv_grid):
    grid = small_curv_grid
    union = np.sort(np.concatenate([grid.k_nodes(), grid.b_nodes()]))
    assert np.array_equal(union, np.arange(grid.n_along))


def test_nearest_offset_at_axis_and_edge():
    assert nearest_offset((0.3,), 0.3)[0] == 0.0
    off, _ = nearest_offset((0.3,), 0.35)
    assert off == pytest.approx(0.05)


def test_nearest_offset_picks_nearest_of_two():
    off, k = nearest_offset((0.0, 0.2), 0.09)
    assert off == pytest.approx(0.09)
    assert k == 0


def test_offset_outside_footprint_is_logic_error(small_curv_grid):
    grid = small_curv_grid
    k_node = int(grid.k_nodes()[0])
    with pytest.raises(ValueError):
        nozzle_offset_checked(grid, k_node)
    b_node = int(grid.b_nodes()[0])
    assert abs(nozzle_offset_checked(grid, b_node)) <= grid.w


@given(st.floats(min_value=1e-4, max_value=0.02))
def test_offset_odd_about_axis(d):
    left, _ = nearest_offset((0.1,), 0.1 - d)
    right, _ = nearest_offset((0.1,), 0.1 + d)
    assert left == pytest.approx(-right)


def test_overlapping_footprints_rejected():
    with pytest.raises(ConfigError, match="overlap"):
        section(nozzles=(0.08, 0.10), w=0.02)


def test_footprint_outside_span_rejected():
    with pytest.raises(ConfigError, match="outside"):
        section(nozzles=(0.199,), w=0.02)


def test_touching_footprints_allowed():
    sec = section(nozzles=(0.06, 0.10), w=0.02)
    assert sec.nozzles == (0.06, 0.10)


def test_stencil_depth_guard():
    with pytest.raises(ConfigError, match="at least 3"):
        build_section_grid(section(), 0.05, GridSpec(q=0.2, d_phi=0.01))


def test_mould_geometry_invariants():
    with pytest.raises(ConfigError):
        MouldGeometry(l=0.1, big_z=0.7, d=0.1, z0=-0.1, delta=5e-4)
    with pytest.raises(ConfigError):
        MouldGeometry(l=0.1, big_z=0.7, d=0.2, z0=0.1, delta=5e-4)


def test_angular_velocity_uses_mid_thickness():
    sec = section()
    assert sec.angular_velocity(0.0167, 0.1) == pytest.approx(0.0167 / 2.1)


def test_rectilinear_grid_coordinates():
    sec = RectilinearSection(z_p=0.3, x_f=1.0, nozzles=(0.5,), w=0.1)
    grid = build_section_grid(sec, 0.1, GridSpec(q=0.02, d_x=0.1))
    assert grid.across[0] == pytest.approx(0.3)
    assert grid.across[-1] == pytest.approx(0.5)
    assert grid.along[-1] == pytest.approx(1.0)
