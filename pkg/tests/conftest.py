import pytest

from castcool.geometry import (CurvilinearSection, GridSpec, RectilinearSection,
                               build_section_grid)
from castcool.materials import builtin_material, constant_material
from castcool.solver import SectionSolver, SurfaceCooling


@pytest.fixture(scope="session")
def st40():
    return builtin_material("st40")


@pytest.fixture(scope="session")
def plain_steel():
    # constant-property steel with the crystallization band far above use
    return constant_material(700.0, 7400.0, 30.0, mu=1e5, t_kr=5000.0,
                             dt_smear=5.0, t_lo=200.0, t_hi=6000.0)


@pytest.fixture()
def small_curv_grid():
    section = CurvilinearSection(index_m=1, r_m=2.0, phi_span=0.2,
                                 nozzles=(0.1,), w=0.02)
    return build_section_grid(section, 0.05, GridSpec(q=0.01, d_phi=0.01))


@pytest.fixture()
def small_rect_grid():
    section = RectilinearSection(z_p=0.0, x_f=0.5, nozzles=(0.25,), w=0.05)
    return build_section_grid(section, 0.05, GridSpec(q=0.01, d_x=0.05))


def make_section_solver(grid, material, t0=600.0, alpha_i=500.0, alpha_o=250.0,
                        t_env=600.0, c_rad=0.0, speed=0.0, inlet=None):
    return SectionSolver(grid, material,
                         inner=SurfaceCooling(alpha_i, c_rad, t_env),
                         outer=SurfaceCooling(alpha_o, c_rad, t_env),
                         speed=speed, inlet_profile=inlet, initial=t0)
