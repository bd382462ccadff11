"""Loaders that assemble a whole-machine run from one key-value file.

The file lists the machine parts in casting order: an optional [mould]
block, [section N] blocks for the curved guides and an optional
[section rect] run-out, plus [run] and [grid] blocks.  Every section block
carries its own coefficients and environment so a forward run is fully
specified by the file.
"""

from __future__ import annotations

from pathlib import Path

from . import kvformat
from .chtc import ChtcProfile, uniform_profile
from .errors import ConfigError
from .geometry import (CurvilinearSection, GridSpec, MachineLayout, MouldGeometry,
                       RectilinearSection, build_grids)
from .machine import MachineSolver
from .materials import builtin_material, load_material
from .mould import MouldEnvironment, WaterChannel
from .solver import SectionEnvironment


def _material_from_name(name: str):
    path = Path(name)
    if path.suffix == ".mat" or path.exists():
        return load_material(path)
    return builtin_material(name)


def _section_block_names(scalars: dict) -> list[str]:
    seen = []
    for key in scalars:
        block, _, _ = key.rpartition(".")
        if block.startswith("section ") and block not in seen:
            seen.append(block)
    return seen


def load_simulation(path):
    """Parse a simulation file into (machine, run options)."""
    scalars, _ = kvformat.read_kv_file(path)
    g = lambda key, default=None: kvformat.get_float(scalars, key, default)

    run = {
        "t_end": g("run.t_end", 60.0),
        "dt": g("run.dt", 0.0),
        "sample_dt": g("run.sample_dt", 0.0),
        "v": g("run.v", 1.0 / 60.0),
        "t_cast": g("run.t_cast", 1820.0),
    }
    steel = _material_from_name(kvformat.get_str(scalars, "run.material", "st40"))
    layout_l = g("layout.l", 0.1)

    spec = GridSpec(
        q=g("grid.q", 0.01),
        d_phi=g("grid.d_phi", 0.0025),
        d_z=g("grid.d_z", 0.025),
        d_x=g("grid.d_x", 0.02),
        dt=g("grid.dt", 0.0),
    )

    mould = None
    mould_env = None
    water = None
    wall_material = None
    if any(key.startswith("mould.") for key in scalars):
        mould = MouldGeometry(
            l=layout_l,
            big_z=g("mould.big_z", 0.7),
            d=g("mould.d", layout_l + g("mould.delta", 5e-4) + 0.03),
            z0=g("mould.z0", -0.1),
            delta=g("mould.delta", 5e-4),
        )
        mould_env = MouldEnvironment(
            sigma_n=g("mould.sigma_n", 4.5),
            c_n=g("mould.c_n", 4.5),
            lambda_gz=g("mould.lambda_gz", 0.08),
            alpha_2=g("mould.alpha_2", 50.0),
            alpha_3=g("mould.alpha_3", 50.0),
            alpha_4=g("mould.alpha_4", 100.0),
            t_os1=g("mould.t_os1", 1600.0),
            t_os2=g("mould.t_os2", 320.0),
            t_os3=g("mould.t_os3", 320.0),
        )
        water = WaterChannel(
            c_w=g("mould.c_w", 4.18e6),
            s_ch=g("mould.s_ch", 2e-3),
            v_water=g("mould.v_water", 5.0),
            p_i=g("mould.p_i", 2.2),
            p_e=g("mould.p_e", 2.4),
            alpha_1=g("mould.alpha_1", 2e4),
            alpha_e=g("mould.alpha_e", 0.0),
            t_e=g("mould.t_e", 310.0),
            t_inlet=g("mould.t_water_inlet", 305.0),
        )
        wall_name = kvformat.get_str(scalars, "mould.wall_material", "")
        if wall_name:
            wall_material = _material_from_name(wall_name)
        else:
            from .materials import constant_material
            wall_material = constant_material(390.0, 8900.0, 380.0, mu=1.0,
                                              t_kr=1357.0, dt_smear=1.0,
                                              name="copper-wall")

    curvilinear = []
    rectilinear = None
    profiles = {}
    environments = {}
    for block in _section_block_names(scalars):
        prefix = f"{block}."
        kind = kvformat.get_str(scalars, prefix + "kind", "curvilinear")
        nozzles = tuple(kvformat.get_floats(scalars, prefix + "nozzles", default=()))
        w = g(prefix + "w", 0.05)
        if kind == "curvilinear":
            index = len(curvilinear) + 1
            section = CurvilinearSection(
                index_m=index,
                r_m=g(prefix + "r_m", 8.0),
                phi_span=g(prefix + "phi_span", 0.3),
                nozzles=nozzles, w=w)
            curvilinear.append(section)
        elif kind == "rectilinear":
            if rectilinear is not None:
                raise ConfigError("only one rectilinear section is supported")
            section = RectilinearSection(
                z_p=g(prefix + "z_p", 0.0),
                x_f=g(prefix + "x_f", 2.0),
                nozzles=nozzles, w=w)
            rectilinear = section
        else:
            raise ConfigError(f"{block}: unknown kind {kind!r}")
        alpha_c = g(prefix + "alpha_c", 250.0)
        alpha_p = g(prefix + "alpha_p", 0.0)
        if nozzles and alpha_p > 0:
            inner = ChtcProfile(alpha_c, alpha_p, w, nozzles)
        else:
            inner = uniform_profile(alpha_c, w)
        outer = uniform_profile(g(prefix + "alpha_c_outer", alpha_c), w)
        profiles[section.section_id] = (inner, outer)
        environments[section.section_id] = SectionEnvironment(
            c_i=g(prefix + "c_i", 4.5e-8), t_i=g(prefix + "t_i", 350.0),
            c_e=g(prefix + "c_e", 4.5e-8), t_e=g(prefix + "t_e", 350.0))

    if not curvilinear and rectilinear is None and mould is None:
        raise ConfigError("simulation file defines no machine parts")

    layout = MachineLayout(l=layout_l, mould=mould,
                           curvilinear=tuple(curvilinear), rectilinear=rectilinear)
    grids = build_grids(layout, spec)

    initial = None
    if "run.t_surface_init" in scalars:
        from .harness import shell_profile
        any_grid = next(grids[s.section_id] for s in layout.sections()) \
            if layout.sections() else None
        if any_grid is not None:
            initial = shell_profile(any_grid.across,
                                    g("run.t_surface_init"),
                                    g("run.t_core_init", run["t_cast"]),
                                    g("run.shell_depth", 0.05))

    machine = MachineSolver(layout, grids, steel=steel, v=run["v"],
                            t_cast=run["t_cast"], profiles=profiles,
                            environments=environments,
                            wall_material=wall_material, mould_env=mould_env,
                            water=water, initial=initial)
    return machine, run, scalars


def write_resolved_copy(scalars: dict, out_dir, name: str = "resolved_config.txt") -> Path:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    path = out / name
    kvformat.write_kv_file(path, scalars, header="resolved configuration")
    return path
