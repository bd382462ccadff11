"""Whole-machine orchestration: mould, curved sections, straight run-out.

Each part owns its own solver; per step the inlet profile of every section
is refreshed from the current exit of the part upstream (the mould exit is
mirrored from half to full thickness, curved-to-straight handover copies
nodal values at matching arc length).
"""

from __future__ import annotations

import numpy as np

from .errors import ConfigError
from .fronts import section_front
from .geometry import CurvilinearSection, MachineLayout
from .materials import MaterialProperties
from .mould import MouldEnvironment, MouldSolver, WaterChannel
from .solver import build_section_solver


def mirror_half_profile(half: np.ndarray) -> np.ndarray:
    """Full-thickness profile from a symmetric half-thickness one."""
    return np.concatenate([half[::-1], half[1:]])


class MachineSolver:
    def __init__(self, layout: MachineLayout, grids: dict, *,
                 steel: MaterialProperties, v: float, t_cast: float,
                 profiles: dict, environments: dict,
                 wall_material: MaterialProperties | None = None,
                 mould_env: MouldEnvironment | None = None,
                 water: WaterChannel | None = None,
                 initial=None):
        self.layout = layout
        self.v = float(v)
        self.time = 0.0
        self.mould_solver = None
        if layout.mould is not None:
            if wall_material is None or mould_env is None or water is None:
                raise ConfigError("a mould needs wall material, environment and water data")
            # the mould always starts at pour temperature; `initial` shapes
            # the section fields only
            self.mould_solver = MouldSolver(
                layout.mould, grids["mould"], steel=steel,
                wall_material=wall_material, env=mould_env, water=water,
                v=v, t_cast=t_cast)

        self.sections: dict[str, object] = {}
        upstream_profile = None
        if self.mould_solver is not None:
            upstream_profile = mirror_half_profile(self.mould_solver.exit_profile())
        for section in layout.sections():
            sid = section.section_id
            grid = grids[sid]
            if sid not in profiles or sid not in environments:
                raise ConfigError(f"missing CHTC profiles or environment for {sid!r}")
            inner_profile, outer_profile = profiles[sid]
            speed = (section.angular_velocity(v, layout.l)
                     if isinstance(section, CurvilinearSection) else v)
            inlet = upstream_profile
            if inlet is None:
                inlet = self._initial_profile(initial, grid, t_cast)
            elif inlet.shape != (grid.n_across,):
                raise ConfigError(f"handover into {sid!r}: upstream exit has "
                                  f"{inlet.size} nodes, section needs {grid.n_across}")
            init = initial if initial is not None else np.tile(inlet, (grid.n_along, 1))
            solver = build_section_solver(
                grid, steel, environments[sid],
                inner_profile=inner_profile, outer_profile=outer_profile,
                speed=speed, inlet_profile=inlet, initial=init)
            self.sections[sid] = solver
            upstream_profile = solver.t[-1, :].copy()

    @staticmethod
    def _initial_profile(initial, grid, t_cast):
        if initial is None:
            return np.full(grid.n_across, float(t_cast))
        arr = np.asarray(initial, dtype=float)
        if arr.ndim == 0:
            return np.full(grid.n_across, float(arr))
        if arr.ndim == 1:
            return arr.copy()
        return arr[0, :].copy()

    # -- stepping ------------------------------------------------------------

    def admissible_dt(self) -> float:
        bounds = [s.admissible_dt() for s in self.sections.values()]
        if self.mould_solver is not None:
            bounds.append(self.mould_solver.admissible_dt())
        if not bounds:
            raise ConfigError("machine has no parts")
        return float(min(bounds))

    def step(self, dt: float) -> None:
        if self.mould_solver is not None:
            self.mould_solver.step(dt)
            upstream = mirror_half_profile(self.mould_solver.exit_profile())
        else:
            upstream = None
        for solver in self.sections.values():
            if upstream is not None:
                solver.inlet_profile = upstream
            solver.step(dt)
            upstream = solver.t[-1, :].copy()
        self.time += dt

    def run_to_time(self, t_end: float, *, dt: float = 0.0,
                    callback=None, callback_dt: float = 0.0) -> None:
        if t_end < self.time:
            raise ConfigError("t_end lies in the past of this machine")
        next_cb = self.time + callback_dt if (callback and callback_dt) else np.inf
        while self.time < t_end - 1e-12:
            step = dt if dt else 0.9 * self.admissible_dt()
            step = min(step, t_end - self.time, next_cb - self.time)
            self.step(step)
            if callback and self.time >= next_cb - 1e-12:
                callback(self)
                next_cb += callback_dt

    # -- observables --------------------------------------------------------------

    def section(self, section_id: str):
        try:
            return self.sections[section_id]
        except KeyError:
            raise ConfigError(f"unknown section id {section_id!r}") from None

    def surface_temperature_profile(self, section_id: str, face: str = "inner"):
        return self.section(section_id).surface_temperatures(face)

    def fronts(self) -> dict:
        return {sid: section_front(s) for sid, s in self.sections.items()}

    def all_solvers(self) -> dict:
        return dict(self.sections)
