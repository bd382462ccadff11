"""Mould-region model: moving ingot, conducting wall, cooling-water channel.

The ingot half-thickness is resolved from the symmetry plane to the
air-gap face; the gap couples ingot and wall with one flux expression
applied to both sides, so the exchanged energy is identical by
construction.  Water flows from the inlet at the mould bottom toward the
wall top and is advanced by an exact characteristic update, which makes
its steady state match the continuous channel balance at the nodes.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ConfigError, NumericFailure, StabilityError
from .geometry import MouldGeometry, MouldGrid
from .materials import MaterialProperties


@dataclass(frozen=True)
class WaterChannel:
    c_w: float          # volumetric heat capacity of water [J/(m^3 K)]
    s_ch: float         # channel cross-section [m^2]
    v_water: float      # water speed along the channel [m/s]
    p_i: float          # interior wall perimeter [m]
    p_e: float          # exterior wall perimeter [m]
    alpha_1: float      # wall-to-water coefficient [W/(m^2 K)]
    alpha_e: float      # water-to-exterior coefficient [W/(m^2 K)]
    t_e: float          # exterior wall temperature [K]
    t_inlet: object     # inlet temperature: constant or callable(time)

    def inlet_at(self, time: float) -> float:
        if callable(self.t_inlet):
            return float(self.t_inlet(time))
        return float(self.t_inlet)


@dataclass(frozen=True)
class MouldEnvironment:
    sigma_n: float      # gap radiation coefficient, (T/100)^4 form
    c_n: float          # radiation coefficient above the meniscus, (T/100)^4 form
    lambda_gz: float    # gap gas-mixture conduction [W/(m K)]
    alpha_2: float      # wall bottom (z = Z) convection
    alpha_3: float      # wall top (z = z0) convection
    alpha_4: float      # wall inner face above the meniscus
    t_os1: float        # environment over the melt surface [K]
    t_os2: float
    t_os3: float


def _cell_widths(coords: np.ndarray) -> np.ndarray:
    h = coords[1] - coords[0]
    w = np.full(coords.size, h)
    w[0] = w[-1] = 0.5 * h
    return w


class MouldSolver:
    """Coupled ingot/wall/water stepper for the mould region."""

    def __init__(self, mould: MouldGeometry, grid: MouldGrid, *,
                 steel: MaterialProperties, wall_material: MaterialProperties,
                 env: MouldEnvironment, water: WaterChannel,
                 v: float, t_cast: float,
                 initial_ingot=None, initial_wall=None, initial_water=None):
        self.mould = mould
        self.grid = grid
        self.steel = steel
        self.wall_material = wall_material
        self.env = env
        self.water = water
        self.v = float(v)
        self.t_cast = float(t_cast)
        self.time = 0.0

        nz, nx = grid.z.size, grid.x.size
        nzw, nxw = grid.wall_z.size, grid.wall_x.size
        self.t_ingot = self._init_field(initial_ingot, (nz, nx), t_cast)
        self.t_wall = self._init_field(initial_wall, (nzw, nxw), water.inlet_at(0.0))
        if initial_water is None:
            self.t_water = np.full(nzw, water.inlet_at(0.0))
        else:
            self.t_water = np.array(initial_water, dtype=float)
            if self.t_water.shape != (nzw,):
                raise ConfigError(f"initial water profile must have shape ({nzw},)")

        self._wx = _cell_widths(grid.x)
        self._wz = _cell_widths(grid.z)
        self._wxw = _cell_widths(grid.wall_x)
        self._wzw = _cell_widths(grid.wall_z)
        self.dz = grid.z[1] - grid.z[0]

    @staticmethod
    def _init_field(initial, shape, fallback):
        if initial is None:
            return np.full(shape, float(fallback))
        field = np.asarray(initial, dtype=float)
        if field.ndim == 0:
            return np.full(shape, float(field))
        if field.shape != shape:
            raise ConfigError(f"initial field must have shape {shape}")
        return field.copy()

    # -- coupling fluxes ---------------------------------------------------

    def gap_flux(self) -> np.ndarray:
        """Heat flux density across the air gap, positive into the ingot."""
        t_i = self.t_ingot[:, -1]
        t_w = self.t_wall[self.grid.n_above:, 0]
        cond = self.env.lambda_gz / self.mould.delta * (t_w - t_i)
        rad = self.env.sigma_n * ((t_w / 100.0) ** 4 - (t_i / 100.0) ** 4)
        return cond + rad

    # -- stability -----------------------------------------------------------

    def _gap_exchange_coefficient(self) -> float:
        """Linearized gap conductance for the stability estimate."""
        t_hot = max(float(self.t_ingot.max()), float(self.t_wall.max()))
        return (self.env.lambda_gz / self.mould.delta
                + 4.0 * self.env.sigma_n * t_hot ** 3 / 1e8)

    def admissible_dt(self) -> float:
        h_gap = self._gap_exchange_coefficient()
        t_wall_hot = float(self.t_wall.max())
        h_wall = max(self.water.alpha_1,
                     self.env.alpha_4 + 4.0 * self.env.c_n * t_wall_hot ** 3 / 1e8,
                     h_gap, self.env.alpha_2, self.env.alpha_3)
        bounds = []
        for t, mat, coords, h_face in (
                (self.t_ingot, self.steel, (self.grid.x, self.grid.z), h_gap),
                (self.t_wall, self.wall_material, (self.grid.wall_x, self.grid.wall_z),
                 h_wall)):
            c, rho, lam = mat.props_at(t)
            hx = coords[0][1] - coords[0][0]
            hz = coords[1][1] - coords[1][0]
            diff_rate = float(np.max(lam / (c * rho) * (1.0 / hx ** 2 + 1.0 / hz ** 2)))
            # boundary half-cells also relax against their environments
            robin_rate = h_face / (float(np.min(c * rho)) * 0.5 * min(hx, hz))
            adv_rate = self.v / self.dz if (self.v > 0 and t is self.t_ingot) else 0.0
            bounds.append(min(0.4 / diff_rate,
                              0.95 / (2.0 * diff_rate + robin_rate + adv_rate)))
        return float(min(bounds))

    # -- stepping --------------------------------------------------------------

    def step_mould(self, dt: float) -> None:
        adm = self.admissible_dt()
        if dt > adm * (1.0 + 1e-9):
            raise StabilityError(dt, adm)
        f_gap = self.gap_flux()
        self.t_ingot = self._advance_ingot(dt, f_gap)
        self.t_wall = self._advance_wall(dt, f_gap)
        if not (np.isfinite(self.t_ingot).all() and np.isfinite(self.t_wall).all()):
            raise NumericFailure(f"non-finite mould temperatures at t={self.time:.3f} s")
        self.time += dt

    def _advance_ingot(self, dt: float, f_gap: np.ndarray) -> np.ndarray:
        t = self.t_ingot
        mat = self.steel
        c, rho, lam = mat.props_at(t)
        ceff = c * rho
        band = np.abs(t - mat.t_kr) <= mat.dt_smear
        if band.any():
            latent = mat.mu * float(mat.rho_table(mat.t_kr))
            ceff = ceff + (latent / (2.0 * mat.dt_smear)) * band
        hx = self.grid.x[1] - self.grid.x[0]
        hz = self.dz
        f_x = 0.5 * (lam[:, :-1] + lam[:, 1:]) * (t[:, 1:] - t[:, :-1]) / hx
        f_z = 0.5 * (lam[:-1, :] + lam[1:, :]) * (t[1:, :] - t[:-1, :]) / hz
        power = np.zeros_like(t)
        power[:, :-1] += f_x * self._wz[:, None]
        power[:, 1:] -= f_x * self._wz[:, None]
        power[:-1, :] += f_z * self._wx[None, :]
        power[1:, :] -= f_z * self._wx[None, :]
        power[:, -1] += f_gap * self._wz
        vols = self._wz[:, None] * self._wx[None, :]
        t_new = t + dt * power / (ceff * vols)
        if self.v > 0:
            cou = self.v * dt / hz
            h = mat.enthalpy(t)
            h_up = np.vstack([np.full((1, t.shape[1]), mat.enthalpy(self.t_cast)), h[:-1, :]])
            t_new += mat.temperature_of_enthalpy(h - cou * (h - h_up)) - t
        return t_new

    def _advance_wall(self, dt: float, f_gap: np.ndarray) -> np.ndarray:
        t = self.t_wall
        env = self.env
        c, rho, lam = self.wall_material.props_at(t)
        hx = self.grid.wall_x[1] - self.grid.wall_x[0]
        hz = self.grid.wall_z[1] - self.grid.wall_z[0]
        power = np.zeros_like(t)
        f_x = 0.5 * (lam[:, :-1] + lam[:, 1:]) * (t[:, 1:] - t[:, :-1]) / hx
        power[:, :-1] += f_x * self._wzw[:, None]
        power[:, 1:] -= f_x * self._wzw[:, None]
        f_z = 0.5 * (lam[:-1, :] + lam[1:, :]) * (t[1:, :] - t[:-1, :]) / hz
        power[:-1, :] += f_z * self._wxw[None, :]
        power[1:, :] -= f_z * self._wxw[None, :]
        # inner face: gap coupling below the meniscus, ambient exchange above
        na = self.grid.n_above
        power[na:, 0] += -f_gap * self._wzw[na:]
        if na:
            ts = t[:na, 0]
            flux_above = (env.alpha_4 * (env.t_os1 - ts)
                          + env.c_n * ((env.t_os1 / 100.0) ** 4 - (ts / 100.0) ** 4))
            power[:na, 0] += flux_above * self._wzw[:na]
        # outer face: cooling water
        power[:, -1] += self.water.alpha_1 * (self.t_water - t[:, -1]) * self._wzw
        # channel ends
        power[-1, :] += env.alpha_2 * (env.t_os2 - t[-1, :]) * self._wxw
        power[0, :] += env.alpha_3 * (env.t_os3 - t[0, :]) * self._wxw
        vols = self._wzw[:, None] * self._wxw[None, :]
        return t + dt * power / (c * rho * vols)

    def step_water(self, dt: float) -> None:
        """Advance the channel by an exact characteristic update.

        The parcel arriving at each node is traced upstream (toward the
        inlet at z = Z) and relaxed analytically against the local wall
        temperature, so a constant-wall steady state reproduces the
        continuous balance solution exactly at the nodes.
        """
        w = self.water
        z = self.grid.wall_z
        feet = z + w.v_water * dt
        t_inlet = w.inlet_at(self.time)
        upstream = np.interp(feet, z, self.t_water, right=t_inlet)
        t_wall_face = self.t_wall[:, -1]
        gamma = (w.p_i * w.alpha_1 - w.p_e * w.alpha_e) / (w.c_w * w.s_ch)
        r = (w.p_i * w.alpha_1 * t_wall_face - w.p_e * w.alpha_e * w.t_e) / (w.c_w * w.s_ch)
        if abs(gamma) < 1e-300:
            t_new = upstream + r * dt
        else:
            t_eq = r / gamma
            t_new = t_eq + (upstream - t_eq) * np.exp(-gamma * dt)
        t_new[-1] = w.inlet_at(self.time + dt)
        if not np.isfinite(t_new).all():
            raise NumericFailure("non-finite water temperatures")
        self.t_water = t_new

    def step(self, dt: float) -> None:
        self.step_mould(dt)
        self.step_water(dt)

    # -- observables -------------------------------------------------------------

    def exit_profile(self) -> np.ndarray:
        """Ingot temperature across the half-thickness at the mould exit."""
        return self.t_ingot[-1, :].copy()

    def surface_temperatures(self):
        return self.grid.z.copy(), self.t_ingot[:, -1].copy()
