"""Explicit forward solver for the cooling sections of the caster.

One kernel serves both the curved (polar) and straight (Cartesian) guide
sections: finite-volume diffusion with temperature-dependent properties,
conservative first-order upwind advection of enthalpy along the casting
direction, and Robin-plus-radiation surface conditions imposed through the
same one-sided three-point stencil that the identification stage inverts.
Latent heat enters through the effective-capacity band of the material, so
the phase front is simply the crystallization isotherm of the field.
"""

from __future__ import annotations

import csv
import warnings
from dataclasses import dataclass

import numpy as np

from .chtc import ChtcProfile
from .errors import ConfigError, NumericFailure, StabilityError
from .geometry import SectionGrid
from .materials import MaterialProperties


@dataclass(frozen=True)
class SurfaceCooling:
    """Robin + radiation data for one cooled face."""

    alpha: np.ndarray | float   # convective coefficient per surface node
    c_rad: float                # radiation coefficient for plain T^4 differences
    t_env: float                # environment temperature [K]

    def alpha_vector(self, n: int) -> np.ndarray:
        a = np.asarray(self.alpha, dtype=float)
        if a.ndim == 0:
            return np.full(n, float(a))
        if a.shape != (n,):
            raise ConfigError(f"surface alpha has shape {a.shape}, expected ({n},)")
        return a


@dataclass(frozen=True)
class SectionEnvironment:
    """Radiation coefficients and environment temperatures of one section."""

    c_i: float      # inner-face radiation coefficient
    t_i: float      # inner-face environment temperature [K]
    c_e: float      # outer-face radiation coefficient
    t_e: float      # outer-face environment temperature [K]


class SectionSolver:
    """Time stepper for one guide section (curved or straight)."""

    def __init__(self, grid: SectionGrid, material: MaterialProperties, *,
                 inner: SurfaceCooling, outer: SurfaceCooling,
                 speed: float = 0.0, inlet_profile=None, initial=None):
        self.grid = grid
        self.material = material
        self.inner = inner
        self.outer = outer
        self.speed = float(speed)
        self.time = 0.0
        n, m = grid.n_along, grid.n_across
        if m < 3:
            raise ConfigError("section grid needs at least 3 nodes across the thickness")
        self.q = grid.step_across
        self._alpha_inner = inner.alpha_vector(n)
        self._alpha_outer = outer.alpha_vector(n)

        if grid.kind == "curvilinear":
            r = grid.across
            r_face = 0.5 * (r[:-1] + r[1:])
            dphi = grid.step_along
            self.area_across = r_face * dphi          # face between j and j+1
            self.dist_along = r * dphi                # node spacing along, per level
            self.vol = r * self.q * dphi
        else:
            dx = grid.step_along
            self.area_across = np.full(m - 1, dx)
            self.dist_along = np.full(m, dx)
            self.vol = np.full(m, self.q * dx)
        self.area_along = self.q

        if self.speed < 0:
            raise ConfigError("casting speed must be >= 0")
        if self.speed > 0 and inlet_profile is None:
            raise ConfigError("advection requires an inlet profile")
        self.inlet_profile = None
        if inlet_profile is not None:
            self.inlet_profile = np.array(inlet_profile, dtype=float)
            if self.inlet_profile.shape != (m,):
                raise ConfigError(f"inlet profile must have shape ({m},)")

        if initial is None:
            raise ConfigError("an initial temperature field is required")
        t0 = np.asarray(initial, dtype=float)
        if t0.ndim == 0:
            t0 = np.full((n, m), float(t0))
        elif t0.ndim == 1 and t0.shape == (m,):
            t0 = np.tile(t0, (n, 1))
        elif t0.shape != (n, m):
            raise ConfigError(f"initial field must have shape ({n}, {m})")
        self.t = t0.copy()
        if self.inlet_profile is not None:
            self.t[0, :] = self.inlet_profile
        self._smear_warned = False
        # surface nodes start consistent with their boundary condition
        self._close_surfaces(self.t, self.t)

    # -- configuration helpers -------------------------------------------

    @property
    def advection_rate(self) -> float:
        """Upwind transport rate [1/s]: speed over the along-step.

        Derived from `speed` on every use, so a run may adjust the casting
        rate between steps.
        """
        return self.speed / self.grid.step_along

    def set_surface_profiles(self, inner_alpha=None, outer_alpha=None) -> None:
        n = self.grid.n_along
        if inner_alpha is not None:
            self._alpha_inner = SurfaceCooling(inner_alpha, self.inner.c_rad,
                                               self.inner.t_env).alpha_vector(n)
        if outer_alpha is not None:
            self._alpha_outer = SurfaceCooling(outer_alpha, self.outer.c_rad,
                                               self.outer.t_env).alpha_vector(n)

    # -- stability ---------------------------------------------------------

    def admissible_dt(self) -> float:
        c, rho, lam = self.material.props_at(self.t)
        denom = 1.0 / self.q ** 2 + 1.0 / self.dist_along[None, :] ** 2
        diff_rate = float(np.max(lam / (c * rho) * denom))
        bound = 0.4 / diff_rate
        if self.advection_rate > 0:
            # the combined explicit operator stays monotone only when the
            # diffusion weights (2 dt D) plus the courant number stay below 1
            bound = min(bound, 0.95 / (2.0 * diff_rate + self.advection_rate))
        return bound

    # -- stepping ----------------------------------------------------------

    def step(self, dt: float) -> None:
        adm = self.admissible_dt()
        if dt > adm * (1.0 + 1e-9):
            raise StabilityError(dt, adm)
        t = self.t
        c, rho, lam = self.material.props_at(t)
        ceff = c * rho
        band = np.abs(t - self.material.t_kr) <= self.material.dt_smear
        if band.any():
            latent = self.material.mu * float(self.material.rho_table(self.material.t_kr))
            ceff = ceff + (latent / (2.0 * self.material.dt_smear)) * band

        f_ac = 0.5 * (lam[:, :-1] + lam[:, 1:]) * (t[:, 1:] - t[:, :-1]) / self.q \
            * self.area_across[None, :]
        f_al = 0.5 * (lam[:-1, :] + lam[1:, :]) * (t[1:, :] - t[:-1, :]) \
            / self.dist_along[None, :] * self.area_along

        div = np.zeros_like(t)
        div[:, 1:-1] = f_ac[:, 1:] - f_ac[:, :-1]
        div[1:-1, :] += f_al[1:, :] - f_al[:-1, :]
        div[-1, :] += -f_al[-1, :]
        if self.inlet_profile is None:
            div[0, :] += f_al[0, :]

        dt_diff = dt * div / (ceff * self.vol[None, :])
        t_new = t + dt_diff

        if self.speed > 0:
            cou = self.advection_rate * dt
            h = self.material.enthalpy(t)
            h_adv = h.copy()
            h_adv[1:, :] -= cou * (h[1:, :] - h[:-1, :])
            t_new += self.material.temperature_of_enthalpy(h_adv) - t

        if self.inlet_profile is not None:
            t_new[0, :] = self.inlet_profile
        self._close_surfaces(t_new, t)

        if not np.isfinite(t_new).all():
            raise NumericFailure(f"non-finite temperatures after step at t={self.time:.3f} s")
        if band.any() and not self._smear_warned:
            # the advective part moves enthalpy conservatively; only the
            # capacity-form diffusion increment can skip the latent band
            jump = np.max(np.abs(dt_diff[band]))
            if jump > 0.5 * self.material.dt_smear:
                warnings.warn(
                    f"per-step diffusive temperature change {jump:.2f} K at front "
                    f"cells exceeds half the smearing width "
                    f"{self.material.dt_smear:.2f} K; refine dt or widen dt_smear",
                    RuntimeWarning)
                self._smear_warned = True
        self.t = t_new
        self.time += dt

    def _close_surfaces(self, t_new: np.ndarray, t_old: np.ndarray) -> None:
        rows = slice(1, None) if self.inlet_profile is not None else slice(0, None)
        t_new[rows, 0] = self._solve_surface(
            t_new[rows, 1], t_new[rows, 2],
            self._alpha_inner[rows], self.inner.c_rad, self.inner.t_env,
            t_old[rows, 0])
        t_new[rows, -1] = self._solve_surface(
            t_new[rows, -2], t_new[rows, -3],
            self._alpha_outer[rows], self.outer.c_rad, self.outer.t_env,
            t_old[rows, -1])

    def _solve_surface(self, t1, t2, alpha, c_rad, t_env, guess):
        # lam*(3 t0 - 4 t1 + t2)/(2q) = alpha*(t_env - t0) + c_rad*(t_env^4 - t0^4)
        # g(t0) is strictly increasing, so Newton from the previous value is safe.
        lo, hi = self.material.domain
        t0 = np.array(guess, dtype=float)
        for _ in range(50):
            lam = self.material.conductivity(np.clip(t0, lo, hi))
            k = 3.0 * lam / (2.0 * self.q)
            g = (k * t0 - lam * (4.0 * t1 - t2) / (2.0 * self.q)
                 - alpha * (t_env - t0) - c_rad * (t_env ** 4 - t0 ** 4))
            dg = k + alpha + 4.0 * c_rad * np.clip(t0, lo, hi) ** 3
            step = g / dg
            t0 -= step
            if np.max(np.abs(step)) < 1e-10 * max(1.0, np.max(np.abs(t0))):
                break
        return t0

    def run_to(self, t_end: float, *, dt: float = 0.0,
               callback=None, callback_dt: float = 0.0) -> None:
        """Advance to t_end; `callback(solver)` fires every callback_dt."""
        if t_end < self.time:
            raise ConfigError("t_end lies in the past of this solver")
        next_cb = self.time + callback_dt if (callback and callback_dt) else np.inf
        while self.time < t_end - 1e-12:
            step = dt if dt else 0.95 * self.admissible_dt()
            step = min(step, t_end - self.time, next_cb - self.time)
            self.step(step)
            if callback and self.time >= next_cb - 1e-12:
                callback(self)
                next_cb += callback_dt
        if callback and not callback_dt:
            callback(self)

    # -- observables ---------------------------------------------------------

    def surface_temperatures(self, face: str = "inner"):
        """(coordinate, temperature) pairs ordered along the casting direction."""
        if face == "inner":
            return self.grid.along.copy(), self.t[:, 0].copy()
        if face == "outer":
            return self.grid.along.copy(), self.t[:, -1].copy()
        raise ConfigError(f"unknown face {face!r}")

    def audited_cells(self):
        row0 = 1 if self.inlet_profile is not None else 0
        return row0, slice(row0, None), slice(1, -1)

    def total_enthalpy(self) -> float:
        _, rows, cols = self.audited_cells()
        h = self.material.enthalpy(self.t[rows, cols])
        return float(np.sum(h * self.vol[None, cols]))

    def boundary_power_components(self) -> dict:
        """Energy rates into the audited control volume, per boundary.

        Evaluated with the same discrete fluxes the update applies, on the
        current field.
        """
        t = self.t
        _, rows, cols = self.audited_cells()
        lam = self.material.conductivity(t)
        lam_f0 = 0.5 * (lam[rows, 0] + lam[rows, 1])
        lam_f1 = 0.5 * (lam[rows, -2] + lam[rows, -1])
        out = {
            "inner_face": float(np.sum(-lam_f0 * (t[rows, 1] - t[rows, 0]) / self.q
                                       * self.area_across[0])),
            "outer_face": float(np.sum(lam_f1 * (t[rows, -1] - t[rows, -2]) / self.q
                                       * self.area_across[-1])),
        }
        if self.inlet_profile is not None:
            lam_fa = 0.5 * (lam[0, cols] + lam[1, cols])
            out["inlet_conduction"] = float(np.sum(
                -lam_fa * (t[1, cols] - t[0, cols])
                / self.dist_along[cols] * self.area_along))
        if self.speed > 0:
            h_in = self.material.enthalpy(t[0, cols])
            h_out = self.material.enthalpy(t[-1, cols])
            out["advection_in"] = float(np.sum(
                self.advection_rate * self.vol[cols] * h_in))
            out["advection_out"] = -float(np.sum(
                self.advection_rate * self.vol[cols] * h_out))
        return out

    def boundary_power(self) -> float:
        return sum(self.boundary_power_components().values())


def energy_audit(solver: SectionSolver, t_span: float, *, dt: float = 0.0) -> dict:
    """Advance `t_span` seconds and compare enthalpy change to boundary work.

    Returns dH, the integrated boundary work, and a residual normalized by
    the larger of |dH| and the gross energy throughput, which stays
    meaningful in quasi-steady states where dH itself vanishes.
    """
    h0 = solver.total_enthalpy()
    work = 0.0
    gross = 0.0
    t_min = float(solver.t.min())
    t_max = float(solver.t.max())
    t_end = solver.time + t_span
    while solver.time < t_end - 1e-12:
        step = dt if dt else 0.95 * solver.admissible_dt()
        step = min(step, t_end - solver.time)
        parts = solver.boundary_power_components()
        work += sum(parts.values()) * step
        gross += sum(abs(v) for v in parts.values()) * step
        solver.step(step)
        t_min = min(t_min, float(solver.t.min()))
        t_max = max(t_max, float(solver.t.max()))
    dh = solver.total_enthalpy() - h0
    scale = max(abs(dh), gross, 1e-300)
    return {"dh": dh, "work": work, "residual": abs(dh - work),
            "residual_ratio": abs(dh - work) / scale,
            "t_min": t_min, "t_max": t_max}


def field_bounds_ok(solver: SectionSolver, t_low: float, t_high: float,
                    rtol: float = 1e-9) -> bool:
    """Maximum-principle check: field inside [t_low, t_high] within rounding."""
    slack = rtol * max(abs(t_low), abs(t_high))
    return bool(np.all(solver.t >= t_low - slack) and np.all(solver.t <= t_high + slack))


def build_section_solver(grid: SectionGrid, material: MaterialProperties,
                         env: SectionEnvironment, *,
                         inner_profile: ChtcProfile, outer_profile: ChtcProfile,
                         speed: float, inlet_profile=None, initial=None) -> SectionSolver:
    """Wire CHTC profiles and environment data into a configured solver."""
    inner = SurfaceCooling(inner_profile.profile_vector(grid), env.c_i, env.t_i)
    outer = SurfaceCooling(outer_profile.profile_vector(grid), env.c_e, env.t_e)
    return SectionSolver(grid, material, inner=inner, outer=outer, speed=speed,
                         inlet_profile=inlet_profile, initial=initial)


# -- snapshot export -------------------------------------------------------

def export_fields(solvers: dict, path) -> None:
    """CSV snapshot: one row per node, (section, i, j, coord1, coord2, T)."""
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["section", "i", "j", "coord1", "coord2", "T"])
        for name, solver in solvers.items():
            along, across, t = solver.grid.along, solver.grid.across, solver.t
            for i in range(along.size):
                for j in range(across.size):
                    writer.writerow([name, i, j, f"{along[i]:.10g}",
                                     f"{across[j]:.10g}", f"{t[i, j]:.10g}"])


def export_fronts(fronts: dict, path) -> None:
    """CSV export of extracted fronts: (section, coord, xi)."""
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["section", "coord", "xi"])
        for name, front in fronts.items():
            for coord, xi in front.rows():
                writer.writerow([name, f"{coord:.10g}",
                                 "" if np.isnan(xi) else f"{xi:.10g}"])
