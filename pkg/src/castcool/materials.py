"""Thermophysical properties of the cast steel.

Properties depend on temperature only; latent heat of crystallization is
folded into an effective volumetric heat capacity over a narrow band
around the crystallization temperature, so the solver never tracks the
phase interface explicitly.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from importlib import resources

import numpy as np

from . import kvformat
from .errors import ConfigError, MaterialDomainError


@dataclass(frozen=True)
class PropertyTable:
    """Piecewise-linear temperature -> value map, exact at the knots."""

    temps: np.ndarray
    values: np.ndarray
    name: str = "property"

    def __post_init__(self):
        t = np.asarray(self.temps, dtype=float)
        v = np.asarray(self.values, dtype=float)
        if t.ndim != 1 or t.shape != v.shape or t.size < 2:
            raise ConfigError(f"{self.name} table needs >= 2 (T, value) rows")
        if not np.all(np.diff(t) > 0):
            raise ConfigError(f"{self.name} table temperatures must be strictly increasing")
        if not np.all(v > 0):
            raise ConfigError(f"{self.name} table values must be strictly positive")
        object.__setattr__(self, "temps", t)
        object.__setattr__(self, "values", v)

    @property
    def t_min(self) -> float:
        return float(self.temps[0])

    @property
    def t_max(self) -> float:
        return float(self.temps[-1])

    def __call__(self, t):
        t = np.asarray(t, dtype=float)
        lo, hi = t.min(initial=np.inf), t.max(initial=-np.inf)
        if t.size and (lo < self.t_min or hi > self.t_max):
            raise MaterialDomainError(
                f"temperature {lo if lo < self.t_min else hi:.2f} K outside the "
                f"{self.name} table domain [{self.t_min:.2f}, {self.t_max:.2f}] K"
            )
        return np.interp(t, self.temps, self.values)


@dataclass(frozen=True)
class MaterialProperties:
    """Property tables plus phase-change data for one steel grade."""

    c_table: PropertyTable
    rho_table: PropertyTable
    lambda_table: PropertyTable
    mu: float                      # latent heat of crystallization [J/kg]
    t_liquidus: float
    t_solidus: float
    t_kr: float = 0.0              # defaults to (liquidus + solidus)/2
    dt_smear: float = 10.0         # half-width of latent-heat band [K]
    name: str = "material"
    _h_grid: tuple = field(default=None, repr=False, compare=False)

    def __post_init__(self):
        if self.mu <= 0:
            raise ConfigError("latent heat mu must be > 0")
        if self.dt_smear <= 0:
            raise ConfigError("dt_smear must be > 0")
        if not self.t_kr:
            object.__setattr__(self, "t_kr", 0.5 * (self.t_liquidus + self.t_solidus))
        if not (self.t_solidus <= self.t_kr <= self.t_liquidus):
            raise ConfigError("need t_solidus <= t_kr <= t_liquidus")
        object.__setattr__(self, "_h_grid", self._build_enthalpy_grid())

    # -- basic properties ------------------------------------------------

    def props_at(self, t):
        """Return (c, rho, lambda) interpolated at temperature t."""
        return self.c_table(t), self.rho_table(t), self.lambda_table(t)

    def conductivity(self, t):
        return self.lambda_table(t)

    def volumetric_capacity(self, t):
        """Sensible volumetric capacity c(T)*rho(T) [J/(m^3 K)]."""
        return self.c_table(t) * self.rho_table(t)

    def effective_heat_capacity(self, t):
        """Volumetric capacity including the smeared latent-heat band.

        The added box term integrates to exactly mu*rho(t_kr) over
        [t_kr - dt_smear, t_kr + dt_smear].
        """
        t = np.asarray(t, dtype=float)
        cap = self.volumetric_capacity(t)
        latent = self.mu * float(self.rho_table(self.t_kr)) / (2.0 * self.dt_smear)
        in_band = np.abs(t - self.t_kr) <= self.dt_smear
        return cap + latent * in_band

    # -- enthalpy map (used for conservative advection and energy audits) -

    def _build_enthalpy_grid(self):
        lo = max(tab.t_min for tab in (self.c_table, self.rho_table, self.lambda_table))
        hi = min(tab.t_max for tab in (self.c_table, self.rho_table, self.lambda_table))
        if hi <= lo:
            raise ConfigError("property tables have no common temperature domain")
        knots = np.concatenate([
            np.arange(lo, hi, 2.0),
            [hi],
            self.c_table.temps, self.rho_table.temps,
            [self.t_kr - self.dt_smear, self.t_kr, self.t_kr + self.dt_smear],
        ])
        grid = np.unique(np.clip(knots, lo, hi))
        cap = self.volumetric_capacity(grid)
        h_sens = np.concatenate([[0.0], np.cumsum(0.5 * (cap[1:] + cap[:-1]) * np.diff(grid))])
        latent_total = self.mu * float(self.rho_table(self.t_kr))
        ramp = np.clip((grid - (self.t_kr - self.dt_smear)) / (2.0 * self.dt_smear), 0.0, 1.0)
        return grid, h_sens + latent_total * ramp

    def enthalpy(self, t):
        """Volumetric enthalpy [J/m^3] relative to the table bottom."""
        grid, h = self._h_grid
        t = np.asarray(t, dtype=float)
        if t.size and (t.min() < grid[0] or t.max() > grid[-1]):
            raise MaterialDomainError(
                f"temperature outside enthalpy domain [{grid[0]:.2f}, {grid[-1]:.2f}] K"
            )
        return np.interp(t, grid, h)

    def temperature_of_enthalpy(self, h):
        grid, hg = self._h_grid
        return np.interp(h, hg, grid)

    @property
    def domain(self) -> tuple[float, float]:
        grid, _ = self._h_grid
        return float(grid[0]), float(grid[-1])


def constant_material(c: float, rho: float, lam: float, *, mu: float,
                      t_kr: float, dt_smear: float = 5.0,
                      t_lo: float = 200.0, t_hi: float = 2200.0,
                      name: str = "constant") -> MaterialProperties:
    """Material with temperature-independent properties (test scenarios)."""
    span = np.array([t_lo, t_hi])
    return MaterialProperties(
        c_table=PropertyTable(span, np.full(2, float(c)), "c"),
        rho_table=PropertyTable(span, np.full(2, float(rho)), "rho"),
        lambda_table=PropertyTable(span, np.full(2, float(lam)), "lambda"),
        mu=mu, t_liquidus=t_kr, t_solidus=t_kr, t_kr=t_kr,
        dt_smear=dt_smear, name=name,
    )


# -- material file IO ----------------------------------------------------

def material_from_kv(scalars: dict, tables: dict, name: str = "material") -> MaterialProperties:
    for block in ("c", "rho", "lambda"):
        if block not in tables:
            raise ConfigError(f"material file is missing the [{block}] table")
        if tables[block].shape[1] != 2:
            raise ConfigError(f"[{block}] table must have two columns (T, value)")
    t_liq = kvformat.get_float(scalars, "t_liquidus")
    t_sol = kvformat.get_float(scalars, "t_solidus")
    return MaterialProperties(
        c_table=PropertyTable(tables["c"][:, 0], tables["c"][:, 1], "c"),
        rho_table=PropertyTable(tables["rho"][:, 0], tables["rho"][:, 1], "rho"),
        lambda_table=PropertyTable(tables["lambda"][:, 0], tables["lambda"][:, 1], "lambda"),
        mu=kvformat.get_float(scalars, "mu"),
        t_liquidus=t_liq,
        t_solidus=t_sol,
        t_kr=kvformat.get_float(scalars, "t_kr", 0.5 * (t_liq + t_sol)),
        dt_smear=kvformat.get_float(scalars, "dt_smear", 10.0),
        name=kvformat.get_str(scalars, "name", name),
    )


def load_material(path) -> MaterialProperties:
    scalars, tables = kvformat.read_kv_file(path)
    return material_from_kv(scalars, tables, name=str(path))


DEFAULT_MATERIAL_HEADER = (
    "material property file\n"
    "units: T [K]; c [J/(kg K)]; rho [kg/m^3]; lambda [W/(m K)];\n"
    "mu [J/kg]; t_liquidus, t_solidus, t_kr, dt_smear [K]"
)


def save_material(path, m: MaterialProperties, header: str = DEFAULT_MATERIAL_HEADER) -> None:
    scalars = {
        "name": m.name,
        "mu": repr(m.mu),
        "t_liquidus": repr(m.t_liquidus),
        "t_solidus": repr(m.t_solidus),
        "t_kr": repr(m.t_kr),
        "dt_smear": repr(m.dt_smear),
    }
    tables = {
        "c": np.column_stack([m.c_table.temps, m.c_table.values]),
        "rho": np.column_stack([m.rho_table.temps, m.rho_table.values]),
        "lambda": np.column_stack([m.lambda_table.temps, m.lambda_table.values]),
    }
    kvformat.write_kv_file(path, scalars, tables, header=header)


def builtin_material(name: str = "st40") -> MaterialProperties:
    """Load one of the material files shipped with the package."""
    ref = resources.files("castcool.data").joinpath(f"{name}.mat")
    try:
        text = ref.read_text(encoding="utf-8")
    except FileNotFoundError as exc:
        raise ConfigError(f"no builtin material named {name!r}") from exc
    scalars, tables = kvformat.parse_kv_text(text)
    return material_from_kv(scalars, tables, name=name)
