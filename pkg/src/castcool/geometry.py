"""Machine layout and finite-difference grid construction.

A machine is a water-cooled mould followed by curved guide sections and a
final straight run-out.  Spray nozzles sit at fixed coordinates along each
cooling section; every surface node is classified as either under a nozzle
footprint (set B) or on the free surface between footprints (set K).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ConfigError
from .validation import require, require_positive


def _node_count(span: float, step: float) -> int:
    return max(2, int(round(span / step)) + 1)


def nearest_offset(nozzles, coord: float) -> tuple[float, int]:
    """Signed offset from `coord` to the nearest nozzle axis.

    Ties go to the lower-coordinate axis so the result is deterministic.
    """
    axes = np.asarray(nozzles, dtype=float)
    if axes.size == 0:
        raise ConfigError("section has no nozzles")
    dist = np.abs(coord - axes)
    k = int(np.argmin(dist))
    return float(coord - axes[k]), k


def _validate_nozzles(nozzles, w: float, span: float, label: str) -> tuple:
    axes = tuple(sorted(float(a) for a in nozzles))
    tol = 1e-12 * max(1.0, span)
    for a in axes:
        if a - w < -tol or a + w > span + tol:
            raise ConfigError(f"{label}: nozzle footprint [{a - w:.4g}, {a + w:.4g}] "
                              f"outside the section span [0, {span:.4g}]")
    for a, b in zip(axes, axes[1:]):
        if b - a < 2.0 * w - tol:
            raise ConfigError(f"{label}: nozzle footprints at {a:.4g} and {b:.4g} overlap")
    return axes


@dataclass(frozen=True)
class MouldGeometry:
    l: float        # ingot half-thickness [m]
    big_z: float    # ingot height inside the mould [m]
    d: float        # outer wall coordinate [m], measured like x
    z0: float       # wall top coordinate above the meniscus (z0 <= 0) [m]
    delta: float    # effective air-gap thickness [m]

    def __post_init__(self):
        require_positive("mould l", self.l)
        require_positive("mould big_z", self.big_z)
        require_positive("mould delta", self.delta)
        require(self.d > self.l + self.delta, "mould wall coordinate d must exceed l + delta")
        require(self.z0 <= 0.0, "mould z0 is measured above the meniscus and must be <= 0")


@dataclass(frozen=True)
class CurvilinearSection:
    index_m: int
    r_m: float          # inner radius [m]
    phi_span: float     # angular extent [rad]
    nozzles: tuple      # axis angles [rad], measured from the section inlet
    w: float            # nozzle footprint half-width [rad]
    g_m: float | None = None   # water discharge label for this setpoint

    def __post_init__(self):
        require_positive("section r_m", self.r_m)
        require_positive("section phi_span", self.phi_span)
        require_positive("section w", self.w)
        object.__setattr__(self, "nozzles",
                           _validate_nozzles(self.nozzles, self.w, self.phi_span,
                                             f"curvilinear section {self.index_m}"))

    @property
    def section_id(self) -> str:
        return f"curv{self.index_m}"

    def angular_velocity(self, v: float, l: float) -> float:
        """Angular withdrawal rate for casting speed v, taken at mid-thickness."""
        return v / (self.r_m + l)


@dataclass(frozen=True)
class RectilinearSection:
    z_p: float          # transverse coordinate of the first surface [m]
    x_f: float          # run-out length [m]
    nozzles: tuple      # axis positions along the casting direction [m]
    w: float            # footprint half-width [m]

    def __post_init__(self):
        require_positive("rectilinear x_f", self.x_f)
        require_positive("rectilinear w", self.w)
        object.__setattr__(self, "nozzles",
                           _validate_nozzles(self.nozzles, self.w, self.x_f,
                                             "rectilinear section"))

    @property
    def section_id(self) -> str:
        return "rect"


@dataclass(frozen=True)
class MachineLayout:
    l: float                                  # ingot half-thickness [m]
    mould: MouldGeometry | None = None
    curvilinear: tuple = ()
    rectilinear: RectilinearSection | None = None

    def __post_init__(self):
        require_positive("layout l", self.l)
        if self.mould is not None and abs(self.mould.l - self.l) > 1e-12:
            raise ConfigError("mould half-thickness disagrees with the layout value")
        object.__setattr__(self, "curvilinear", tuple(self.curvilinear))

    def sections(self):
        out = list(self.curvilinear)
        if self.rectilinear is not None:
            out.append(self.rectilinear)
        return out


@dataclass(frozen=True)
class GridSpec:
    q: float               # step across the thickness [m]
    d_phi: float = 0.0     # angular step on curved sections [rad]
    d_z: float = 0.0       # vertical step in the mould [m]
    d_x: float = 0.0       # step along the straight run-out [m]
    dt: float = 0.0        # time step [s]; 0 selects the stability bound

    def __post_init__(self):
        require_positive("grid q", self.q)
        for name in ("d_phi", "d_z", "d_x", "dt"):
            value = getattr(self, name)
            if value and value < 0:
                raise ConfigError(f"grid {name} must be positive when given")


@dataclass(frozen=True)
class SectionGrid:
    """Discrete grid of one cooling section plus its surface classification."""

    section_id: str
    kind: str                  # "curvilinear" | "rectilinear"
    along: np.ndarray          # casting-direction node coordinates (rad or m)
    across: np.ndarray         # thickness node coordinates (r [m] or z [m])
    in_b: np.ndarray           # True where the surface node sits in a footprint
    y: np.ndarray              # signed offset to the nearest axis (nan in K)
    nozzle_index: np.ndarray   # nearest-axis index (-1 in K)
    w: float
    nozzles: tuple = ()

    @property
    def n_along(self) -> int:
        return self.along.size

    @property
    def n_across(self) -> int:
        return self.across.size

    @property
    def step_along(self) -> float:
        return float(self.along[1] - self.along[0])

    @property
    def step_across(self) -> float:
        return float(self.across[1] - self.across[0])

    def k_nodes(self) -> np.ndarray:
        return np.flatnonzero(~self.in_b)

    def b_nodes(self) -> np.ndarray:
        return np.flatnonzero(self.in_b)


def classify_surface(nozzles, w: float, coords: np.ndarray):
    """Split surface nodes into K and B; boundary |offset| == w counts as B."""
    coords = np.asarray(coords, dtype=float)
    in_b = np.zeros(coords.size, dtype=bool)
    y = np.full(coords.size, np.nan)
    idx = np.full(coords.size, -1, dtype=int)
    if len(nozzles) == 0:
        return in_b, y, idx
    tol = 1e-12 * max(1.0, float(coords[-1]) if coords.size else 1.0)
    for i, c in enumerate(coords):
        off, k = nearest_offset(nozzles, float(c))
        if abs(off) <= w + tol:
            in_b[i] = True
            y[i] = min(max(off, -w), w)
            idx[i] = k
    return in_b, y, idx


def build_section_grid(section, layout_l: float, spec: GridSpec) -> SectionGrid:
    if isinstance(section, CurvilinearSection):
        if not spec.d_phi:
            raise ConfigError("grid d_phi is required for curvilinear sections")
        n_along = _node_count(section.phi_span, spec.d_phi)
        along = np.linspace(0.0, section.phi_span, n_along)
        across0 = section.r_m
        kind = "curvilinear"
    elif isinstance(section, RectilinearSection):
        if not spec.d_x:
            raise ConfigError("grid d_x is required for the rectilinear section")
        n_along = _node_count(section.x_f, spec.d_x)
        along = np.linspace(0.0, section.x_f, n_along)
        across0 = section.z_p
        kind = "rectilinear"
    else:
        raise ConfigError(f"unknown section type {type(section).__name__}")
    n_across = _node_count(2.0 * layout_l, spec.q)
    if n_across < 3:
        raise ConfigError(
            f"{section.section_id}: only {n_across} nodes across the thickness; "
            "the surface stencil needs at least 3"
        )
    across = across0 + np.linspace(0.0, 2.0 * layout_l, n_across)
    in_b, y, idx = classify_surface(section.nozzles, section.w, along)
    return SectionGrid(section.section_id, kind, along, across, in_b, y, idx,
                       section.w, section.nozzles)


@dataclass(frozen=True)
class MouldGrid:
    x: np.ndarray        # ingot nodes, 0 (centre) .. l (surface)
    z: np.ndarray        # ingot nodes, 0 (meniscus) .. big_z
    wall_x: np.ndarray   # wall nodes, l + delta .. d
    wall_z: np.ndarray   # wall nodes, z0 .. big_z (superset of z)
    n_above: int         # wall rows above the meniscus (z < 0)


def build_mould_grid(mould: MouldGeometry, spec: GridSpec) -> MouldGrid:
    if not spec.d_z:
        raise ConfigError("grid d_z is required for the mould")
    nx = _node_count(mould.l, spec.q)
    if nx < 3:
        raise ConfigError("mould: fewer than 3 nodes across the half-thickness")
    nz = _node_count(mould.big_z, spec.d_z)
    z = np.linspace(0.0, mould.big_z, nz)
    dz = z[1] - z[0]
    n_above = int(round(-mould.z0 / dz))
    wall_z = np.concatenate([-dz * np.arange(n_above, 0, -1), z])
    wall_thickness = mould.d - (mould.l + mould.delta)
    nxw = _node_count(wall_thickness, spec.q)
    return MouldGrid(
        x=np.linspace(0.0, mould.l, nx),
        z=z,
        wall_x=mould.l + mould.delta + np.linspace(0.0, wall_thickness, nxw),
        wall_z=wall_z,
        n_above=n_above,
    )


def build_grids(layout: MachineLayout, spec: GridSpec) -> dict:
    """Grids for every machine part, keyed by section id ('mould' included)."""
    grids: dict = {}
    if layout.mould is not None:
        grids["mould"] = build_mould_grid(layout.mould, spec)
    for section in layout.sections():
        grids[section.section_id] = build_section_grid(section, layout.l, spec)
    return grids


def nozzle_offset_checked(grid: SectionGrid, node_index: int) -> float:
    """Signed offset of a surface node known to lie in B."""
    if not grid.in_b[node_index]:
        raise ValueError(f"surface node {node_index} is not under a nozzle footprint")
    return float(grid.y[node_index])
