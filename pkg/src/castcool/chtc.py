"""Distributed convective heat-transfer coefficient along a cooled surface.

The profile is a constant baseline with a downward parabola of height
alpha_p added over every nozzle footprint; all nozzles of a section share
one parabola shape, shifted to each axis.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ConfigError
from .geometry import SectionGrid, nearest_offset
from .validation import require_nonnegative, require_positive


@dataclass(frozen=True)
class ChtcProfile:
    alpha_c: float      # baseline coefficient [W/(m^2 K)]
    alpha_p: float      # peak increment over a nozzle axis [W/(m^2 K)]
    w: float            # footprint half-width (same unit as the coordinates)
    nozzles: tuple      # axis coordinates along the surface

    def __post_init__(self):
        require_positive("alpha_c", self.alpha_c)
        require_nonnegative("alpha_p", self.alpha_p)
        require_positive("w", self.w)
        object.__setattr__(self, "nozzles", tuple(float(a) for a in self.nozzles))

    def alpha_of_offset(self, y):
        """Coefficient at signed offset y from a nozzle axis, |y| <= w."""
        y = np.asarray(y, dtype=float)
        return self.alpha_c + self.alpha_p * (1.0 - (y / self.w) ** 2)

    def alpha_at(self, coord):
        """Coefficient at a surface coordinate; continuous everywhere."""
        scalar = np.isscalar(coord)
        coords = np.atleast_1d(np.asarray(coord, dtype=float))
        out = np.full(coords.shape, self.alpha_c)
        if self.nozzles:
            for i, c in enumerate(coords):
                off, _ = nearest_offset(self.nozzles, float(c))
                if abs(off) <= self.w:
                    out[i] = self.alpha_c + self.alpha_p * (1.0 - (off / self.w) ** 2)
        return float(out[0]) if scalar else out

    def profile_vector(self, grid: SectionGrid) -> np.ndarray:
        """Coefficient at every surface node of a section grid."""
        out = np.full(grid.n_along, self.alpha_c)
        b = grid.b_nodes()
        if b.size:
            out[b] = self.alpha_of_offset(grid.y[b])
        return out

    def with_alpha_c(self, alpha_c: float) -> "ChtcProfile":
        return ChtcProfile(alpha_c, self.alpha_p, self.w, self.nozzles)

    def to_kv(self, section_id: str = "") -> dict:
        kv = {
            "alpha_c": repr(self.alpha_c),
            "alpha_p": repr(self.alpha_p),
            "w": repr(self.w),
            "nozzles": " ".join(repr(a) for a in self.nozzles),
        }
        if section_id:
            kv["section"] = section_id
        return kv


def profile_from_kv(scalars: dict, prefix: str = "") -> ChtcProfile:
    from . import kvformat

    def key(name):
        return f"{prefix}{name}" if prefix else name

    return ChtcProfile(
        alpha_c=kvformat.get_float(scalars, key("alpha_c")),
        alpha_p=kvformat.get_float(scalars, key("alpha_p")),
        w=kvformat.get_float(scalars, key("w")),
        nozzles=tuple(kvformat.get_floats(scalars, key("nozzles"), default=())),
    )


def uniform_profile(alpha: float, w: float = 1.0) -> ChtcProfile:
    """Footprint-free profile: the same coefficient everywhere."""
    if alpha <= 0:
        raise ConfigError("uniform profile needs alpha > 0")
    return ChtcProfile(alpha, 0.0, w, ())
