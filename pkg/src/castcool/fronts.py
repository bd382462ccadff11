"""Phase-front extraction and verification from a temperature field.

The front is the crystallization isotherm, located by linear interpolation
along grid lines.  Because latent heat is smeared over a capacity band,
the interface condition is not imposed anywhere; `stefan_residual`
measures a posteriori how well the extracted front honours it.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .materials import MaterialProperties


@dataclass(frozen=True)
class PhaseFront:
    """Sampled front curves of one section, indexed by the casting coordinate."""

    along: np.ndarray
    xi1: np.ndarray           # first crossing from the inner surface (nan: none)
    xi2: np.ndarray           # last crossing, i.e. nearest the outer surface
    fully_solid: np.ndarray   # per-column flag
    fully_liquid: np.ndarray

    @property
    def has_front(self) -> bool:
        return bool(np.isfinite(self.xi1).any())

    def rows(self):
        for c, xi in zip(self.along, self.xi1):
            yield float(c), float(xi)
        two_sided = np.isfinite(self.xi2) & (self.xi2 != self.xi1)
        if two_sided.any():
            for c, xi in zip(self.along[two_sided], self.xi2[two_sided]):
                yield float(c), float(xi)


def extract_front(t_field: np.ndarray, across: np.ndarray,
                  material: MaterialProperties, along=None) -> PhaseFront:
    """Locate the crystallization isotherm on every casting-direction row.

    Columns without a crossing are flagged fully solid or fully liquid;
    an entirely one-phase field yields a result with `has_front` False
    rather than an error.
    """
    t = np.asarray(t_field, dtype=float)
    n, m = t.shape
    along = np.arange(n, dtype=float) if along is None else np.asarray(along, dtype=float)
    s = t - material.t_kr
    xi1 = np.full(n, np.nan)
    xi2 = np.full(n, np.nan)
    fully_solid = np.zeros(n, dtype=bool)
    fully_liquid = np.zeros(n, dtype=bool)
    for i in range(n):
        row = s[i]
        cross = np.flatnonzero(row[:-1] * row[1:] <= 0)
        cross = cross[(row[cross] != 0) | (row[cross + 1] != 0)]
        if cross.size == 0:
            if row[0] < 0:
                fully_solid[i] = True
            else:
                fully_liquid[i] = True
            continue
        j0, j1 = cross[0], cross[-1]
        xi1[i] = across[j0] + (across[j0 + 1] - across[j0]) * row[j0] / (row[j0] - row[j0 + 1])
        xi2[i] = across[j1] + (across[j1 + 1] - across[j1]) * row[j1] / (row[j1] - row[j1 + 1])
    return PhaseFront(along.copy(), xi1, xi2, fully_solid, fully_liquid)


def section_front(solver) -> PhaseFront:
    return extract_front(solver.t, solver.grid.across, solver.material,
                         along=solver.grid.along)


def _one_sided_gradients(t_row: np.ndarray, across: np.ndarray, xi: float,
                         material: MaterialProperties):
    """Conductive fluxes on the solid and liquid sides of one front sample.

    Gradients are sampled just outside the latent-heat band so the smeared
    zone does not contaminate them; returns (flux_solid, flux_liquid) or
    None when either side lacks two usable nodes.
    """
    band_lo = material.t_kr - material.dt_smear
    band_hi = material.t_kr + material.dt_smear
    q = across[1] - across[0]
    solid = np.flatnonzero((t_row < band_lo) & (across < xi))
    liquid = np.flatnonzero((t_row > band_hi) & (across > xi))
    if solid.size < 2 or liquid.size < 2:
        return None
    js = solid[-1]
    jl = liquid[0]
    if js < 1 or jl > t_row.size - 2:
        return None
    lam_s = float(material.conductivity(0.5 * (t_row[js] + t_row[js - 1])))
    lam_l = float(material.conductivity(0.5 * (t_row[jl] + t_row[jl + 1])))
    grad_s = (t_row[js] - t_row[js - 1]) / q
    grad_l = (t_row[jl + 1] - t_row[jl]) / q
    return lam_s * grad_s, lam_l * grad_l


def stefan_residual(t_field: np.ndarray, across: np.ndarray,
                    material: MaterialProperties,
                    front: PhaseFront, front_prev: PhaseFront, dt: float,
                    speed: float = 0.0) -> dict:
    """Interface energy-balance residual for the inner front curve.

    Front velocity comes from the two consecutive extractions plus the
    advective carry `speed * d(xi)/d(along)`.  Residuals are normalized by
    the larger one-sided flux of each sample.
    """
    mu_rho = material.mu * float(material.rho_table(material.t_kr))
    rel = []
    n = front.along.size
    dxi_dalong = np.full(n, np.nan)
    ok = np.isfinite(front.xi1)
    if n >= 3:
        da = front.along[1] - front.along[0]
        interior = ok[1:-1] & ok[2:] & ok[:-2]
        dxi_dalong[1:-1][interior] = (front.xi1[2:][interior]
                                      - front.xi1[:-2][interior]) / (2 * da)
    for i in range(n):
        if not (np.isfinite(front.xi1[i]) and np.isfinite(front_prev.xi1[i])):
            continue
        grads = _one_sided_gradients(t_field[i], across, front.xi1[i], material)
        if grads is None:
            continue
        flux_s, flux_l = grads
        v_front = (front.xi1[i] - front_prev.xi1[i]) / dt
        if speed and np.isfinite(dxi_dalong[i]):
            v_front += speed * dxi_dalong[i]
        residual = (flux_s - flux_l) - mu_rho * v_front
        scale = max(abs(flux_s), abs(flux_l))
        if scale > 0:
            rel.append(abs(residual) / scale)
    rel = np.asarray(rel)
    return {
        "n_samples": int(rel.size),
        "mean_relative": float(rel.mean()) if rel.size else np.nan,
        "max_relative": float(rel.max()) if rel.size else np.nan,
    }
