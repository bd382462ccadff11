"""Initial identification of the spray-cooling coefficient profile.

Given surface temperatures measured on every node of a section, the
pipeline reconstructs near-surface temperatures by solving the steady
interior problem with the measured values and the crystallization
isotherm as boundary data, turns the three-node surface stencil into
per-node flux/driving-difference pairs, and fits the two profile
parameters by closed-form least squares.  A naive per-point inversion is
kept as the instability baseline.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla
from sklearn.base import BaseEstimator
from sklearn.exceptions import NotFittedError

from .chtc import ChtcProfile
from .errors import ConfigError, ConvergenceError, DegenerateDataError
from .solver import SectionSolver


@dataclass
class FluxSamples:
    """Per-surface-node boundary-flux data entering the fits."""

    p: np.ndarray            # conductive-minus-radiative flux [W/m^2]
    q_: np.ndarray           # driving temperature difference t_env - t0 [K]
    y: np.ndarray            # nozzle offset (nan outside footprints)
    in_b: np.ndarray         # footprint membership per sample
    usable: np.ndarray       # columns with a valid reconstruction
    n_excluded_q: int = 0    # dropped for |q_| below threshold
    n_excluded_shell: int = 0  # dropped for too thin a solid shell


@dataclass
class IdentificationResult:
    profile: ChtcProfile
    samples: FluxSamples
    alpha_direct: np.ndarray
    residual_norm: float
    no_enhancement: bool
    counts: dict = field(default_factory=dict)


# -- interior reconstruction -------------------------------------------------

def solve_interior_dirichlet(model: SectionSolver, measured, front_xi=None,
                             fully_solid=None, *, face: str = "inner",
                             include_advection: bool = True,
                             max_iter: int = 60, tol: float = 1e-6):
    """Reconstruct the three near-surface stencil temperatures per column.

    The steady variant of the forward operator is solved on the solid
    shell under the chosen face: measured temperatures pin the surface
    row, the crystallization temperature is imposed at the front through a
    shortened stencil arm, and the upwind advection term is retained so
    the reconstruction matches the forward model's steady state.  Columns
    whose shell is thinner than three cells are flagged unusable.

    For face="outer" pass the front curve nearest the outer surface.
    Returns (stencil, usable) with stencil of shape (n_along, 3), ordered
    from the surface inward.
    """
    if face not in ("inner", "outer"):
        raise ConfigError(f"unknown face {face!r}")
    grid = model.grid
    mat = model.material
    n, m = grid.n_along, grid.n_across
    measured = np.asarray(measured, dtype=float)
    if measured.shape != (n,):
        raise ConfigError(f"measured temperatures must cover all {n} surface nodes")
    if not np.isfinite(measured).all():
        raise ConfigError("measured temperatures contain non-finite values")
    across = grid.across
    q = grid.step_across
    t_kr = mat.t_kr
    dirn = 1 if face == "inner" else -1
    surface_j = 0 if face == "inner" else m - 1

    if front_xi is None:
        front_xi = np.full(n, np.nan)
    front_xi = np.asarray(front_xi, dtype=float)
    if fully_solid is None:
        fully_solid = np.zeros(n, dtype=bool)
    fully_solid = np.asarray(fully_solid, dtype=bool)

    mid = (m - 1) // 2
    pinned_inlet = model.inlet_profile is not None
    first_col = 1 if pinned_inlet else 0

    # front-closest unknown row (absolute index) and front-arm length
    depth = np.full(n, surface_j, dtype=int)
    eta = np.full(n, np.nan)
    for i in range(n):
        if fully_solid[i]:
            depth[i] = mid
            continue
        if not np.isfinite(front_xi[i]):
            continue
        if face == "inner":
            j = int(np.searchsorted(across, front_xi[i]) - 1)
        else:
            j = int(np.searchsorted(across, front_xi[i], side="right"))
        if (j - surface_j) * dirn < 1 or not 0 <= j < m:
            continue
        arm = (front_xi[i] - across[j]) * dirn
        if arm < 0.05 * q and (j - surface_j) * dirn >= 2:
            j -= dirn
            arm = (front_xi[i] - across[j]) * dirn
        depth[i] = j
        eta[i] = arm

    def column_rows(i):
        return range(surface_j + dirn, depth[i] + dirn, dirn)

    n_unknown_rows = (depth - surface_j) * dirn
    usable = n_unknown_rows >= 2
    usable[:first_col] = False

    index = -np.ones((n, m), dtype=int)
    count = 0
    for i in range(first_col, n):
        for j in column_rows(i):
            index[i, j] = count
            count += 1
    if count == 0:
        raise DegenerateDataError("no solid shell available for the interior solve")

    def known_value(i, j):
        if j == surface_j:
            return measured[i] if i >= first_col else float(model.inlet_profile[j])
        if pinned_inlet and i == 0:
            return float(model.inlet_profile[j])
        return t_kr   # beyond a neighbouring column's front

    # initial iterate: linear from the measured surface toward the front
    t_cur = np.tile(measured[:, None], (1, m)).astype(float)
    for i in range(n):
        if n_unknown_rows[i] >= 1:
            target = front_xi[i] if np.isfinite(front_xi[i]) else across[mid]
            span = max((target - across[surface_j]) * dirn, q)
            frac = np.clip((across - across[surface_j]) * dirn / span, 0.0, 1.0)
            t_cur[i] = measured[i] + (t_kr - measured[i]) * frac
    if pinned_inlet:
        t_cur[0] = model.inlet_profile

    speed = model.speed if include_advection else 0.0
    lo, hi = mat.domain
    ui, uj = np.nonzero(index >= 0)

    # bond structure is fixed across Picard iterations; only the
    # temperature-dependent coefficients get recomputed
    b_row, b_i, b_j, b_ni, b_nj, b_geo, b_tgt, b_kval = [], [], [], [], [], [], [], []

    def bond(row, i, j, ni, nj, geo, known=None):
        b_row.append(row)
        b_i.append(i)
        b_j.append(j)
        b_ni.append(ni)
        b_nj.append(nj)
        b_geo.append(geo)
        if known is None and index[ni, nj] >= 0:
            b_tgt.append(index[ni, nj])
            b_kval.append(0.0)
        else:
            b_tgt.append(-1)
            b_kval.append(known_value(ni, nj) if known is None else known)

    for i in range(first_col, n):
        for j in column_rows(i):
            row = index[i, j]
            vol = model.vol[j]
            bond(row, i, j, i, j - dirn,
                 model.area_across[min(j, j - dirn)] / (q * vol))
            if fully_solid[i] and j == depth[i]:
                pass   # zero flux at the mid-plane
            elif j == depth[i]:
                # shortened arm to the front isotherm; self conductivity
                bond(row, i, j, i, j,
                     model.area_across[min(j, j + dirn)] / (eta[i] * vol), known=t_kr)
            else:
                bond(row, i, j, i, j + dirn,
                     model.area_across[min(j, j + dirn)] / (q * vol))
            for di in (-1, 1):
                ii = i + di
                if 0 <= ii < n:
                    bond(row, i, j, ii, j,
                         model.area_along / (model.dist_along[j] * vol))

    b_row = np.asarray(b_row)
    b_i, b_j = np.asarray(b_i), np.asarray(b_j)
    b_ni, b_nj = np.asarray(b_ni), np.asarray(b_nj)
    b_geo = np.asarray(b_geo)
    b_tgt = np.asarray(b_tgt)
    b_kval = np.asarray(b_kval)
    b_unknown = b_tgt >= 0

    if speed > 0:
        a_row = index[ui, uj]
        a_i, a_j = ui, uj
        a_tgt = index[np.maximum(a_i - 1, 0), a_j]
        a_known = np.where(a_tgt < 0,
                           [known_value(i - 1, j) for i, j in zip(a_i, a_j)], 0.0)
        a_unknown = a_tgt >= 0

    last_change = np.inf
    for _ in range(max_iter):
        lam = mat.conductivity(np.clip(t_cur, lo, hi))
        coef = 0.5 * (lam[b_i, b_j] + lam[b_ni, b_nj]) * b_geo
        rows = [b_row, b_row[b_unknown]]
        cols = [b_row, b_tgt[b_unknown]]
        vals = [-coef, coef[b_unknown]]
        rhs = np.zeros(count)
        np.subtract.at(rhs, b_row[~b_unknown], coef[~b_unknown] * b_kval[~b_unknown])
        if speed > 0:
            t_here = t_cur[a_i, a_j]
            t_up = t_cur[a_i - 1, a_j]
            dt_pair = t_here - t_up
            h_here = mat.enthalpy(np.clip(t_here, lo, hi))
            h_up = mat.enthalpy(np.clip(t_up, lo, hi))
            c_sec = np.where(np.abs(dt_pair) > 1e-9,
                             (h_here - h_up) / np.where(dt_pair == 0, 1.0, dt_pair),
                             mat.effective_heat_capacity(np.clip(t_here, lo, hi)))
            acoef = model.advection_rate * c_sec
            rows += [a_row, a_row[a_unknown]]
            cols += [a_row, a_tgt[a_unknown]]
            vals += [-acoef, acoef[a_unknown]]
            np.add.at(rhs, a_row[~a_unknown],
                      -acoef[~a_unknown] * a_known[~a_unknown])
        matrix = sp.csr_matrix(sp.coo_matrix(
            (np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))),
            shape=(count, count)))
        sol = spla.spsolve(matrix, rhs)[index[ui, uj]]
        last_change = float(np.max(np.abs(sol - t_cur[ui, uj])))
        t_cur[ui, uj] = sol
        if last_change < tol:
            break
    else:
        raise ConvergenceError("interior Dirichlet solve did not converge", last_change)

    stencil = np.full((n, 3), np.nan)
    stencil[:, 0] = measured
    for i in range(n):
        if usable[i]:
            stencil[i, 1] = t_cur[i, surface_j + dirn]
            stencil[i, 2] = t_cur[i, surface_j + 2 * dirn]
    return stencil, usable


# -- flux samples and closed-form fits ----------------------------------------

def flux_samples(stencil: np.ndarray, material, q: float,
                 c_rad: float, t_env: float):
    """Boundary-flux pair (P, Q) per surface node from the 3-node stencil."""
    t0, t1, t2 = stencil[:, 0], stencil[:, 1], stencil[:, 2]
    lam0 = material.conductivity(np.clip(t0, *material.domain))
    p = lam0 * (t2 - 4.0 * t1 + 3.0 * t0) / (2.0 * q) - c_rad * (t_env ** 4 - t0 ** 4)
    q_ = t_env - t0
    return p, q_


def fit_alpha_c(p, q_) -> float:
    """Closed-form least-squares baseline coefficient on the K set."""
    p = np.asarray(p, dtype=float)
    q_ = np.asarray(q_, dtype=float)
    denom = float(np.sum(q_ * q_))
    if p.size == 0 or denom == 0.0:
        raise DegenerateDataError("cannot fit alpha_c: every sample has zero "
                                  "surface-to-environment difference")
    return float(np.sum(q_ * p) / denom)


def fit_alpha_p(p, q_, y, w: float, alpha_c: float) -> float:
    """Closed-form least-squares peak increment on the B set, alpha_c held fixed."""
    p = np.asarray(p, dtype=float)
    q_ = np.asarray(q_, dtype=float)
    u = (np.asarray(y, dtype=float) / w) ** 2 - 1.0
    denom = float(np.sum(q_ ** 2 * u ** 2))
    if p.size == 0 or denom == 0.0:
        raise DegenerateDataError("cannot fit alpha_p: footprint samples carry "
                                  "no information (edges only or zero differences)")
    return float((alpha_c * np.sum(q_ ** 2 * u) - np.sum(p * q_ * u)) / denom)


def direct_reversion(p, q_, q_min: float = 1e-6):
    """Naive per-point coefficient estimates P/Q; no smoothing.

    Returns (alpha, n_excluded) with nan entries where |Q| < q_min.
    """
    p = np.asarray(p, dtype=float)
    q_ = np.asarray(q_, dtype=float)
    keep = np.abs(q_) >= q_min
    alpha = np.full(p.shape, np.nan)
    alpha[keep] = p[keep] / q_[keep]
    return alpha, int(np.count_nonzero(~keep))


# -- end-to-end pipeline --------------------------------------------------------

def identify(model: SectionSolver, measured, front_xi=None, fully_solid=None, *,
             face: str = "inner", q_min: float = 1e-6,
             include_advection: bool = True,
             no_enhancement_fraction: float = 0.02) -> IdentificationResult:
    """Full pipeline: interior solve -> flux samples -> closed-form fits."""
    grid = model.grid
    if not (~grid.in_b).any():
        raise DegenerateDataError(
            "no nozzle-free surface nodes: widen the grid or the section span "
            "so the baseline coefficient can be fitted")
    stencil, usable = solve_interior_dirichlet(
        model, measured, front_xi, fully_solid, face=face,
        include_advection=include_advection)
    n_excluded_shell = int(np.count_nonzero(~usable))
    cooling = model.inner if face == "inner" else model.outer
    p, q_ = flux_samples(stencil, model.material, grid.step_across,
                         cooling.c_rad, cooling.t_env)
    informative = usable & (np.abs(q_) >= q_min)
    n_excluded_q = int(np.count_nonzero(usable & ~informative))

    k_mask = informative & ~grid.in_b
    b_mask = informative & grid.in_b
    if not k_mask.any():
        raise DegenerateDataError(
            "no usable nozzle-free samples: widen the grid or the section span")
    alpha_c = fit_alpha_c(p[k_mask], q_[k_mask])
    if alpha_c <= 0:
        raise DegenerateDataError(
            f"fitted alpha_c = {alpha_c:.4g} is not physical; "
            "check environment data and measurements")
    if b_mask.any():
        alpha_p = fit_alpha_p(p[b_mask], q_[b_mask], grid.y[b_mask], grid.w, alpha_c)
    else:
        alpha_p = 0.0
    no_enhancement = abs(alpha_p) < no_enhancement_fraction * alpha_c
    profile = ChtcProfile(alpha_c, max(alpha_p, 0.0), grid.w, grid.nozzles)

    alpha_direct, _ = direct_reversion(p, q_, q_min)
    alpha_direct[~usable] = np.nan
    model_alpha = np.where(grid.in_b,
                           alpha_c + max(alpha_p, 0.0) * (1.0 - (grid.y / grid.w) ** 2),
                           alpha_c)
    used = informative
    residual = p[used] - model_alpha[used] * q_[used]
    residual_norm = float(np.sqrt(np.mean(residual ** 2))) if used.any() else np.nan

    samples = FluxSamples(p=p, q_=q_, y=grid.y.copy(), in_b=grid.in_b.copy(),
                          usable=usable, n_excluded_q=n_excluded_q,
                          n_excluded_shell=n_excluded_shell)
    return IdentificationResult(
        profile=profile, samples=samples, alpha_direct=alpha_direct,
        residual_norm=residual_norm, no_enhancement=no_enhancement,
        counts={"k_used": int(np.count_nonzero(k_mask)),
                "b_used": int(np.count_nonzero(b_mask)),
                "excluded_q": n_excluded_q,
                "excluded_shell": n_excluded_shell,
                "alpha_p_raw": alpha_p})


def write_identification_report(path, grid, result: IdentificationResult) -> None:
    """CSV report: per-node samples plus a trailing summary block."""
    s = result.samples
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["coord", "membership", "P", "Q", "y", "alpha_direct"])
        for i, coord in enumerate(grid.along):
            writer.writerow([
                f"{coord:.10g}",
                "B" if s.in_b[i] else "K",
                f"{s.p[i]:.10g}" if np.isfinite(s.p[i]) else "",
                f"{s.q_[i]:.10g}" if np.isfinite(s.q_[i]) else "",
                f"{s.y[i]:.10g}" if np.isfinite(s.y[i]) else "",
                f"{result.alpha_direct[i]:.10g}" if np.isfinite(result.alpha_direct[i]) else "",
            ])
        writer.writerow([])
        writer.writerow(["alpha_c", f"{result.profile.alpha_c:.10g}"])
        writer.writerow(["alpha_p", f"{result.profile.alpha_p:.10g}"])
        writer.writerow(["w", f"{result.profile.w:.10g}"])
        writer.writerow(["residual_norm", f"{result.residual_norm:.10g}"])
        for key, value in result.counts.items():
            writer.writerow([key, value])


class ChtcLeastSquares(BaseEstimator):
    """Estimator wrapper around the least-squares identification pipeline.

    Parameters
    ----------
    model : SectionSolver
        Configured forward model of the section (its CHTC values are not
        consulted; geometry, material and environment are).
    q_min : float
        Samples with |t_env - t0| below this carry no information and are
        dropped from the fits.
    include_advection : bool
        Keep the casting-direction advection term in the interior solve.
    """

    def __init__(self, model=None, q_min: float = 1e-6, include_advection: bool = True):
        self.model = model
        self.q_min = q_min
        self.include_advection = include_advection

    def fit(self, X, y, front_xi=None, fully_solid=None):
        """Fit the profile from surface coordinates X and temperatures y."""
        if self.model is None:
            raise ConfigError("ChtcLeastSquares needs a section model")
        coords = np.asarray(X, dtype=float).reshape(-1)
        temps = np.asarray(y, dtype=float).reshape(-1)
        grid = self.model.grid
        if coords.size != grid.n_along or not np.allclose(coords, grid.along):
            raise ConfigError("X must be the section's surface node coordinates")
        result = identify(self.model, temps, front_xi, fully_solid,
                          q_min=self.q_min, include_advection=self.include_advection)
        self.result_ = result
        self.alpha_c_ = result.profile.alpha_c
        self.alpha_p_ = result.profile.alpha_p
        self.w_ = result.profile.w
        self.profile_ = result.profile
        return self

    def predict(self, X):
        """Fitted coefficient evaluated at surface coordinates X."""
        if not hasattr(self, "profile_"):
            raise NotFittedError("call fit before predict")
        coords = np.asarray(X, dtype=float).reshape(-1)
        return self.profile_.alpha_at(coords)
