"""Synthetic-experiment engine: truth runs, noisy taps, recovery studies.

Ground truth is a forward solve of one curved cooling section with a known
coefficient profile.  Identification never sees that profile: it works
from the tapped (and noise-corrupted) surface temperatures plus the front
curve of the snapshot, through a template model built with placeholder
coefficients.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field, fields
from pathlib import Path

import numpy as np

from . import kvformat
from .chtc import ChtcProfile, uniform_profile
from .errors import ConfigError
from .fronts import section_front
from .geometry import CurvilinearSection, GridSpec, build_section_grid
from .ident_lsq import identify
from .ident_sa import StepSequence, TuningResult, run_tuning
from .materials import MaterialProperties, builtin_material, load_material
from .solver import SectionEnvironment, SectionSolver, build_section_solver

DEFAULT_SEED = 20260808


@dataclass
class ExperimentConfig:
    """Scenario knobs for the synthetic identification experiments."""

    material: str = "st40"
    # section geometry (half-thickness matches the default slab scenario)
    l: float = 0.1
    r_m: float = 8.0
    phi_span: float = 0.30
    nozzles: tuple = (0.09, 0.21)
    w: float = 0.05
    v: float = 1.0 / 60.0            # casting speed [m/s]
    # environment of the cooled faces
    c_i: float = 4.5e-8
    t_i: float = 350.0
    c_e: float = 4.5e-8
    t_e: float = 350.0
    # truth profile (arbitrary plausible values; results are relative)
    truth_alpha_c: float = 250.0
    truth_alpha_p: float = 750.0
    # inlet / initial state: solid shell over a liquid core
    t_surface_init: float = 1350.0
    t_core_init: float = 1820.0
    shell_depth: float = 0.05
    # grid
    q: float = 0.01
    d_phi: float = 0.0025
    dt: float = 0.0                  # 0 selects the stability bound
    # forward settling and sampling
    t_settle: float = 420.0
    sample_dt: float = 12.0
    probe: int = -1                  # surface node index; -1 = mid of widest K run
    # noise
    noise_sigma_profile: float = 5.0   # surface-map experiments
    noise_sigma_probe: float = 3.0     # single-point tuning experiments
    seed: int = DEFAULT_SEED
    # operative tuning scenario
    initial_offset: float = 0.30
    sa_max_iter: int = 400
    eps_rel: float = 0.005
    stop_window: int = 10
    out_dir: str = "out"

    def __post_init__(self):
        if self.noise_sigma_profile < 0 or self.noise_sigma_probe < 0:
            raise ConfigError("noise sigma must be >= 0")
        if self.v <= 0:
            raise ConfigError("casting speed must be > 0")
        self.nozzles = tuple(float(a) for a in self.nozzles)

    # -- scenario building ------------------------------------------------

    def load_material(self) -> MaterialProperties:
        if isinstance(self.material, MaterialProperties):
            return self.material
        path = Path(str(self.material))
        if path.suffix == ".mat" or path.exists():
            return load_material(path)
        return builtin_material(str(self.material))

    def section(self) -> CurvilinearSection:
        return CurvilinearSection(index_m=1, r_m=self.r_m, phi_span=self.phi_span,
                                  nozzles=self.nozzles, w=self.w)

    def grid(self):
        return build_section_grid(self.section(), self.l, GridSpec(q=self.q, d_phi=self.d_phi))

    def environment(self) -> SectionEnvironment:
        return SectionEnvironment(c_i=self.c_i, t_i=self.t_i, c_e=self.c_e, t_e=self.t_e)

    def truth_profile(self) -> ChtcProfile:
        return ChtcProfile(self.truth_alpha_c, self.truth_alpha_p, self.w, self.nozzles)

    def inlet_profile(self, grid=None) -> np.ndarray:
        grid = grid or self.grid()
        return shell_profile(grid.across, self.t_surface_init, self.t_core_init,
                             self.shell_depth)

    def probe_index(self, grid=None) -> int:
        if self.probe >= 0:
            return self.probe
        grid = grid or self.grid()
        return mid_section_k_node(grid)

    def build_solver(self, inner_profile: ChtcProfile,
                     outer_profile: ChtcProfile | None = None) -> SectionSolver:
        grid = self.grid()
        inlet = self.inlet_profile(grid)
        if outer_profile is None:
            outer_profile = uniform_profile(inner_profile.alpha_c)
        return build_section_solver(
            grid, self.load_material(), self.environment(),
            inner_profile=inner_profile, outer_profile=outer_profile,
            speed=self.section().angular_velocity(self.v, self.l),
            inlet_profile=inlet, initial=inlet)

    def template_solver(self) -> SectionSolver:
        """Forward model with placeholder coefficients for identification."""
        return self.build_solver(uniform_profile(1.0), uniform_profile(1.0))

    # -- (de)serialization -------------------------------------------------

    def to_kv(self) -> dict:
        out = {}
        for f in fields(self):
            value = getattr(self, f.name)
            if isinstance(value, MaterialProperties):
                value = value.name
            if isinstance(value, tuple):
                value = " ".join(repr(v) for v in value)
            out[f"experiment.{f.name}"] = value
        return out

    @classmethod
    def from_kv(cls, scalars: dict) -> "ExperimentConfig":
        kwargs = {}
        defaults = cls()
        for f in fields(cls):
            key = f"experiment.{f.name}"
            if key not in scalars:
                continue
            current = getattr(defaults, f.name)
            if f.name == "nozzles":
                kwargs[f.name] = tuple(kvformat.get_floats(scalars, key))
            elif isinstance(current, bool):
                kwargs[f.name] = scalars[key].lower() in ("1", "true", "yes")
            elif isinstance(current, int) and not isinstance(current, bool):
                kwargs[f.name] = kvformat.get_int(scalars, key)
            elif isinstance(current, float):
                kwargs[f.name] = kvformat.get_float(scalars, key)
            else:
                kwargs[f.name] = scalars[key]
        return cls(**kwargs)

    @classmethod
    def from_file(cls, path) -> "ExperimentConfig":
        scalars, _ = kvformat.read_kv_file(path)
        return cls.from_kv(scalars)

    def write_resolved(self, path) -> None:
        kvformat.write_kv_file(path, self.to_kv(),
                               header="resolved experiment configuration")


def shell_profile(across: np.ndarray, t_surface: float, t_core: float,
                  depth: float) -> np.ndarray:
    """Symmetric solid-shell profile across the thickness."""
    d = np.minimum(across - across[0], across[-1] - across)
    return t_surface + (t_core - t_surface) * np.clip(d / depth, 0.0, 1.0)


def mid_section_k_node(grid) -> int:
    """Nozzle-free surface node closest to the middle of the section."""
    k = grid.k_nodes()
    if k.size == 0:
        raise ConfigError("section has no nozzle-free surface nodes for the probe")
    mid = 0.5 * (grid.along[0] + grid.along[-1])
    return int(k[np.argmin(np.abs(grid.along[k] - mid))])


# -- measurement synthesis -----------------------------------------------------

@dataclass
class SurfaceMeasurement:
    """One tapped surface snapshot, ready for identification."""

    coords: np.ndarray
    temps: np.ndarray            # noisy measured temperatures
    front_xi: np.ndarray         # inner front curve at the snapshot instant
    fully_solid: np.ndarray
    time: float


def settle_truth(config: ExperimentConfig) -> SectionSolver:
    solver = config.build_solver(config.truth_profile())
    solver.run_to(config.t_settle, dt=config.dt)
    return solver


def synthesize_surface_measurement(config: ExperimentConfig, rng,
                                   solver: SectionSolver | None = None,
                                   sigma: float | None = None,
                                   face: str = "inner") -> SurfaceMeasurement:
    """Tap the truth surface, add seeded Gaussian noise, attach the front."""
    if sigma is None:
        sigma = config.noise_sigma_profile
    if sigma < 0:
        raise ConfigError("noise sigma must be >= 0")
    if solver is None:
        solver = settle_truth(config)
    coords, clean = solver.surface_temperatures(face)
    noise = rng.normal(0.0, sigma, size=clean.shape) if sigma > 0 else 0.0
    front = section_front(solver)
    xi = front.xi1 if face == "inner" else front.xi2
    return SurfaceMeasurement(coords=coords, temps=clean + noise,
                              front_xi=xi.copy(),
                              fully_solid=front.fully_solid.copy(),
                              time=solver.time)


def truth_probe_stream(config: ExperimentConfig, rng, n_samples: int,
                       solver: SectionSolver | None = None,
                       sigma: float | None = None):
    """Noisy single-point measurement stream from an advancing truth model."""
    if sigma is None:
        sigma = config.noise_sigma_probe
    if sigma < 0:
        raise ConfigError("noise sigma must be >= 0")
    if solver is None:
        solver = settle_truth(config)
    probe = config.probe_index(solver.grid)
    for _ in range(n_samples):
        solver.run_to(solver.time + config.sample_dt, dt=config.dt)
        clean = float(solver.t[probe, 0])
        yield clean + (rng.normal(0.0, sigma) if sigma > 0 else 0.0)


def tunable_model(config: ExperimentConfig, model_alpha_p: float | None = None,
                  settle_alpha: float | None = None):
    """Callable forward model for the tuning loop.

    Each call sets the baseline of both cooled faces to the supplied
    coefficient (the parabola height is the previously identified value),
    advances one sampling interval and returns the probe temperature.  The
    model is settled at `settle_alpha` first, i.e. the state a plant model
    would be in after running with its initially identified coefficient.
    """
    grid = config.grid()
    alpha_p = config.truth_alpha_p if model_alpha_p is None else model_alpha_p
    if settle_alpha is None:
        settle_alpha = config.truth_alpha_c * (1 + config.initial_offset)
    template = ChtcProfile(1.0, alpha_p, config.w, config.nozzles)
    solver = config.build_solver(template.with_alpha_c(settle_alpha),
                                 uniform_profile(settle_alpha))
    solver.run_to(config.t_settle, dt=config.dt)
    probe = config.probe_index(grid)

    def model(alpha_c: float) -> float:
        profile = template.with_alpha_c(max(alpha_c, 1e-6))
        solver.set_surface_profiles(inner_alpha=profile.profile_vector(grid),
                                    outer_alpha=max(alpha_c, 1e-6))
        solver.run_to(solver.time + config.sample_dt, dt=config.dt)
        return float(solver.t[probe, 0])

    model.solver = solver
    model.probe = probe
    return model


def write_measurement_csv(path, meas: SurfaceMeasurement) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["coord", "T", "xi", "fully_solid"])
        for i in range(meas.coords.size):
            xi = meas.front_xi[i]
            writer.writerow([f"{meas.coords[i]:.10g}", f"{meas.temps[i]:.10g}",
                             f"{xi:.10g}" if np.isfinite(xi) else "",
                             int(meas.fully_solid[i])])


def read_measurement_csv(path) -> SurfaceMeasurement:
    coords, temps, xi, solid = [], [], [], []
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        required = {"coord", "T"}
        if reader.fieldnames is None or not required.issubset(reader.fieldnames):
            raise ConfigError("measurement CSV needs at least columns coord, T")
        for row in reader:
            coords.append(float(row["coord"]))
            temps.append(float(row["T"]))
            xi.append(float(row["xi"]) if row.get("xi") else np.nan)
            solid.append(bool(int(row["fully_solid"])) if row.get("fully_solid") else False)
    return SurfaceMeasurement(coords=np.asarray(coords), temps=np.asarray(temps),
                              front_xi=np.asarray(xi),
                              fully_solid=np.asarray(solid, dtype=bool), time=np.nan)


# -- profile-recovery experiment (instability contrast) -------------------------

@dataclass
class ProfileRecord:
    seed: int
    alpha_c_hat: float
    alpha_p_hat: float
    alpha_c_err: float
    alpha_p_err: float
    reversion_std: float         # spread of per-point estimates on K nodes


@dataclass
class Fig3Result:
    records: list
    truth_alpha_c: float
    truth_alpha_p: float
    node_coords: np.ndarray
    node_truth: np.ndarray
    node_reversion: np.ndarray   # per-point estimates of the first seed
    node_lsq: np.ndarray

    @property
    def mean_reversion_std(self) -> float:
        return float(np.mean([r.reversion_std for r in self.records]))

    @property
    def mean_lsq_abs_err(self) -> float:
        return float(np.mean([abs(r.alpha_c_err) for r in self.records]))


def run_profile_experiment(config: ExperimentConfig, n_seeds: int = 100) -> Fig3Result:
    """Contrast per-point reversion against the least-squares fit over seeds."""
    truth_solver = settle_truth(config)
    template = config.template_solver()
    grid = template.grid
    records = []
    node_reversion = None
    node_lsq = None
    for s in range(n_seeds):
        rng = np.random.default_rng(config.seed + s)
        meas = synthesize_surface_measurement(config, rng, solver=truth_solver)
        result = identify(template, meas.temps, meas.front_xi, meas.fully_solid)
        k_mask = result.samples.usable & ~grid.in_b & np.isfinite(result.alpha_direct)
        rev_std = float(np.std(result.alpha_direct[k_mask], ddof=1))
        records.append(ProfileRecord(
            seed=config.seed + s,
            alpha_c_hat=result.profile.alpha_c,
            alpha_p_hat=result.profile.alpha_p,
            alpha_c_err=result.profile.alpha_c - config.truth_alpha_c,
            alpha_p_err=result.profile.alpha_p - config.truth_alpha_p,
            reversion_std=rev_std))
        if node_reversion is None:
            node_reversion = result.alpha_direct.copy()
            node_lsq = result.profile.profile_vector(grid)
    node_truth = config.truth_profile().profile_vector(grid)
    return Fig3Result(records=records, truth_alpha_c=config.truth_alpha_c,
                      truth_alpha_p=config.truth_alpha_p,
                      node_coords=grid.along.copy(), node_truth=node_truth,
                      node_reversion=node_reversion, node_lsq=node_lsq)


def write_profile_records(result: Fig3Result, out_dir) -> None:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    with open(out / "profile_recovery_seeds.csv", "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["seed", "alpha_c_hat", "alpha_p_hat",
                         "alpha_c_err", "alpha_p_err", "reversion_std"])
        for r in result.records:
            writer.writerow([r.seed] + [f"{v:.10g}" for v in
                                        (r.alpha_c_hat, r.alpha_p_hat, r.alpha_c_err,
                                         r.alpha_p_err, r.reversion_std)])
    with open(out / "profile_recovery_nodes.csv", "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["coord", "alpha_truth", "alpha_reversion", "alpha_lsq"])
        for c, t, rev, lsq in zip(result.node_coords, result.node_truth,
                                  result.node_reversion, result.node_lsq):
            writer.writerow([f"{c:.10g}", f"{t:.10g}",
                             f"{rev:.10g}" if np.isfinite(rev) else "",
                             f"{lsq:.10g}"])


def outlier_robustness(config: ExperimentConfig, solver: SectionSolver | None = None,
                       fraction: float = 0.05, magnitude: float = 200.0,
                       n_trials: int = 10) -> dict:
    """Report how far scattered bad readings move the baseline estimate.

    A `fraction` of the surface readings is corrupted by +-`magnitude` K per
    trial; the movement of the fitted baseline is compared against
    fraction * max|P/Q| of the clean fit.  Reported, not asserted: callers
    decide what to do with a violation.
    """
    if solver is None:
        solver = settle_truth(config)
    template = config.template_solver()
    rng = np.random.default_rng(config.seed + 1009)
    clean = synthesize_surface_measurement(config, rng, solver=solver, sigma=0.0)
    base = identify(template, clean.temps, clean.front_xi, clean.fully_solid)
    finite = np.isfinite(base.alpha_direct)
    bound = fraction * float(np.max(np.abs(base.alpha_direct[finite])))
    moves = []
    n_bad = max(1, int(round(fraction * clean.temps.size)))
    for _ in range(n_trials):
        temps = clean.temps.copy()
        idx = rng.choice(clean.temps.size, size=n_bad, replace=False)
        temps[idx] += rng.choice([-magnitude, magnitude], size=n_bad)
        result = identify(template, temps, clean.front_xi, clean.fully_solid)
        moves.append(abs(result.profile.alpha_c - base.profile.alpha_c))
    worst = float(max(moves))
    return {"worst_move": worst, "bound": bound, "within_bound": worst < bound,
            "fraction": fraction, "magnitude": magnitude, "n_trials": n_trials}


# -- step-size sweeps -------------------------------------------------------------

@dataclass
class TrajectoryRecord:
    label: str
    sequence: StepSequence
    truth: float
    alpha0: float
    result: TuningResult

    def alphas(self) -> np.ndarray:
        return np.array([row[1] for row in self.result.trajectory])

    def residuals(self) -> np.ndarray:
        return np.array([row[3] for row in self.result.trajectory])

    def rel_error_at(self, iteration: int) -> float:
        alphas = self.alphas()
        if alphas.size == 0:
            return np.nan
        idx = min(iteration, alphas.size) - 1
        return abs(alphas[idx] - self.truth) / abs(self.truth)

    def iterations_to(self, tol: float) -> int:
        """First iteration after which the iterate stays within tol of truth."""
        alphas = self.alphas()
        ok = np.abs(alphas - self.truth) <= tol * abs(self.truth)
        for j in range(alphas.size):
            if ok[j:].all():
                return j + 1
        return -1

    def max_overshoot(self) -> float:
        """Largest swing past the truth, measured against the approach side."""
        alphas = self.alphas()
        if alphas.size == 0:
            return 0.0
        direction = np.sign(self.alpha0 - self.truth) or 1.0
        return float(max(0.0, np.max((self.truth - alphas) * direction)))

    def sign_alternations(self) -> int:
        r = self.residuals()
        if r.size < 2:
            return 0
        return int(np.count_nonzero(r[:-1] * r[1:] < 0))


def default_sweep() -> list[tuple[str, StepSequence]]:
    cells = []
    for a in (0.5, 1.0, 2.0, 4.0):
        cells.append((f"harmonic_a{a:g}_b0", StepSequence("harmonic", a, 0.0)))
    cells.append(("harmonic_a1_b10", StepSequence("harmonic", 1.0, 10.0)))
    for a in (1.0, 2.0, 3.0):
        cells.append((f"sign-reset_a{a:g}", StepSequence("sign-reset", a)))
    for a in (1.35,):
        cells.append((f"sign-increment_a{a:g}", StepSequence("sign-increment", a)))
    return cells


def load_sweep(path) -> list[tuple[str, StepSequence]]:
    """Sweep grid file: rows `variant a [b]` in a [sweep] block."""
    scalars, tables = kvformat.read_kv_file(path)
    cells = []
    if "sweep" in tables:
        raise ConfigError("sweep rows must be 'variant a [b]' text lines, "
                          "use variant = harmonic|sign-reset|sign-increment keys")
    for key, value in scalars.items():
        if not key.startswith("sweep.cell"):
            continue
        toks = value.split()
        if len(toks) < 2:
            raise ConfigError(f"sweep cell {value!r} needs 'variant a [b]'")
        variant, a = toks[0], float(toks[1])
        b = float(toks[2]) if len(toks) > 2 else 0.0
        cells.append((f"{variant}_a{a:g}" + (f"_b{b:g}" if b else ""),
                      StepSequence(variant, a, b)))
    if not cells:
        raise ConfigError("sweep file defines no cells (keys sweep.cellN)")
    return cells


def run_tuning_cell(config: ExperimentConfig, seq: StepSequence, *,
                    seed_offset: int = 0, n_samples: int | None = None,
                    alpha0: float | None = None, model_alpha_p: float | None = None,
                    stop: bool = True) -> TrajectoryRecord:
    """One tuning run against a fresh truth stream, common starting point.

    With stop=False the acceptance window is disabled so the run traces the
    full trajectory (parameter studies want the whole path).
    """
    n = n_samples if n_samples is not None else config.sa_max_iter
    rng = np.random.default_rng(config.seed + 7919 * (seed_offset + 1))
    stream = truth_probe_stream(config, rng, n)
    start = alpha0 if alpha0 is not None else config.truth_alpha_c * (1 + config.initial_offset)
    model = tunable_model(config, model_alpha_p, settle_alpha=start)
    result = run_tuning(model, stream, seq, start,
                        eps_rel=config.eps_rel if stop else 0.0,
                        m=config.stop_window, max_iter=n)
    label = f"{seq.variant}_a{seq.a:g}" + (f"_b{seq.b:g}" if seq.b else "")
    return TrajectoryRecord(label=label, sequence=seq, truth=config.truth_alpha_c,
                            alpha0=start, result=result)


def run_sweeps(config: ExperimentConfig, cells=None, out_dir=None) -> list[TrajectoryRecord]:
    cells = cells if cells is not None else default_sweep()
    records = []
    for idx, (label, seq) in enumerate(cells):
        rec = run_tuning_cell(config, seq, seed_offset=idx, stop=False)
        rec.label = label
        records.append(rec)
    if out_dir is not None:
        out = Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)
        for rec in records:
            rec.result.write_csv(out / f"trajectory_{rec.label}.csv")
        with open(out / "sweep_summary.csv", "w", newline="", encoding="utf-8") as fh:
            writer = csv.writer(fh)
            writer.writerow(["label", "variant", "a", "b", "status", "final_alpha",
                             "truth", "iters_to_5pct", "max_overshoot",
                             "sign_alternations"])
            for rec in records:
                writer.writerow([
                    rec.label, rec.sequence.variant, f"{rec.sequence.a:g}",
                    f"{rec.sequence.b:g}", rec.result.status,
                    f"{rec.result.alpha:.10g}", f"{rec.truth:.10g}",
                    rec.iterations_to(0.05), f"{rec.max_overshoot():.10g}",
                    rec.sign_alternations()])
    return records


# -- plots -------------------------------------------------------------------------

def emit_plots(out_dir, *, trajectories=None, profile_result=None) -> list:
    """Vector plots for the recovery experiments; byte-stable per input."""
    import matplotlib
    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    plt.rcParams["svg.hashsalt"] = "castcool"
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    written = []
    meta = {"Date": None}
    if trajectories:
        fig, ax = plt.subplots(figsize=(7, 4.5))
        for rec in trajectories:
            alphas = rec.alphas()
            ax.plot(np.arange(1, alphas.size + 1),
                    (alphas - rec.truth) / rec.truth * 100.0, label=rec.label)
        ax.axhline(0.0, color="k", lw=0.6)
        ax.set_xlabel("iteration")
        ax.set_ylabel("deviation from truth [%]")
        ax.legend(fontsize=8)
        path = out / "tuning_trajectories.svg"
        fig.savefig(path, metadata=meta)
        plt.close(fig)
        written.append(path)
    if profile_result is not None:
        fig, ax = plt.subplots(figsize=(7, 4.5))
        r = profile_result
        ax.plot(r.node_coords, r.node_reversion, ".", ms=3, label="per-point reversion")
        ax.plot(r.node_coords, r.node_lsq, lw=1.5, label="least-squares profile")
        ax.plot(r.node_coords, r.node_truth, "--", lw=1.0, label="truth")
        ax.set_xlabel("surface coordinate [rad]")
        ax.set_ylabel("alpha [W/(m^2 K)]")
        ax.legend(fontsize=8)
        path = out / "profile_recovery.svg"
        fig.savefig(path, metadata=meta)
        plt.close(fig)
        written.append(path)
    return written
