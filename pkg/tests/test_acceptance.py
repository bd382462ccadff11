"""End-to-end acceptance suite.

Each test prints one PASS/FAIL line (run with `pytest -s` to see them all).
Thresholds are fixed here; scenario knobs live in the shared acceptance
configuration below.
"""

import numpy as np
import pytest
from scipy.optimize import brentq
from scipy.special import erf, erfc

from castcool.errors import ConfigError
from castcool.fronts import extract_front, stefan_residual
from castcool.geometry import GridSpec, MouldGeometry, RectilinearSection, \
    build_mould_grid, build_section_grid
from castcool.harness import (ExperimentConfig, run_profile_experiment,
                              run_tuning_cell, settle_truth,
                              synthesize_surface_measurement, tunable_model)
from castcool.ident_lsq import fit_alpha_c, fit_alpha_p, identify
from castcool.ident_sa import SaState, StepSequence, step_size
from castcool.materials import constant_material
from castcool.mould import MouldEnvironment, MouldSolver, WaterChannel
from castcool.solver import (SectionSolver, SurfaceCooling, energy_audit,
                             field_bounds_ok)

AUDIT_LEDGER = {}


def report(criterion, ok, detail):
    print(f"\nACCEPTANCE criterion {criterion:>2}: {'PASS' if ok else 'FAIL'} - {detail}")
    assert ok, f"criterion {criterion}: {detail}"


# -- shared scenario -----------------------------------------------------------

@pytest.fixture(scope="module")
def config():
    # default slab scenario; probe on the downstream nozzle-free stretch
    return ExperimentConfig(probe=112)


@pytest.fixture(scope="module")
def truth(config):
    solver = settle_truth(config)
    audit = energy_audit(solver, 60.0)
    t_lo = min(config.t_i, config.t_e)
    AUDIT_LEDGER["identification quasi-steady"] = audit
    AUDIT_LEDGER["identification bounds"] = (
        field_bounds_ok(solver, t_lo, config.t_core_init)
        and audit["t_min"] >= t_lo - 1e-6
        and audit["t_max"] <= config.t_core_init + 1e-6)
    return solver


# -- criterion 1: freezing-front oracle ----------------------------------------

SLAB = dict(c=700.0, rho=7400.0, lam=30.0, mu=2.72e5,
            t_kr=1768.0, t_cold=1300.0, t_init=1788.0)


def neumann_kappa():
    c, rho, lam = SLAB["c"], SLAB["rho"], SLAB["lam"]
    a = lam / (c * rho)
    t_kr, t_cold, t_init, mu = SLAB["t_kr"], SLAB["t_cold"], SLAB["t_init"], SLAB["mu"]

    def f(k):
        solid = lam * (t_kr - t_cold) * np.exp(-k * k) / (erf(k) * np.sqrt(np.pi * a))
        liquid = lam * (t_init - t_kr) * np.exp(-k * k) / (erfc(k) * np.sqrt(np.pi * a))
        return solid - liquid - rho * mu * k * np.sqrt(a)

    return brentq(f, 1e-6, 3.0), a


def freeze_slab(n_nodes, dt_smear, t_end):
    mat = constant_material(SLAB["c"], SLAB["rho"], SLAB["lam"], mu=SLAB["mu"],
                            t_kr=SLAB["t_kr"], dt_smear=dt_smear,
                            t_lo=1000.0, t_hi=2000.0)
    section = RectilinearSection(z_p=0.0, x_f=0.02, nozzles=(), w=0.005)
    grid = build_section_grid(section, 0.15, GridSpec(q=0.3 / (n_nodes - 1), d_x=0.01))
    solver = SectionSolver(grid, mat, inner=SurfaceCooling(1e8, 0.0, SLAB["t_cold"]),
                           outer=SurfaceCooling(0.0, 0.0, SLAB["t_cold"]),
                           speed=0.0, initial=SLAB["t_init"])
    solver.run_to(t_end)
    return solver, mat, grid


@pytest.fixture(scope="module")
def neumann_runs():
    kappa, a = neumann_kappa()
    xi_target = 0.05
    t_eval = (xi_target / (2.0 * kappa)) ** 2 / a
    errors = []
    probes = []
    finest = None
    with np.errstate(all="ignore"):
        for n_nodes, dt_smear in ((41, 30.0), (81, 15.0), (161, 7.5)):
            import warnings
            with warnings.catch_warnings():
                warnings.simplefilter("ignore", RuntimeWarning)
                solver, mat, grid = freeze_slab(n_nodes, dt_smear, t_eval)
            front = extract_front(solver.t, grid.across, mat, grid.along)
            xi = float(front.xi1[1])
            errors.append(abs(xi - xi_target) / xi_target)
            # probe well inside the solid shell where the profile is developed
            probes.append(float(np.interp(0.02, grid.across, solver.t[1])))
            finest = (solver, mat, grid, front, t_eval)
    return errors, probes, finest


def test_c01_freezing_front_matches_similarity_solution(neumann_runs):
    errors, probes, finest = neumann_runs
    orders = [np.log2(errors[k] / errors[k + 1]) for k in range(2)]
    solver, mat, grid, front, t_eval = finest
    AUDIT_LEDGER["slab bounds"] = field_bounds_ok(solver, SLAB["t_cold"], SLAB["t_init"])
    # interior temperatures refine at first order too
    t_order = np.log2(abs(probes[0] - probes[1]) / abs(probes[1] - probes[2]))
    ok = errors[-1] <= 0.02 and min(orders) >= 0.8 and t_order >= 0.8
    report(1, ok, f"front errors {['%.2f%%' % (e * 100) for e in errors]}, "
                  f"orders {['%.2f' % o for o in orders]}, "
                  f"temperature order {t_order:.2f}")


def test_c01b_slab_energy_audit_and_stefan_residual(neumann_runs):
    # supporting evidence for criteria 1 and 10 on the freezing slab
    _, _, (solver, mat, grid, front_mid, t_eval) = neumann_runs
    audit = energy_audit(solver, 0.2 * t_eval)
    AUDIT_LEDGER["slab transient"] = audit
    AUDIT_LEDGER["slab stepwise bounds"] = (
        audit["t_min"] >= SLAB["t_cold"] - 1e-6
        and audit["t_max"] <= SLAB["t_init"] + 1e-6)
    # interface balance needs one more refinement level to resolve the
    # one-sided gradients next to the latent band
    import warnings
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", RuntimeWarning)
        fine, fine_mat, fine_grid = freeze_slab(321, 3.75, t_eval)
    prev = extract_front(fine.t, fine_grid.across, fine_mat, fine_grid.along)
    t_before = fine.time
    fine.run_to(fine.time + 0.12 * t_eval)
    front = extract_front(fine.t, fine_grid.across, fine_mat, fine_grid.along)
    res = stefan_residual(fine.t, fine_grid.across, fine_mat, front, prev,
                          fine.time - t_before)
    assert res["n_samples"] >= 1
    assert res["mean_relative"] <= 0.05


# -- criterion 2: noiseless identification round trip -----------------------------

@pytest.fixture(scope="module")
def lsq_roundtrip(config, truth):
    rng = np.random.default_rng(config.seed)
    meas = synthesize_surface_measurement(config, rng, solver=truth, sigma=0.0)
    template = config.template_solver()
    return identify(template, meas.temps, meas.front_xi, meas.fully_solid)


def test_c02_noiseless_round_trip_within_2pct(config, lsq_roundtrip):
    err_c = abs(lsq_roundtrip.profile.alpha_c - config.truth_alpha_c) / config.truth_alpha_c
    err_p = abs(lsq_roundtrip.profile.alpha_p - config.truth_alpha_p) / config.truth_alpha_p
    ok = err_c <= 0.02 and err_p <= 0.02
    report(2, ok, f"alpha_c err {err_c * 100:.2f}%, alpha_p err {err_p * 100:.2f}%")


def test_c02b_round_trip_error_shrinks_under_refinement(config, lsq_roundtrip):
    # supporting evidence: the recovery is discretization-limited
    fine_cfg = ExperimentConfig(probe=config.probe, q=config.q / 2,
                                d_phi=config.d_phi / 2)
    solver = settle_truth(fine_cfg)
    rng = np.random.default_rng(fine_cfg.seed)
    meas = synthesize_surface_measurement(fine_cfg, rng, solver=solver, sigma=0.0)
    fine = identify(fine_cfg.template_solver(), meas.temps, meas.front_xi,
                    meas.fully_solid)
    coarse_err = abs(lsq_roundtrip.profile.alpha_c - config.truth_alpha_c)
    fine_err = abs(fine.profile.alpha_c - fine_cfg.truth_alpha_c)
    assert fine_err < coarse_err


# -- criterion 3: per-point reversion instability contrast --------------------------

def test_c03_reversion_scatter_vs_lsq_error(config):
    result = run_profile_experiment(config, n_seeds=100)
    ratio = result.mean_reversion_std / result.mean_lsq_abs_err
    ok = ratio >= 5.0
    report(3, ok, f"reversion std {result.mean_reversion_std:.2f} vs "
                  f"lsq |err| {result.mean_lsq_abs_err:.2f} (ratio {ratio:.1f})")


# -- criterion 4: closed forms against brute-force scans ------------------------------

def test_c04_closed_forms_match_brute_force_scans():
    rng = np.random.default_rng(424242)
    worst = 0.0
    for _ in range(25):
        q_ = rng.uniform(-1200.0, -300.0, size=30)
        alpha_true = rng.uniform(100.0, 600.0)
        p = alpha_true * q_ + rng.normal(0.0, 3000.0, size=30)
        closed = fit_alpha_c(p, q_)
        grid = np.linspace(0.5 * closed, 1.5 * closed, 1001)
        scan = grid[np.argmin([np.sum((p - a * q_) ** 2) for a in grid])]
        worst = max(worst, abs(closed - scan) / (grid[1] - grid[0]))
    for _ in range(25):
        w = 0.05
        y = rng.uniform(-0.95 * w, 0.95 * w, size=30)
        q_ = rng.uniform(-1200.0, -300.0, size=30)
        alpha_c = rng.uniform(150.0, 400.0)
        alpha_p_true = rng.uniform(200.0, 900.0)
        p = (alpha_c + alpha_p_true * (1 - (y / w) ** 2)) * q_ \
            + rng.normal(0.0, 3000.0, size=30)
        closed = fit_alpha_p(p, q_, y, w, alpha_c)
        grid = np.linspace(0.5 * closed, 1.5 * closed, 1001)
        scan = grid[np.argmin([np.sum((p - (alpha_c + a * (1 - (y / w) ** 2)) * q_) ** 2)
                               for a in grid])]
        worst = max(worst, abs(closed - scan) / (grid[1] - grid[0]))
    ok = worst <= 1.0
    report(4, ok, f"50 randomized instances, worst offset {worst:.2f} scan steps")


# -- criteria 5-7, 11: tuning behaviour ------------------------------------------------

@pytest.fixture(scope="module")
def harmonic_records(config):
    records = {}
    for idx, a in enumerate((0.5, 1.0, 2.0, 4.0)):
        records[a] = run_tuning_cell(config, StepSequence("harmonic", a),
                                     seed_offset=idx, n_samples=205, stop=False)
    return records


def test_c05_harmonic_a_study(config, harmonic_records):
    r = harmonic_records
    e200 = {a: rec.rel_error_at(200) for a, rec in r.items()}
    checks = {
        "a=1 within 5% by 200": e200[1.0] <= 0.05,
        "a=0.5 slower than a=1": e200[0.5] > e200[1.0],
        "a=2 converged with alternation": e200[2.0] <= 0.05
                                          and r[2.0].sign_alternations() >= 1,
        "a=4 overshoots more than a=2": r[4.0].max_overshoot() > r[2.0].max_overshoot(),
    }
    detail = (f"e200={{0.5: {e200[0.5]:.3f}, 1: {e200[1.0]:.3f}, 2: {e200[2.0]:.3f}, "
              f"4: {e200[4.0]:.3f}}}, overshoot 2/4 = "
              f"{r[2.0].max_overshoot():.1f}/{r[4.0].max_overshoot():.1f}")
    report(5, all(checks.values()),
           detail + "".join(f"; {k}: {v}" for k, v in checks.items() if not v))


def test_c06_harmonic_b_study(config, harmonic_records):
    rec_b10 = run_tuning_cell(config, StepSequence("harmonic", 1.0, 10.0),
                              seed_offset=11, n_samples=105, stop=False)
    e_b0 = harmonic_records[1.0].rel_error_at(100)
    e_b10 = rec_b10.rel_error_at(100)
    with pytest.raises(ConfigError):
        StepSequence("harmonic", 1.0, -4.0)
    ok = e_b10 > e_b0
    report(6, ok, f"e100(b=10) {e_b10:.3f} > e100(b=0) {e_b0:.3f}; "
                  f"negative b rejected at validation")


def test_c07_sign_increment_fast_start(config):
    rec = run_tuning_cell(config, StepSequence("sign-increment", 1.35),
                          seed_offset=21, n_samples=25, stop=False)
    e20 = rec.rel_error_at(20)
    ok = e20 <= 0.06
    report(7, ok, f"sign-increment a=1.35: error after 20 iterations {e20 * 100:.2f}%")


def test_c08_step_sequence_properties():
    j = np.arange(1, 10 ** 6 + 1, dtype=float)
    k = 1.0 / j
    cond_limit = k[-1] < 1e-5
    cond_divergent = np.sum(k) > 10.0
    tail = abs(np.sum(k ** 2) - np.sum(k[:10 ** 5] ** 2))
    cond_square = tail < 1e-4
    nonincreasing = True
    rng = np.random.default_rng(8)
    for variant in ("sign-reset", "sign-increment"):
        for _ in range(20):
            seq = StepSequence(variant, 1.0)
            state = SaState(alpha=1.0)
            last = np.inf
            for jj, r in enumerate(rng.choice([-1.0, 1.0], size=400), start=1):
                state.j = jj
                kk = step_size(seq, state, float(r))
                nonincreasing &= kk <= last + 1e-15
                last = kk
                state.last_residual = float(r)
    ok = cond_limit and cond_divergent and cond_square and nonincreasing
    report(8, ok, f"k(1e6)={k[-1]:.1e}, sum={np.sum(k):.1f}, "
                  f"square-tail={tail:.1e}, sign rules nonincreasing={nonincreasing}")


def test_c09_water_channel_closed_form():
    mould = MouldGeometry(l=0.1, big_z=0.7, d=0.135, z0=-0.1, delta=5e-4)
    grid = build_mould_grid(mould, GridSpec(q=0.01, d_z=0.025))
    steel = constant_material(680.0, 7400.0, 30.0, mu=2.72e5, t_kr=1768.0)
    wall = constant_material(390.0, 8900.0, 380.0, mu=1.0, t_kr=1357.0, dt_smear=1.0)
    env = MouldEnvironment(sigma_n=4.5, c_n=4.5, lambda_gz=0.08, alpha_2=50.0,
                           alpha_3=50.0, alpha_4=100.0, t_os1=1600.0,
                           t_os2=320.0, t_os3=320.0)
    t_wall = 380.0
    water = WaterChannel(c_w=4.18e6, s_ch=2e-3, v_water=5.0, p_i=2.2, p_e=2.4,
                         alpha_1=2e4, alpha_e=0.0, t_e=310.0, t_inlet=305.0)
    ms = MouldSolver(mould, grid, steel=steel, wall_material=wall, env=env,
                     water=water, v=0.0, t_cast=1820.0, initial_wall=t_wall)
    dz = grid.wall_z[1] - grid.wall_z[0]
    for _ in range(200):
        ms.step_water(dz / water.v_water)
    kappa = water.p_i * water.alpha_1 / (water.c_w * water.s_ch * water.v_water)
    closed = t_wall + (305.0 - t_wall) * np.exp(kappa * (grid.wall_z - grid.wall_z[-1]))
    rel = float(np.max(np.abs(ms.t_water - closed) / np.abs(closed)))
    ok = rel <= 1e-6
    report(9, ok, f"steady channel profile vs closed form: max rel err {rel:.2e}")


def test_c11_wide_initial_basin(config):
    errors = {}
    for idx, mult in enumerate((0.5, 0.75, 1.5, 2.0)):
        rec = run_tuning_cell(config, StepSequence("harmonic", 1.0),
                              seed_offset=31 + idx, n_samples=205,
                              alpha0=mult * config.truth_alpha_c, stop=False)
        errors[mult] = rec.rel_error_at(200)
    ok = all(e <= 0.05 for e in errors.values())
    report(11, ok, "e200 per start multiple: "
           + ", ".join(f"{m}x: {e * 100:.2f}%" for m, e in errors.items()))


def test_c10_conservation_and_bounds_everywhere(config):
    # collected while the runs above executed; tune-model bounds added here
    model = tunable_model(config, settle_alpha=config.truth_alpha_c)
    model(config.truth_alpha_c)
    AUDIT_LEDGER["tuning-model bounds"] = field_bounds_ok(
        model.solver, min(config.t_i, config.t_e), config.t_core_init)
    audits = {k: v for k, v in AUDIT_LEDGER.items() if isinstance(v, dict)}
    bounds = {k: v for k, v in AUDIT_LEDGER.items() if isinstance(v, bool)}
    assert audits and bounds
    worst = max(v["residual_ratio"] for v in audits.values())
    ok = worst <= 0.005 and all(bounds.values())
    report(10, ok, f"worst audit residual {worst * 100:.3f}% over "
                   f"{list(audits)}; bounds {bounds}")
