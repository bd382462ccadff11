"""Command-line entry points.

Exit codes: 0 success, 2 configuration error, 3 numeric failure,
4 degenerate measurement data.
"""

from __future__ import annotations

import functools
import sys
from pathlib import Path

import click
import numpy as np

from . import configio, harness, kvformat
from .errors import ConfigError, DegenerateDataError, NumericFailure
from .ident_lsq import identify, write_identification_report
from .ident_sa import StepSequence
from .solver import export_fields, export_fronts


def _exit_codes(func):
    @functools.wraps(func)
    def wrapper(*args, **kwargs):
        try:
            return func(*args, **kwargs)
        except ConfigError as exc:
            click.echo(f"config error: {exc}", err=True)
            sys.exit(2)
        except NumericFailure as exc:
            click.echo(f"numeric failure: {exc}", err=True)
            sys.exit(3)
        except DegenerateDataError as exc:
            click.echo(f"degenerate data: {exc}", err=True)
            sys.exit(4)
    return wrapper


@click.group()
def main():
    """Thermal simulation and spray-cooling coefficient identification."""


@main.command()
@click.option("--config", "config_path", required=True, type=click.Path(exists=False))
@click.option("--out", "out_dir", default="out", type=click.Path())
@_exit_codes
def simulate(config_path, out_dir):
    """Forward machine run with field and front snapshots."""
    if not Path(config_path).exists():
        raise ConfigError(f"config file {config_path!r} not found")
    machine, run, scalars = configio.load_simulation(config_path)
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    configio.write_resolved_copy(scalars, out)

    history = []
    def tap(m):
        for sid, solver in m.all_solvers().items():
            coords, temps = solver.surface_temperatures("inner")
            history.append((m.time, sid, temps.min(), temps.max()))

    machine.run_to_time(run["t_end"], dt=run["dt"],
                        callback=tap if run["sample_dt"] else None,
                        callback_dt=run["sample_dt"])
    export_fields(machine.all_solvers(), out / "fields.csv")
    export_fronts(machine.fronts(), out / "fronts.csv")
    if history:
        with open(out / "surface_history.csv", "w", encoding="utf-8") as fh:
            fh.write("time,section,T_surface_min,T_surface_max\n")
            for t, sid, lo, hi in history:
                fh.write(f"{t:.10g},{sid},{lo:.10g},{hi:.10g}\n")
    click.echo(f"simulated to t = {machine.time:.3f} s; snapshots in {out}")


@main.command("identify")
@click.option("--config", "config_path", required=True, type=click.Path())
@click.option("--measurements", "meas_path", default=None, type=click.Path())
@click.option("--out", "out_dir", default="out", type=click.Path())
@_exit_codes
def identify_cmd(config_path, meas_path, out_dir):
    """Least-squares profile identification from a surface-temperature map."""
    if not Path(config_path).exists():
        raise ConfigError(f"config file {config_path!r} not found")
    config = harness.ExperimentConfig.from_file(config_path)
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    config.write_resolved(out / "resolved_config.txt")
    if meas_path is not None:
        meas = harness.read_measurement_csv(meas_path)
    else:
        rng = np.random.default_rng(config.seed)
        meas = harness.synthesize_surface_measurement(config, rng)
        harness.write_measurement_csv(out / "measurements.csv", meas)
    template = config.template_solver()
    if meas.temps.size != template.grid.n_along:
        raise ConfigError(
            f"measurements cover {meas.temps.size} nodes, section has "
            f"{template.grid.n_along}")
    result = identify(template, meas.temps, meas.front_xi, meas.fully_solid)
    write_identification_report(out / "identification_report.csv",
                                template.grid, result)
    kvformat.write_kv_file(out / "profile.txt",
                           result.profile.to_kv(template.grid.section_id),
                           header="identified coefficient profile")
    click.echo(f"alpha_c = {result.profile.alpha_c:.4f}  "
               f"alpha_p = {result.profile.alpha_p:.4f}  "
               f"(residual norm {result.residual_norm:.4g})")


@main.command()
@click.option("--config", "config_path", required=True, type=click.Path())
@click.option("--seq", "variant", default="harmonic",
              type=click.Choice(["harmonic", "sign-reset", "sign-increment"]))
@click.option("--a", "a", default=1.0, type=float)
@click.option("--b", "b", default=0.0, type=float)
@click.option("--out", "out_dir", default="out", type=click.Path())
@_exit_codes
def tune(config_path, variant, a, b, out_dir):
    """Operative tuning loop against a synthetic measurement stream."""
    if not Path(config_path).exists():
        raise ConfigError(f"config file {config_path!r} not found")
    config = harness.ExperimentConfig.from_file(config_path)
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    config.write_resolved(out / "resolved_config.txt")
    seq = StepSequence(variant, a, b)
    record = harness.run_tuning_cell(config, seq)
    record.result.write_csv(out / f"trajectory_{record.label}.csv")
    click.echo(f"{record.result.status}: alpha = {record.result.alpha:.4f} "
               f"after {record.result.iterations} iterations "
               f"(truth {record.truth:.4f})")


@main.command()
@click.option("--config", "config_path", required=True, type=click.Path())
@click.option("--grid", "grid_path", default=None, type=click.Path())
@click.option("--out", "out_dir", default="out", type=click.Path())
@_exit_codes
def sweep(config_path, grid_path, out_dir):
    """Step-size parameter study over sequences and coefficients."""
    if not Path(config_path).exists():
        raise ConfigError(f"config file {config_path!r} not found")
    config = harness.ExperimentConfig.from_file(config_path)
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    config.write_resolved(out / "resolved_config.txt")
    cells = harness.load_sweep(grid_path) if grid_path else None
    records = harness.run_sweeps(config, cells, out_dir=out)
    harness.emit_plots(out, trajectories=records)
    for rec in records:
        click.echo(f"{rec.label}: {rec.result.status} alpha={rec.result.alpha:.3f} "
                   f"iters_to_5pct={rec.iterations_to(0.05)}")


if __name__ == "__main__":
    main()
