"""
mixkpp: kernel tables, verification suites, evolutions, spreading fits and
traveling-wave sweeps for u_t - Delta u + (-Delta)^s u = f(u).

Exit codes: 0 every check passed, 1 a check failed or the run broke down,
2 the configuration was rejected.
"""
import logging
import os
import time
from dataclasses import dataclass
from enum import Enum
from functools import wraps
from pathlib import Path
from typing import Annotated, Dict, List, Optional

import numpy as np
import typer
from dotenv import load_dotenv
from rich import box
from rich.console import Console
from rich.logging import RichHandler
from rich.table import Table as RichTable

from . import __version__
from .config import LabConfig, parse_config
from .dynamics import check_time_monotonicity, pde_residual, solve
from .errors import ConfigError, LabError
from .fronts import (
    RateModel,
    Regime,
    check_spreading,
    expected_law,
    extract_front,
    fitted_radius,
    moving_frame_speed,
    reference_fit,
    regime_comparison,
    wave_sweep,
)
from .grid import set_fft_workers
from .kernels import (
    KernelKind,
    check_chapman_kolmogorov,
    check_oracle,
    check_scaling,
    check_table_invariants,
    check_two_sided_bounds,
    kernel_table,
)
from .outputs import Plot, RunResults, Series, Table, emit_outputs
from .reports import Check, Report
from .suites import load_suites, run_suite

logger = logging.getLogger("mixed_kpp")

app = typer.Typer(
    name="mixkpp",
    help="Mixed local-nonlocal Fisher-KPP numerical lab",
    add_completion=False,
)


class KernelCheck(str, Enum):
    MASS = "mass"
    SYMMETRY = "symmetry"
    SCALING = "scaling"
    CK = "ck"
    BOUNDS = "bounds"
    ORACLE = "oracle"


DEFAULT_KERNEL_CHECKS = (KernelCheck.MASS, KernelCheck.SYMMETRY, KernelCheck.ORACLE)
# positivity is reported with the mass invariant
_INVARIANT_CHECKS = {KernelCheck.MASS: ("mass", "positivity"), KernelCheck.SYMMETRY: ("symmetry",)}


@dataclass
class Session:
    config: LabConfig
    threads: int
    quiet: bool


def setup_logging(quiet: bool) -> None:
    level = logging.DEBUG if os.environ.get("DEBUG") else logging.WARNING if quiet else logging.INFO
    for handler in list(logger.handlers):
        logger.removeHandler(handler)
    handler = RichHandler(console=Console(stderr=True), show_path=False, markup=False)
    handler.setFormatter(logging.Formatter("%(message)s", datefmt="[%X]"))
    logger.addHandler(handler)
    logger.setLevel(level)
    logger.propagate = False


def _session(ctx: typer.Context) -> Session:
    return ctx.obj


def _exit_on_errors(command):
    @wraps(command)
    def run(*args, **kwargs):
        try:
            return command(*args, **kwargs)
        except ConfigError as err:
            logger.error("configuration error: %s", err)
            raise typer.Exit(code=2)
        except LabError as err:
            logger.error("%s: %s", type(err).__name__, err)
            raise typer.Exit(code=1)

    return run


def _summary(title: str, reports: Dict[str, Report]) -> None:
    table = RichTable(title=title, box=box.SIMPLE_HEAVY, show_header=True, header_style="bold magenta")
    table.add_column("check", style="cyan", no_wrap=True)
    table.add_column("stat", justify="right")
    table.add_column("tol", justify="right")
    table.add_column("pass", justify="center")
    for report in reports.values():
        for c in report.checks:
            mark = "[green]ok[/green]" if c.passed else "[bold red]FAIL[/bold red]"
            tol = "-" if np.isnan(c.tol) else f"{c.tol:.3g}"
            table.add_row(f"{report.name}.{c.name}", f"{c.stat:.6g}", tol, mark)
    Console().print(table)


def _finish(ctx: typer.Context, results: RunResults, timings: Dict[str, float]) -> None:
    session = _session(ctx)
    lab = session.config
    out_dir = lab.output.out_dir / results.command
    manifest = emit_outputs(results, out_dir, config=lab, timings=timings, plots=lab.output.plots)
    logger.debug("manifest hash inputs %s", manifest.input_hash)
    if not session.quiet:
        _summary(f"mixkpp {results.command}", {k: r for k, r in results.reports.items() if isinstance(r, Report)})
    if not results.passed:
        failed = [
            f"{r.name}.{c.name}" for r in results.reports.values() if isinstance(r, Report) for c in r.failures()
        ]
        logger.warning("failed checks: %s", ", ".join(failed))
        raise typer.Exit(code=1)


def _axis_slice(values: np.ndarray, dim: int) -> np.ndarray:
    """Section through the origin along the first axis."""
    if dim == 1:
        return values
    return values[:, values.shape[1] // 2]


@app.callback()
def main_callback(
    ctx: typer.Context,
    config: Annotated[Optional[Path], typer.Option("--config", "-c", help="TOML run configuration")] = None,
    out_dir: Annotated[Optional[Path], typer.Option("--out-dir", help="Directory for run artifacts")] = None,
    threads: Annotated[int, typer.Option("--threads", min=1, help="Worker threads for FFTs and experiment legs")] = 1,
    seed: Annotated[Optional[int], typer.Option("--seed", help="Seed for random probe families")] = None,
    quiet: Annotated[bool, typer.Option("--quiet", "-q", help="Warnings only, no summary table")] = False,
):
    load_dotenv()
    setup_logging(quiet)
    set_fft_workers(threads)
    overrides = {}
    if seed is not None:
        overrides.setdefault("experiment", {})["seed"] = seed
    if out_dir is not None:
        overrides.setdefault("output", {})["out_dir"] = str(out_dir)
    try:
        lab = parse_config(config, overrides=overrides)
    except ConfigError as err:
        logger.error("configuration error: %s", err)
        raise typer.Exit(code=2)
    logger.debug("mixkpp %s, config hash %s", __version__, lab.config_hash)
    ctx.obj = Session(lab, threads, quiet)


@app.command()
@_exit_on_errors
def kernel(
    ctx: typer.Context,
    check: Annotated[
        Optional[List[KernelCheck]],
        typer.Option("--check", help="Checks to run; repeat the flag. Defaults to mass, symmetry and oracle"),
    ] = None,
    oracle_points: Annotated[int, typer.Option(help="Lattice points compared against the quadrature oracle")] = 16,
):
    """Kernel tables at the configured times with the selected checks."""
    lab = _session(ctx).config
    started = time.perf_counter()
    grid = lab.grid.build()
    kind, s = lab.experiment.kernel_kind, lab.operator.s
    checks = tuple(dict.fromkeys(check or DEFAULT_KERNEL_CHECKS))
    if KernelCheck.SCALING in checks and kind is not KernelKind.FRACTIONAL:
        raise ConfigError(f"--check scaling needs experiment.kernel_kind = fractional, got {kind.value}")
    if KernelCheck.BOUNDS in checks and kind is KernelKind.GAUSSIAN:
        raise ConfigError("--check bounds needs experiment.kernel_kind = fractional or mixed")
    tables = [kernel_table(kind, grid, t, s) for t in lab.experiment.kernel_times]

    times = list(lab.experiment.kernel_times)
    report = Report("kernel", kind=kind, s=s, times=times, selected=[c.value for c in checks])
    columns = {"x": grid.axis}
    plot = Plot(f"{kind.value} kernel, s={s:g}", "x", "kernel", logy=True)
    bulk = np.abs(grid.axis) <= 0.25 * grid.half_width
    for table in tables:
        label = f"t={table.t:g}"
        wanted = {name for c in checks for name in _INVARIANT_CHECKS.get(c, ())}
        if wanted:
            invariants = check_table_invariants(table)
            report.extend(Report(invariants.name, [c for c in invariants.checks if c.name in wanted]), prefix=label)
        if KernelCheck.SCALING in checks:
            report.extend(check_scaling(table), prefix=label)
        if KernelCheck.CK in checks:
            # T_t T_t = T_2t on the same lattice
            report.extend(check_chapman_kolmogorov(kind, table.t, table.t, grid=grid, s=s), prefix=f"{label}.ck")
        if KernelCheck.BOUNDS in checks:
            bounds = check_two_sided_bounds(table)
            report.extend(bounds, prefix=label)
            report.data.setdefault("bounds", {})[label] = bounds.data["spec"]
        if KernelCheck.ORACLE in checks:
            report.extend(check_oracle(table, points=oracle_points, seed=lab.experiment.seed), prefix=label)
        section = _axis_slice(table.values, grid.dim)
        columns[label] = section
        plot.series.append(Series(label, grid.axis[bulk], np.maximum(section[bulk], 1e-300)))

    results = RunResults(
        "kernel",
        tables={"kernel.csv": Table.from_columns(**columns)},
        reports={"report.json": report},
        plots={"kernel.svg": plot},
    )
    _finish(ctx, results, {"compute": time.perf_counter() - started})


@app.command()
@_exit_on_errors
def verify(
    ctx: typer.Context,
    suite: Annotated[str, typer.Option("--suite", "-s", help=f"One of: {', '.join(sorted(load_suites()))}")],
):
    """Runs a named verification suite."""
    session = _session(ctx)
    started = time.perf_counter()
    report = run_suite(suite, seed=session.config.experiment.seed, workers=session.threads)
    table = Table(["check", "stat", "tol", "pass"])
    for c in report.checks:
        table.add(c.name, c.stat, c.tol, c.passed)
    results = RunResults(
        f"verify-{suite}",
        tables={"checks.csv": table},
        reports={"report.json": report},
    )
    _finish(ctx, results, {"compute": time.perf_counter() - started})


@app.command()
@_exit_on_errors
def evolve(ctx: typer.Context):
    """Solves the configured problem from the configured initial datum."""
    lab = _session(ctx).config
    started = time.perf_counter()
    grid = lab.grid.build()
    reaction = lab.reaction.build()
    spec = lab.operator.spec
    traj = solve(lab.experiment.initial_datum(grid), reaction, spec, lab.solver)
    computed = time.perf_counter() - started

    diag = traj.diagnostics
    report = Report("evolve", reaction=reaction.label, operator=spec.label, steps=len(diag["time"]) - 1)
    report.add(Check.at_most("range_below_zero", max(0.0, -float(np.min(diag["min"]))), lab.solver.range_tol))
    report.add(Check.at_most("range_above_one", max(0.0, float(np.max(diag["max"])) - 1.0), lab.solver.range_tol))
    report.add(Check.record("final_mass", diag["mass"][-1]))
    if len(traj) > 1:
        report.extend(check_time_monotonicity(traj), prefix="time_monotonicity")
    if lab.solver.snapshot_every == 1 and len(traj) > 2:
        report.extend(pde_residual(traj, reaction, spec), prefix="pde")

    tables = {"evolution.csv": Table.from_columns(**{k: diag[k] for k in ("time", "mass", "min", "max", "iters")})}
    plot = Plot(f"{reaction.label}, {spec.label} s={spec.s:g}", "x", "u")
    picks = set(np.linspace(0, len(traj) - 1, min(len(traj), 5)).round().astype(int))
    for k, (t, u) in enumerate(zip(traj.times, traj.snapshots)):
        section = _axis_slice(u.values, grid.dim)
        tables[f"snapshot_{t:g}.csv"] = Table.from_columns(x=grid.axis, u=section)
        if k in picks:
            plot.series.append(Series(f"t={t:g}", grid.axis, section))

    results = RunResults("evolve", tables=tables, reports={"report.json": report}, plots={"evolve.svg": plot})
    _finish(ctx, results, {"compute": computed})


def spread_plot(traces: Dict, verdicts: Dict, reaction, s: float, dim: int) -> Plot:
    """
    Level-set radii per regime and threshold, with the fitted law over its window
    (dashed) and the predicted rate drawn through the same starting point (dotted).
    """
    plot = Plot("level-set radius", "t", "R(t)", logy=Regime.CLASSICAL not in traces)
    for regime, per_threshold in traces.items():
        for trace in per_threshold:
            plot.series.append(Series(f"{regime.value} lambda={trace.threshold:g}", trace.times, trace.radii))
        model, rate = expected_law(regime, reaction, s, dim)
        fit = verdicts[regime.value].fits[model]
        t = per_threshold[0].times[per_threshold[0].in_window(fit.window)]
        label = "c*" if model is RateModel.LINEAR else "sigma*"
        plot.series.append(Series(f"{regime.value} {model.value} fit {fit.estimate:.4g}", t, fitted_radius(fit, t), "--"))
        plot.series.append(Series(f"{regime.value} {label}={rate:.4g}", t, fitted_radius(reference_fit(fit, rate), t), ":"))
    return plot


@app.command()
@_exit_on_errors
def spread(
    ctx: typer.Context,
    compare: Annotated[bool, typer.Option(help="Run the classical, fractional and mixed problems side by side")] = False,
):
    """Level-set fronts, invasion-rate fits and the moving-frame speed."""
    lab = _session(ctx).config
    started = time.perf_counter()
    grid = lab.grid.build()
    reaction = lab.reaction.build()
    s = lab.operator.s
    thresholds = lab.experiment.thresholds
    window = lab.experiment.window
    u0 = lab.experiment.initial_datum(grid)

    if compare:
        report = regime_comparison(u0, reaction, s, lab.solver, thresholds=thresholds, window=window)
        traces = {Regime(k): v for k, v in report.data["traces"].items()}
    else:
        regime = lab.operator.regime
        traj = solve(u0, reaction, lab.operator.spec, lab.solver)
        traces = {regime: [extract_front(traj, lam, regime) for lam in thresholds]}
        report = check_spreading(traces[regime][0], reaction, s, grid.dim, window)
    reports = {"fit.json": report}
    for regime, per_threshold in traces.items():
        name = "moving_frame.json" if len(traces) == 1 else f"moving_frame_{regime.value}.json"
        reports[name] = moving_frame_speed(per_threshold[0], window)

    verdicts = report.data["verdicts"] if compare else {r.value: report.data["verdict"] for r in traces}
    tables = {}
    for regime, per_threshold in traces.items():
        for trace in per_threshold:
            prefix = "trace" if len(traces) == 1 else f"trace_{regime.value}"
            tables[f"{prefix}_{trace.threshold:g}.csv"] = Table.from_columns(time=trace.times, radius=trace.radii)
    plot = spread_plot(traces, verdicts, reaction, s, grid.dim)

    results = RunResults("spread", tables=tables, reports=reports, plots={"spread.svg": plot})
    _finish(ctx, results, {"compute": time.perf_counter() - started})


@app.command()
@_exit_on_errors
def wave(ctx: typer.Context):
    """Traveling-wave residual sweep over speeds and logistic front widths."""
    session = _session(ctx)
    lab = session.config
    started = time.perf_counter()
    grid = lab.grid.build()
    if grid.dim != 1:
        raise ConfigError("grid.dim must be 1 for the traveling-wave sweep")
    spec = lab.operator.spec
    report = wave_sweep(
        grid,
        lab.reaction.build(),
        spec,
        lab.experiment.speeds(),
        widths=lab.experiment.wave_widths,
        workers=session.threads,
    )
    rows = report.data["table"]
    table = Table(["width", "c", "residual"], [(r["width"], r["c"], r["residual"]) for r in rows])
    plot = Plot(f"wave residual, {spec.label} s={spec.s:g}", "c", "residual", logy=True)
    for w in lab.experiment.wave_widths:
        picked = [r for r in rows if r["width"] == w]
        plot.series.append(Series(f"width={w:g}", [r["c"] for r in picked], [r["residual"] for r in picked]))
    results = RunResults("wave", tables={"wave.csv": table}, reports={"report.json": report}, plots={"wave.svg": plot})
    _finish(ctx, results, {"compute": time.perf_counter() - started})


def main():
    app(prog_name="mixkpp")


if __name__ == "__main__":
    main()
