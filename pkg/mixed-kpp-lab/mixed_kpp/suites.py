"""Named verification suites declared in data/suites.yaml."""
import logging
from concurrent.futures import ThreadPoolExecutor
from typing import Callable, Dict, List

import numpy as np
import yaml

from .config import DATA_DIR
from .dynamics import (
    ReactionKPP,
    Scheme,
    SolverConfig,
    check_comparison,
    seeded_barrier,
    logistic_solution,
    run_barrier_iteration,
    solve,
    step_picard,
)
from .errors import ConfigError
from .grid import Field, SymbolSpec, make_grid
from .kernels import (
    KernelKind,
    check_chapman_kolmogorov,
    check_factorization,
    check_oracle,
    check_scaling,
    check_sup_decay,
    check_table_invariants,
    check_tail_law,
    check_two_sided_bounds,
    fractional_kernel,
    kernel_table,
    mixed_kernel,
    poisson_kernel,
    resolving_half_width,
)
from .reports import Check, Report
from .semigroup import (
    PowerLawBarrier,
    WeightedNorm,
    check_convolution_route,
    check_discrete_max_principle,
    check_order_preservation,
    check_semigroup_growth,
    check_strong_continuity,
    check_uniform_local_continuity,
    push_polynomial_weight,
    push_powerlaw_barrier,
)
from .utils import band_limited_field, smoothed_indicator, uniform_noise

logger = logging.getLogger(__name__)

SUITES_FILE = DATA_DIR / "suites.yaml"

CheckFn = Callable[[dict, int], Report]
CHECKS: Dict[str, CheckFn] = {}


def register(name: str):
    def wrap(fn: CheckFn) -> CheckFn:
        CHECKS[name] = fn
        return fn

    return wrap


def load_suites() -> Dict[str, List[dict]]:
    with open(SUITES_FILE, "r") as file:
        return yaml.safe_load(file)["suites"]


def _grid(p: dict, dim: int = 1):
    return make_grid(dim, p["n"], p["half_width"])


def _stable(report: Report, name: str, values: List[float], factor: float = 2.0) -> None:
    values = [v for v in values if np.isfinite(v)]
    spread = max(values) / min(values) if values and min(values) > 0 else np.inf
    report.add(Check.at_most(name, spread, factor, values=values))


@register("poisson_oracle")
def _poisson_oracle(p: dict, seed: int) -> Report:
    grid = _grid(p)
    bulk = grid.bulk_mask(0.25)
    report = Report("poisson_oracle", s=0.5, n=p["n"], half_width=p["half_width"])
    for t in p["times"]:
        table = fractional_kernel(grid, t, 0.5)
        exact = poisson_kernel(t, grid.axis[bulk], period=2.0 * grid.half_width)
        error = np.max(np.abs(table.values[bulk] - exact) / exact)
        report.add(Check.at_most(f"t={t:g}.relative_error", error, p["tol"]))
    return report


@register("table_invariants")
def _table_invariants(p: dict, seed: int) -> Report:
    report = Report("table_invariants")
    n = p["n"]
    for kind in KernelKind:
        for s in p["orders"]:
            for t in p["times"]:
                grid = make_grid(1, n, resolving_half_width(n, t, s, kind, cap=p["cap"]))
                sub = check_table_invariants(kernel_table(kind, grid, t, s))
                report.extend(sub, prefix=f"{kind.value}.s={s:g}.t={t:g}")
    return report


@register("chapman_kolmogorov")
def _chapman_kolmogorov(p: dict, seed: int) -> Report:
    report = Report("chapman_kolmogorov")
    for kind in KernelKind:
        for t, tau in p["pairs"]:
            report.extend(check_chapman_kolmogorov(kind, t, tau, s=p["s"]), prefix=f"{kind.value}.{t:g}+{tau:g}")
    return report


@register("scaling")
def _scaling(p: dict, seed: int) -> Report:
    grid = _grid(p)
    report = Report("scaling")
    for s in p["orders"]:
        for t in p["times"]:
            report.extend(check_scaling(fractional_kernel(grid, t, s)), prefix=f"s={s:g}.t={t:g}")
    return report


@register("two_sided_bounds")
def _two_sided_bounds(p: dict, seed: int) -> Report:
    report = Report("two_sided_bounds", fitted={})
    for case in p["cases"]:
        kind = KernelKind(case["kind"])
        table = kernel_table(kind, _grid(case), case["t"], p["s"])
        sub = check_two_sided_bounds(table)
        label = f"{kind.value}.t={case['t']:g}"
        report.extend(sub, prefix=label)
        report.data["fitted"][label] = sub.data["spec"]
    return report


@register("factorization")
def _factorization(p: dict, seed: int) -> Report:
    return check_factorization(_grid(p), p["t"], p["s"])


@register("tail_law")
def _tail_law(p: dict, seed: int) -> Report:
    return check_tail_law(mixed_kernel(_grid(p), p["t"], p["s"]), window=tuple(p["window"]))


@register("quadrature_oracle")
def _quadrature_oracle(p: dict, seed: int) -> Report:
    grid = _grid(p)
    report = Report("quadrature_oracle")
    for kind in (KernelKind.MIXED, KernelKind.FRACTIONAL):
        table = kernel_table(kind, grid, p["t"], p["s"])
        report.extend(check_oracle(table, points=p["samples"], seed=seed), prefix=kind.value)
    return report


@register("sup_decay")
def _sup_decay(p: dict, seed: int) -> Report:
    return check_sup_decay(_grid(p), p["s"])


@register("semigroup_growth")
def _semigroup_growth(p: dict, seed: int) -> Report:
    w = WeightedNorm(p["gamma"], p["s"])
    report = Report("semigroup_growth", gamma=w.gamma, s=w.s)
    fitted = []
    for n in p["refinements"]:
        sub = check_semigroup_growth(w, p["times"], grid=make_grid(1, n, p["half_width"]), seed=seed)
        report.extend(sub, prefix=f"n={n}")
        fitted.append(sub.get("fitted_C_gamma").stat)
    _stable(report, "refinement_stability", fitted)
    return report


@register("strong_continuity")
def _strong_continuity(p: dict, seed: int) -> Report:
    grid = _grid(p)
    u = smoothed_indicator(grid, p["radius"], width=1.0)
    return check_strong_continuity(u, WeightedNorm(p["gamma"], p["s"]), SymbolSpec.mixed(p["s"]))


@register("uniform_local_continuity")
def _uniform_local_continuity(p: dict, seed: int) -> Report:
    grid = _grid(p)
    u = smoothed_indicator(grid, p["radius"], width=1.0)
    return check_uniform_local_continuity(u, WeightedNorm(p["gamma"], p["s"]))


@register("order_preservation")
def _order_preservation(p: dict, seed: int) -> Report:
    grid = _grid(p)
    u0 = smoothed_indicator(grid, 2.0, amplitude=0.5, width=1.0)
    v0 = smoothed_indicator(grid, 4.0, width=1.0)
    report = Report("order_preservation")
    for t in p["times"]:
        report.extend(check_order_preservation(u0, v0, SymbolSpec.mixed(p["s"]), t), prefix=f"t={t:g}")
    return report


@register("convolution_route")
def _convolution_route(p: dict, seed: int) -> Report:
    grid = _grid(p)
    u = smoothed_indicator(grid, 3.0, width=0.5)
    return check_convolution_route(u, mixed_kernel(grid, p["t"], p["s"]))


@register("powerlaw_barrier")
def _powerlaw_barrier(p: dict, seed: int) -> Report:
    b = PowerLawBarrier(p["a0"], p["r0"], p["s"])
    report = Report("powerlaw_barrier")
    lows, highs = [], []
    for t in p["times"]:
        _, sub = push_powerlaw_barrier(b, t)
        report.extend(sub, prefix=f"t={t:g}")
        lows.append(sub.get("fitted_c").stat)
        highs.append(sub.get("fitted_C").stat)
    _stable(report, "fitted_c_stability", lows)
    _stable(report, "fitted_C_stability", highs)
    return report


@register("polynomial_weight")
def _polynomial_weight(p: dict, seed: int) -> Report:
    w = WeightedNorm(p["gamma"], p["s"])
    report = Report("polynomial_weight")
    subs = [push_polynomial_weight(w, t) for t in p["times"]]
    for t, sub in zip(p["times"], subs):
        report.extend(sub, prefix=f"t={t:g}")
    for name in ("fitted_C_gamma", "fitted_c_gamma"):
        _stable(report, f"{name}_stability", [sub.get(name).stat for sub in subs])
    return report


@register("seeded_barrier")
def _seeded_barrier(p: dict, seed: int) -> Report:
    return seeded_barrier(_grid(p), SymbolSpec.mixed(p["s"]), eta=p["eta"], t0=p["t0"], sigma=p["sigma"])


@register("max_principle")
def _max_principle(p: dict, seed: int) -> Report:
    grid = make_grid(1, p["n"], np.pi)
    rng = np.random.default_rng(seed)
    report = Report("max_principle", fields=p["fields"], modes=p["modes"])
    failed = 0
    for k in range(p["fields"]):
        u = band_limited_field(grid, p["modes"], rng)
        sub = check_discrete_max_principle(u, SymbolSpec.mixed(float(rng.uniform(0.05, 0.95))))
        if not sub.passed:
            failed += 1
            report.extend(sub, prefix=f"field={k}")
    report.add(Check.at_most("failed_fields", failed, 0))
    return report


@register("max_principle_2d")
def _max_principle_2d(p: dict, seed: int) -> Report:
    grid = make_grid(2, p["n"], np.pi)
    x, y = grid.coordinates
    return check_discrete_max_principle(Field(grid, np.cos(x) + np.cos(y)), SymbolSpec.mixed(p["s"]))


@register("logistic_oracle")
def _logistic_oracle(p: dict, seed: int) -> Report:
    grid = make_grid(1, 8, 1.0)
    u0 = Field.constant(grid, p["u_star"])
    reaction = ReactionKPP.logistic(p["rate"])
    spec = SymbolSpec.mixed(p["s"])
    t_end = p["t_end"]
    exact = logistic_solution(p["u_star"], p["rate"], t_end)

    euler = solve(u0, reaction, spec, SolverConfig(dt=p["dt"], t_end=t_end, snapshot_stride=t_end))
    picard = solve(
        u0,
        reaction,
        spec,
        SolverConfig(dt=p["picard_dt"], t_end=t_end, scheme=Scheme.PICARD_DUHAMEL, snapshot_stride=t_end),
    )
    report = Report("logistic_oracle", exact=exact)
    for name, traj, tol in (("exponential_euler", euler, p["tol"]), ("picard_duhamel", picard, p["picard_tol"])):
        error = np.max(np.abs(traj.final.values - exact)) / exact
        report.add(Check.at_most(f"{name}_relative_error", error, tol))
    return report


@register("picard_contraction")
def _picard_contraction(p: dict, seed: int) -> Report:
    grid = _grid(p)
    reaction = ReactionKPP.logistic(1.0)
    dt = 1.0 / (4.0 * reaction.growth_constant)
    rng = np.random.default_rng(seed)
    counts = []
    for _ in range(p["fields"]):
        _, iterations = step_picard(uniform_noise(grid, rng), reaction, SymbolSpec.mixed(p["s"]), dt, tol=p["tol"])
        counts.append(iterations)
    report = Report("picard_contraction", dt=dt, iterations=counts)
    report.add(Check.at_most("max_iterations", max(counts), p["max_iterations"]))
    return report


@register("comparison")
def _comparison(p: dict, seed: int) -> Report:
    grid = _grid(p)
    u0 = smoothed_indicator(grid, 1.0, amplitude=p["lower"], width=1.0)
    v0 = smoothed_indicator(grid, 1.0, amplitude=p["upper"], width=1.0)
    config = SolverConfig(dt=p["dt"], t_end=p["t_end"], snapshot_stride=0.5)
    return check_comparison(u0, v0, ReactionKPP.logistic(1.0), SymbolSpec.mixed(p["s"]), config)


@register("barrier_iteration")
def _barrier_iteration(p: dict, seed: int) -> Report:
    b = PowerLawBarrier.from_epsilon(p["epsilon"], p["r0"], p["s"])
    return run_barrier_iteration(
        b, ReactionKPP.logistic(1.0), SymbolSpec.mixed(p["s"]), sigma=p["sigma"], k_max=p["k_max"], t0=p["t0"]
    )


def run_suite(name: str, seed: int = 0, workers: int = 1) -> Report:
    """Runs every check of the suite; the combined report keeps each sub-report under data['reports']."""
    suites = load_suites()
    if name not in suites:
        raise ConfigError(f"unknown suite {name!r}, expected one of {', '.join(sorted(suites))}")
    entries = suites[name]
    for entry in entries:
        if entry["check"] not in CHECKS:
            raise ConfigError(f"suite {name!r} names unknown check {entry['check']!r}")

    def run(entry) -> Report:
        logger.info("%s: %s", name, entry["check"])
        return CHECKS[entry["check"]](entry.get("params", {}), seed)

    with ThreadPoolExecutor(max_workers=max(1, workers)) as pool:
        reports = list(pool.map(run, entries))

    combined = Report(name, seed=seed, reports={e["check"]: r for e, r in zip(entries, reports)})
    for entry, sub in zip(entries, reports):
        combined.extend(sub, prefix=entry["check"])
    return combined
