"""
Comparison-principle harness and the invasion estimates built on it: ordered
pairs stay ordered, barrier sub-solutions keep u >= epsilon on exponentially
growing balls, and u decays outside balls growing faster than the critical rate.
"""
import logging
from concurrent.futures import ThreadPoolExecutor
from typing import Sequence

import numpy as np

from ..errors import DomainExhaustedError, FitError, HypothesisError
from ..grid import Field, SymbolSpec, UniformGrid, apply_symbol, make_grid
from ..reports import Check, Report
from ..semigroup import BULK, PowerLawBarrier, barrier_field, propagate
from ..utils import indicator
from .reaction import ReactionKPP
from .solver import Scheme, SolverConfig, Trajectory, solve

logger = logging.getLogger(__name__)

ORDER_TOL = 1e-10
RANGE_TOL = 1e-10


def critical_rate(reaction: ReactionKPP, spec: SymbolSpec, dim: int) -> float:
    """sigma* = f'(0) / (N + 2s)."""
    return reaction.fprime0 / (dim + 2.0 * spec.s)


def comparison_energy(u: Field, v: Field) -> float:
    excess = np.maximum(u.values - v.values, 0.0)
    return float(0.5 * np.sum(excess**2) * u.grid.cell_volume)


def _solve_pair(u0: Field, v0: Field, reaction, spec, config):
    with ThreadPoolExecutor(max_workers=2) as pool:
        first = pool.submit(solve, u0, reaction, spec, config)
        second = pool.submit(solve, v0, reaction, spec, config)
        return first.result(), second.result()


def check_comparison(u0: Field, v0: Field, reaction: ReactionKPP, spec: SymbolSpec, config: SolverConfig) -> Report:
    """Co-evolves u0 <= v0 and reports max_t max_x (u - v)^+ with the energy path."""
    premise = float(np.max(u0.values - v0.values))
    if premise > 0:
        raise HypothesisError(f"initial data are not ordered: max(u0 - v0) = {premise:.3e}")
    tu, tv = _solve_pair(u0, v0, reaction, spec, config)

    violations = [float(np.max(np.maximum(u.values - v.values, 0.0))) for u, v in zip(tu.snapshots, tv.snapshots)]
    energies = np.array([comparison_energy(u, v) for u, v in zip(tu.snapshots, tv.snapshots)])
    times = np.asarray(tu.times)
    envelope = energies[0] * np.exp(2.0 * reaction.lipschitz * times)
    lowest = min(tu.diagnostics["min"].min(), tv.diagnostics["min"].min())
    highest = max(tu.diagnostics["max"].max(), tv.diagnostics["max"].max())

    report = Report("comparison", times=times, violations=violations, energy=energies, envelope=envelope)
    report.add(Check.at_most("max_violation", max(violations), ORDER_TOL, at=float(times[int(np.argmax(violations))])))
    slack = 0.5 * ORDER_TOL**2 * (2.0 * u0.grid.half_width) ** u0.grid.dim
    report.add(Check.at_most("gronwall_excess", float(np.max(energies - envelope)), slack))
    report.add(Check.at_most("range_below_zero", -lowest, RANGE_TOL))
    report.add(Check.at_most("range_above_one", highest - 1.0, RANGE_TOL))
    return report


def _ball_minimum(u: Field, radius: float) -> float:
    return float(np.min(u.values[u.grid.radius <= radius * (1 + 1e-12)]))


def run_barrier_iteration(
    b: PowerLawBarrier,
    reaction: ReactionKPP,
    spec: SymbolSpec,
    sigma: float,
    k_max: int,
    t0: float = 2.0,
    grid: UniformGrid = None,
    config: SolverConfig = None,
) -> Report:
    """
    Starting from the barrier, checks u(k t0, x) >= epsilon on |x| <= r0 e^(sigma k t0)
    for k = 0..k_max and reports the largest k for which every earlier k held too.
    """
    grid = grid or make_grid(1, 2**14, 4096.0)
    N = grid.dim
    sigma_star = critical_rate(reaction, spec, N)
    if sigma >= sigma_star:
        logger.warning("sigma=%g is not below the critical rate %g; the barrier is expected to fail", sigma, sigma_star)
    radii = [b.r0 * np.exp(sigma * k * t0) for k in range(k_max + 1)]
    reach = BULK * grid.half_width
    if radii[-1] > reach:
        fits = sum(r <= reach for r in radii) - 1
        raise DomainExhaustedError(
            f"ball radius {radii[-1]:.4g} at k={k_max} leaves the domain bulk {reach:.4g}; "
            f"the grid only supports k <= {fits}"
        )
    config = config or SolverConfig(dt=0.05, t_end=k_max * t0, snapshot_stride=t0)
    eps = b.epsilon(N)
    u0 = barrier_field(b, grid)
    traj = solve(u0, reaction, spec, config) if k_max > 0 else Trajectory([0.0], [u0])

    minima, largest = [], -1
    for k, radius in enumerate(radii):
        t = k * t0
        u = traj.snapshot_at(t)
        minima.append(_ball_minimum(u, radius))
        if largest == k - 1 and minima[-1] >= eps * (1 - 1e-12):
            largest = k
    report = Report(
        "barrier_iteration", sigma=sigma, sigma_star=sigma_star, t0=t0, epsilon=eps, radii=radii, minima=minima
    )
    report.add(Check.at_least("largest_k", largest, k_max))
    return report


def seeded_barrier(
    grid: UniformGrid, spec: SymbolSpec, eta: float, t0: float, sigma: float, samples: int = 5
) -> Report:
    """
    Fits the power-law barrier under T_t(eta chi_B1): r0 = t0^(1/2s) + 1 and
    a0 = min of v |x|^(N+2s) over |x| >= r0, t in [t0/2, 3t0/2].
    """
    N = grid.dim
    exponent = N + 2.0 * spec.s
    r0 = t0 ** (1.0 / (2.0 * spec.s)) + 1.0
    r = grid.radius
    outside = (r >= r0) & grid.bulk_mask(BULK)
    if not np.any(outside):
        raise DomainExhaustedError(f"no lattice point with r0={r0:.4g} <= |x| <= {BULK} L")
    seed = indicator(grid, 1.0, eta)
    times = np.linspace(0.5 * t0, 1.5 * t0, samples)
    a0 = min(float(np.min(propagate(seed, spec, t).values[outside] * r[outside] ** exponent)) for t in times)

    report = Report("seeded_barrier", eta=eta, t0=t0, sigma=sigma, r0=r0, times=times)
    report.add(Check.at_least("fitted_a0", a0, 1e-12))
    report.add(Check.record("b", r0 * np.exp(-2.0 * sigma * t0)))
    return report


def check_lower_invasion(traj: Trajectory, sigma: float, eps: float, t_under: float) -> Report:
    """u >= eps on |x| <= e^(sigma t) for every snapshot with t >= t_under."""
    reach = BULK * traj.grid.half_width
    checked, minima = [], []
    for t, u in zip(traj.times, traj.snapshots):
        if t < t_under:
            continue
        radius = np.exp(sigma * t)
        if radius > reach:
            raise DomainExhaustedError(f"invasion ball e^(sigma t)={radius:.4g} at t={t:.4g} leaves the domain bulk")
        checked.append(t)
        minima.append(_ball_minimum(u, radius))
    if not checked:
        raise FitError(f"no snapshot with t >= {t_under}")
    report = Report("lower_invasion", sigma=sigma, epsilon=eps, times=checked, minima=minima)
    report.add(Check.at_least("ball_minimum", min(minima), eps))
    return report


def check_outer_decay(traj: Trajectory, sigma: float, late: float = 0.5) -> Report:
    """sup of u over e^(sigma t) <= |x| <= 0.9 L along the last part of the run."""
    grid = traj.grid
    r = grid.radius
    bulk = grid.bulk_mask(BULK)
    start = late * traj.times[-1]
    times, sups = [], []
    for t, u in zip(traj.times, traj.snapshots):
        if t < start:
            continue
        region = bulk & (r >= np.exp(sigma * t))
        if not np.any(region):
            raise DomainExhaustedError(f"no lattice point beyond e^(sigma t) at t={t:.4g}")
        times.append(t)
        sups.append(float(np.max(u.values[region])))
    if len(sups) < 2:
        raise FitError("outer decay needs at least two late snapshots")
    report = Report("outer_decay", sigma=sigma, times=times, sups=sups)
    report.add(Check.at_most("outer_sup_ratio", sups[-1] / sups[0], 1.0))
    report.add(Check.record("monotone", float(np.all(np.diff(sups) <= 0))))
    return report


def pde_residual(traj: Trajectory, reaction, spec: SymbolSpec, tol: float = 0.05) -> Report:
    """
    Relative residual of u_t + L u - f(u) with u_t from centred differences of
    consecutive snapshots.
    """
    if len(traj) < 3:
        raise FitError("the residual needs at least three snapshots")
    t, snaps = traj.times, traj.snapshots
    worst = 0.0
    residuals = []
    for k in range(1, len(snaps) - 1):
        u = snaps[k]
        u_t = (snaps[k + 1].values - snaps[k - 1].values) / (t[k + 1] - t[k - 1])
        Lu = apply_symbol(u, spec).values
        f = reaction(u.values)
        scale = max(float(np.max(np.abs(Lu)) + np.max(np.abs(f))), 1e-300)
        residuals.append(float(np.max(np.abs(u_t + Lu - f))) / scale)
        worst = max(worst, residuals[-1])
    report = Report("pde_residual", times=list(t[1:-1]), residuals=residuals)
    report.add(Check.at_most("relative_residual", worst, tol))
    return report


def check_time_monotonicity(traj: Trajectory, tol: float = 1e-10) -> Report:
    """If u0 <= u(dt) pointwise the whole run must be nondecreasing in t."""
    snaps = traj.snapshots
    if len(snaps) < 2:
        raise FitError("monotonicity needs at least two snapshots")
    premise = float(np.max(snaps[0].values - snaps[1].values))
    drops = [float(np.max(a.values - b.values)) for a, b in zip(snaps[:-1], snaps[1:])]
    report = Report("time_monotonicity", drops=drops)
    report.add(Check.record("premise_gap", premise, holds=premise <= tol))
    if premise <= tol:
        report.add(Check.at_most("largest_drop", max(drops), tol))
    return report


def check_scheme_consistency(
    u0: Field, reaction: ReactionKPP, spec: SymbolSpec, dts: Sequence[float], t_end: float
) -> Report:
    """
    Sup gap between Picard and exponential-Euler endpoints for each dt; the
    log-log slope of gap against dt is the observed order.
    """
    gaps = []
    for dt in dts:
        ends = []
        for scheme in Scheme:
            config = SolverConfig(dt=dt, t_end=t_end, scheme=scheme, snapshot_stride=t_end)
            ends.append(solve(u0, reaction, spec, config).final.values)
        gaps.append(float(np.max(np.abs(ends[0] - ends[1]))))
    report = Report("scheme_gap", dts=list(dts), gaps=gaps)
    if len(dts) > 1:
        slope = np.polyfit(np.log(dts), np.log(gaps), 1)[0]
        report.add(Check.at_least("observed_order", slope, 0.9))
    return report
