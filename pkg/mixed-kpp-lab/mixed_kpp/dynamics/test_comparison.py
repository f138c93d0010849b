import numpy as np
import pytest

from mixed_kpp.dynamics import (
    ReactionKPP,
    Scheme,
    SolverConfig,
    check_comparison,
    check_lower_invasion,
    check_outer_decay,
    check_time_monotonicity,
    comparison_energy,
    seeded_barrier,
    critical_rate,
    pde_residual,
    run_barrier_iteration,
    solve,
)
from mixed_kpp.errors import DomainExhaustedError, HypothesisError
from mixed_kpp.grid import Field, SymbolSpec, make_grid
from mixed_kpp.semigroup import PowerLawBarrier
from mixed_kpp.utils import smoothed_indicator

MIXED = SymbolSpec.mixed(0.5)
LOGISTIC = ReactionKPP.logistic(1.0)


@pytest.fixture(scope="module")
def wide_grid():
    return make_grid(1, 2**16, 8192.0)


@pytest.fixture(scope="module")
def invasion_run():
    grid = make_grid(1, 2**15, 4096.0)
    u0 = smoothed_indicator(grid, 2.0, amplitude=0.5, width=1.0)
    return solve(u0, LOGISTIC, MIXED, SolverConfig(dt=0.05, t_end=8.0, snapshot_stride=1.0))


def test_critical_rate():
    assert critical_rate(LOGISTIC, MIXED, 1) == pytest.approx(0.5)
    assert critical_rate(ReactionKPP.logistic(2.0), SymbolSpec.mixed(0.25), 2) == pytest.approx(0.8)


def test_comparison_energy():
    grid = make_grid(1, 64, 8.0)
    u, v = Field.constant(grid, 0.5), Field.constant(grid, 0.25)
    assert comparison_energy(u, v) == pytest.approx(0.5 * 0.25**2 * 16.0)
    assert comparison_energy(v, u) == 0.0


def test_ordered_pair_stays_ordered(wide_grid):
    u0 = smoothed_indicator(wide_grid, 1.0, amplitude=0.3, width=1.0)
    v0 = smoothed_indicator(wide_grid, 1.0, amplitude=0.6, width=1.0)
    report = check_comparison(u0, v0, LOGISTIC, MIXED, SolverConfig(dt=0.05, t_end=10.0, snapshot_stride=0.5))
    assert report.passed, report.to_dict()
    assert report.data["times"][-1] == pytest.approx(10.0)


def test_supersolution_one_dominates():
    grid = make_grid(1, 4096, 512.0)
    u0 = smoothed_indicator(grid, 2.0, amplitude=0.8, width=1.0)
    config = SolverConfig(dt=0.1, t_end=3.0, scheme=Scheme.PICARD_DUHAMEL)
    assert check_comparison(u0, Field.constant(grid, 1.0), LOGISTIC, MIXED, config).passed


def test_identical_data():
    grid = make_grid(1, 4096, 512.0)
    u0 = smoothed_indicator(grid, 2.0, amplitude=0.4, width=1.0)
    report = check_comparison(u0, u0, LOGISTIC, MIXED, SolverConfig(dt=0.05, t_end=2.0))
    assert report.get("max_violation").stat <= 1e-12


def test_unordered_data_are_rejected():
    grid = make_grid(1, 256, 32.0)
    u0 = smoothed_indicator(grid, 2.0, amplitude=0.6)
    v0 = smoothed_indicator(grid, 2.0, amplitude=0.3)
    with pytest.raises(HypothesisError):
        check_comparison(u0, v0, LOGISTIC, MIXED, SolverConfig(dt=0.1, t_end=1.0))


def test_barrier_iteration_below_critical_rate():
    b = PowerLawBarrier.from_epsilon(0.05, 1.0, 0.5)
    report = run_barrier_iteration(b, LOGISTIC, MIXED, sigma=0.35, k_max=5, t0=2.0)
    assert report.passed, report.to_dict()
    assert report.get("largest_k").stat == 5
    assert report.data["minima"][0] == pytest.approx(0.05)


def test_barrier_iteration_above_critical_rate():
    b = PowerLawBarrier.from_epsilon(0.05, 1.0, 0.5)
    report = run_barrier_iteration(b, LOGISTIC, MIXED, sigma=0.7, k_max=5, t0=2.0)
    assert not report.passed
    assert 0 <= report.get("largest_k").stat < 5


def test_barrier_iteration_needs_room():
    b = PowerLawBarrier.from_epsilon(0.05, 1.0, 0.5)
    with pytest.raises(DomainExhaustedError):
        run_barrier_iteration(b, LOGISTIC, MIXED, sigma=0.35, k_max=10, grid=make_grid(1, 1024, 64.0))


def test_seeded_barrier():
    grid = make_grid(1, 4096, 256.0)
    report = seeded_barrier(grid, MIXED, eta=0.5, t0=2.0, sigma=0.35)
    assert report.passed, report.to_dict()
    assert report.data["r0"] == pytest.approx(3.0)
    assert report.get("b").stat == pytest.approx(3.0 * np.exp(-1.4))


def test_lower_invasion(invasion_run):
    report = check_lower_invasion(invasion_run, sigma=0.35, eps=0.05, t_under=4.0)
    assert report.passed, report.to_dict()


def test_outer_decay_beyond_critical_rate(invasion_run):
    report = check_outer_decay(invasion_run, sigma=1.0, late=0.25)
    assert report.passed, report.to_dict()


def test_pde_residual():
    grid = make_grid(1, 1024, 64.0)
    u0 = smoothed_indicator(grid, 4.0, amplitude=0.5, width=1.0)
    traj = solve(u0, LOGISTIC, MIXED, SolverConfig(dt=0.01, t_end=0.5, scheme=Scheme.PICARD_DUHAMEL))
    assert pde_residual(traj, LOGISTIC, MIXED).passed
    assert not pde_residual(traj, ReactionKPP.logistic(3.0), MIXED).passed


def test_time_monotonicity():
    grid = make_grid(1, 1024, 64.0)
    rising = solve(Field.constant(grid, 0.2), LOGISTIC, MIXED, SolverConfig(dt=0.1, t_end=2.0))
    report = check_time_monotonicity(rising)
    assert report.passed and report.get("largest_drop").stat <= 0.0

    plateau = smoothed_indicator(grid, 4.0, amplitude=1.0, width=1.0)
    falling = solve(plateau, LOGISTIC, MIXED, SolverConfig(dt=0.1, t_end=1.0))
    report = check_time_monotonicity(falling)
    assert not report.get("premise_gap").details["holds"]
    assert [c.name for c in report.checks] == ["premise_gap"]


if __name__ == "__main__":
    pytest.main([__file__])
