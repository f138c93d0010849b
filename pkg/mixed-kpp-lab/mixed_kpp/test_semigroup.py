import numpy as np
import pytest

from mixed_kpp.errors import ConfigError, FitError, GridError
from mixed_kpp.grid import Field, SymbolSpec, make_grid
from mixed_kpp.kernels import mixed_kernel
from mixed_kpp.semigroup import (
    PowerLawBarrier,
    WeightedNorm,
    barrier_field,
    check_convolution_route,
    check_discrete_max_principle,
    check_order_preservation,
    check_semigroup_growth,
    check_strong_continuity,
    check_uniform_local_continuity,
    propagate,
    push_polynomial_weight,
    push_powerlaw_barrier,
    xgamma_norm,
)
from mixed_kpp.utils import band_limited_field, indicator, smoothed_indicator

MIXED = SymbolSpec.mixed(0.5)


def test_propagate_identities():
    grid = make_grid(1, 512, 16.0)
    ball = indicator(grid, 1.0)
    assert propagate(ball, MIXED, 0.0) is ball
    np.testing.assert_allclose(propagate(Field.constant(grid, 1.0), MIXED, 7.0).values, 1.0, atol=1e-14)
    with pytest.raises(GridError):
        propagate(ball, MIXED, -0.1)


def test_xgamma_norm():
    grid = make_grid(1, 1024, 100.0)
    w = WeightedNorm(1.0, 0.75)
    assert xgamma_norm(Field.constant(grid, 1.0), w) == pytest.approx(1.0)
    assert xgamma_norm(w.power(grid), w) == pytest.approx(100 / 101)
    assert xgamma_norm(Field.constant(grid, 0.0), w) == 0.0


@pytest.mark.parametrize("gamma, s", [(1.0, 0.5), (1.6, 0.75)])
def test_weighted_norm_requires_gamma_below_2s(gamma, s):
    with pytest.raises(ConfigError):
        WeightedNorm(gamma, s)


def test_strong_continuity():
    grid = make_grid(1, 4096, 64.0)
    u = smoothed_indicator(grid, 4.0, width=1.0)
    report = check_strong_continuity(u, WeightedNorm(0.8, 0.5), MIXED)
    assert report.passed, report.to_dict()
    assert report.get("distance_at_smallest_t").stat < 1e-2


def test_uniform_local_continuity():
    grid = make_grid(1, 4096, 64.0)
    u = smoothed_indicator(grid, 4.0, width=1.0)
    assert check_uniform_local_continuity(u, WeightedNorm(0.4, 0.5)).passed


def test_growth_is_contraction_without_weight():
    report = check_semigroup_growth(WeightedNorm(0.0, 0.5), [0.0, 1.0, 4.0, 16.0])
    assert report.passed, report.to_dict()
    assert report.data["ratios"][0] == pytest.approx(1.0)
    assert report.get("sup_contraction").stat <= 1 + 1e-10


def test_growth_constant_is_stable():
    w = WeightedNorm(0.4, 0.75)
    fits = []
    for n in (4096, 8192):
        report = check_semigroup_growth(w, [1.0, 4.0, 16.0], grid=make_grid(1, n, 256.0))
        assert report.passed, report.to_dict()
        fits.append(report.get("fitted_C_gamma").stat)
    assert 0.5 <= fits[1] / fits[0] <= 2.0


def test_growth_constant_is_finite_at_large_gamma():
    report = check_semigroup_growth(WeightedNorm(0.8, 0.5), [1.0, 4.0, 16.0])
    C = report.get("fitted_C_gamma").stat
    assert np.isfinite(C) and C > 0


def test_growth_needs_probes():
    with pytest.raises(FitError):
        check_semigroup_growth(WeightedNorm(0.4, 0.75), [1.0], probes=[])


def test_barrier_field_is_continuous():
    grid = make_grid(1, 1024, 32.0)
    b = PowerLawBarrier(2.0, 1.0, 0.5)
    v0 = barrier_field(b, grid)
    assert b.epsilon(1) == 2.0
    assert v0.max() == pytest.approx(2.0)
    assert v0.values[grid.center_index()[0] + 32] == pytest.approx(2.0 / 2.0**2)
    assert PowerLawBarrier.from_epsilon(0.05, 2.0, 0.5).a0 == pytest.approx(0.05 * 4.0)
    with pytest.raises(ConfigError):
        PowerLawBarrier(1.0, 0.5, 0.5)


def test_powerlaw_barrier():
    b = PowerLawBarrier(1.0, 1.0, 0.5)
    v, report = push_powerlaw_barrier(b, 1.0)
    assert report.passed, report.to_dict()
    assert v.min() > 0
    assert report.get("plateau_bound").passed


def test_powerlaw_barrier_constants_are_stable():
    b = PowerLawBarrier(1.0, 1.0, 0.5)
    fits = {}
    for t in (1.0, 4.0, 16.0):
        _, report = push_powerlaw_barrier(b, t)
        fits[t] = (report.get("fitted_c").stat, report.get("fitted_C").stat)
    _, refined = push_powerlaw_barrier(b, 1.0, grid=make_grid(1, 16384, 512.0))
    fits["refined"] = (refined.get("fitted_c").stat, refined.get("fitted_C").stat)
    lows = [c for c, _ in fits.values()]
    highs = [C for _, C in fits.values()]
    assert min(lows) > 0 and max(lows) / min(lows) <= 2.0
    assert max(highs) / min(highs) <= 2.0


def test_polynomial_weight():
    w = WeightedNorm(0.8, 0.5)
    first = push_polynomial_weight(w, 1.0)
    second = push_polynomial_weight(w, 2.0)
    assert first.passed and second.passed
    for name in ("fitted_C_gamma", "fitted_c_gamma"):
        a, b = first.get(name).stat, second.get(name).stat
        assert 0.5 < b / a < 2.0
    with pytest.raises(ConfigError):
        push_polynomial_weight(w, 0.5)


def test_max_principle_on_cosine():
    grid = make_grid(1, 64, np.pi)
    u = Field(grid, np.cos(grid.axis))
    report = check_discrete_max_principle(u, SymbolSpec.mixed(0.3))
    assert report.get("L_u_at_max").stat == pytest.approx(2.0)
    assert check_discrete_max_principle(Field.constant(grid, 3.0), MIXED).passed


def test_max_principle_on_random_band_limited_fields():
    grid = make_grid(1, 1024, np.pi)
    rng = np.random.default_rng(11)
    for _ in range(100):
        u = band_limited_field(grid, 8, rng)
        spec = SymbolSpec.mixed(float(rng.uniform(0.05, 0.95)))
        report = check_discrete_max_principle(u, spec)
        assert report.passed, report.to_dict()


def test_max_principle_in_two_dimensions():
    grid = make_grid(2, 64, np.pi)
    x, y = grid.coordinates
    u = Field(grid, np.cos(x) + np.cos(y))
    assert check_discrete_max_principle(u, MIXED).passed


def test_order_preservation():
    grid = make_grid(1, 4096, 64.0)
    u0 = smoothed_indicator(grid, 2.0, amplitude=0.5, width=1.0)
    v0 = smoothed_indicator(grid, 4.0, width=1.0)
    for t in (0.5, 1.0, 5.0):
        report = check_order_preservation(u0, v0, MIXED, t)
        assert report.passed, report.to_dict()


def test_convolution_route():
    grid = make_grid(1, 2048, 64.0)
    u = smoothed_indicator(grid, 3.0, width=0.5)
    assert check_convolution_route(u, mixed_kernel(grid, 1.0, 0.5)).passed


if __name__ == "__main__":
    pytest.main([__file__])
