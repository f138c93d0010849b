import numpy as np
import pytest

from mixed_kpp.errors import KernelError
from mixed_kpp.grid import Field, SymbolSpec, apply_multiplier, make_grid, symbol_tail
from mixed_kpp.kernels import (
    Construction,
    KernelKind,
    KernelTable,
    convolve,
    fractional_kernel,
    gaussian_kernel,
    kernel_table,
    mixed_kernel,
    poisson_kernel,
    resolving_half_width,
)


@pytest.fixture(scope="module")
def poisson_grid():
    # dx = 1/16 resolves s = 1/2 at t = 1; L large keeps the periodic images small
    return make_grid(1, 2**16, 2048.0)


def test_gaussian_values():
    grid = make_grid(1, 1024, 32.0)
    table = gaussian_kernel(grid, 1.0)
    centre = grid.center_index()[0]
    assert table.at_origin() == pytest.approx(0.2820948, abs=1e-7)
    assert grid.axis[centre + 32] == 2.0
    assert table.values[centre + 32] == pytest.approx(0.1037769, abs=1e-7)
    assert table.kind is KernelKind.GAUSSIAN
    assert table.s is None


@pytest.mark.parametrize("t", [0.5, 1.0, 4.0])
def test_gaussian_mass(t):
    grid = make_grid(1, 2048, 10.0 * np.sqrt(t))
    assert abs(gaussian_kernel(grid, t).mass() - 1.0) < 1e-10


def test_fractional_half_is_poisson(poisson_grid):
    table = fractional_kernel(poisson_grid, 1.0, 0.5)
    assert table.at_origin() == pytest.approx(1.0 / np.pi, abs=1e-6)
    periodic = poisson_kernel(1.0, poisson_grid.axis, period=2 * poisson_grid.half_width)
    np.testing.assert_allclose(table.values, periodic, rtol=1e-10, atol=1e-14)


def test_fractional_half_off_centre(poisson_grid):
    table = fractional_kernel(poisson_grid, 2.0, 0.5)
    index = poisson_grid.center_index()[0] + 32
    assert poisson_grid.axis[index] == 2.0
    assert table.values[index] == pytest.approx(2.0 / (8.0 * np.pi), abs=1e-6)
    assert abs(table.mass() - 1.0) < 1e-8


@pytest.mark.parametrize("kind", list(KernelKind))
@pytest.mark.parametrize("s", [0.25, 0.5, 0.75])
@pytest.mark.parametrize("t", [0.1, 1.0, 10.0])
def test_table_invariants(kind, s, t):
    n = 2**16
    grid = make_grid(1, n, resolving_half_width(n, t, s, kind, cap=64.0))
    table = kernel_table(kind, grid, t, s)
    assert abs(table.mass() - 1.0) <= 1e-8
    assert table.symmetry_defect() <= 1e-12
    assert table.minimum() >= -1e-12


@pytest.mark.parametrize("t", [0.5, 1.0, 2.0])
def test_poisson_oracle_on_bulk(t):
    grid = make_grid(1, 2**16, 512.0)
    table = fractional_kernel(grid, t, 0.5)
    assert table.construction is Construction.SPECTRAL
    bulk = grid.bulk_mask(0.25)
    exact = poisson_kernel(t, grid.axis[bulk], period=2 * grid.half_width)
    assert np.max(np.abs(table.values[bulk] - exact) / exact) <= 1e-6


def test_mixed_near_one_is_double_time_gaussian():
    grid = make_grid(1, 4096, 64.0)
    H = mixed_kernel(grid, 1.0, 0.999)
    G = gaussian_kernel(grid, 2.0)
    assert np.max(np.abs(H.values - G.values)) < 5e-3


def test_two_dimensional_mass():
    grid = make_grid(2, 256, 16.0)
    table = mixed_kernel(grid, 1.0, 0.5)
    assert abs(table.mass() - 1.0) < 1e-8
    assert table.symmetry_defect() < 1e-12


def test_convolution_of_point_mass_returns_table():
    grid = make_grid(1, 512, 16.0)
    table = mixed_kernel(grid, 0.5, 0.5)
    delta = np.zeros(grid.shape)
    delta[grid.center_index()] = 1.0 / grid.spacing
    np.testing.assert_allclose(convolve(Field(grid, delta), table).values, table.values, atol=1e-13)


def test_convolution_matches_multiplier():
    grid = make_grid(1, 1024, 32.0)
    rng = np.random.default_rng(3)
    u = Field(grid, rng.uniform(size=grid.shape))
    table = mixed_kernel(grid, 1.0, 0.75)
    by_table = convolve(u, table)
    by_symbol = apply_multiplier(u, SymbolSpec.mixed(0.75), 1.0)
    assert np.max(np.abs(by_table.values - by_symbol.values)) < 1e-10


def test_resolving_half_width_meets_target():
    n = 2048
    L = resolving_half_width(n, 2.0, 0.5, KernelKind.MIXED)
    grid = make_grid(1, n, L)
    assert symbol_tail(grid, SymbolSpec.mixed(0.5), 2.0) <= np.exp(-45.0) * (1 + 1e-9)
    assert resolving_half_width(n, 2.0, 0.5, KernelKind.MIXED, cap=8.0) == 8.0


def test_poisson_period_limit():
    x = np.linspace(-3, 3, 13)
    np.testing.assert_allclose(poisson_kernel(1.0, x, period=1e5), poisson_kernel(1.0, x), rtol=1e-8)


@pytest.mark.parametrize("t, s", [(0.0, 0.5), (-1.0, 0.5), (1.0, 0.0), (1.0, 1.0)])
def test_invalid_parameters(t, s):
    grid = make_grid(1, 64, 8.0)
    with pytest.raises(KernelError):
        mixed_kernel(grid, t, s)


def test_table_shape_is_checked():
    grid = make_grid(1, 64, 8.0)
    with pytest.raises(KernelError):
        KernelTable(grid, 1.0, 0.5, KernelKind.MIXED, np.zeros(32), Construction.SPECTRAL)


def test_under_resolved_table_warns(caplog):
    grid = make_grid(1, 64, 64.0)
    fractional_kernel(grid, 0.01, 0.5)
    assert "discarded spectrum" in caplog.text


if __name__ == "__main__":
    pytest.main([__file__])
