import numpy as np
import pytest

from mixed_kpp.errors import KernelError
from mixed_kpp.grid import make_grid
from mixed_kpp.kernels import (
    Construction,
    KernelKind,
    kernel_by_quadrature,
    tail_alpha,
    poisson_kernel,
    quadrature_table,
    radial_kernel_by_quadrature,
    tail_constant,
)


def test_poisson_origin():
    assert kernel_by_quadrature(1.0, 0.0, 0.5, KernelKind.FRACTIONAL) == pytest.approx(1 / np.pi, abs=1e-9)


@pytest.mark.parametrize("x", [0.7, 3.0, 25.0])
def test_poisson_cosine_weighted(x):
    value = kernel_by_quadrature(1.0, x, 0.5, KernelKind.FRACTIONAL)
    assert value == pytest.approx(poisson_kernel(1.0, x), rel=1e-8)


@pytest.mark.parametrize("s", [0.1, 0.5, 0.9])
def test_gaussian_origin(s):
    value = kernel_by_quadrature(1.0, 0.0, s, KernelKind.GAUSSIAN)
    assert value == pytest.approx((4 * np.pi) ** -0.5, abs=1e-10)


def test_gaussian_off_origin():
    value = kernel_by_quadrature(2.0, 1.5, None, KernelKind.GAUSSIAN)
    expected = (8 * np.pi) ** -0.5 * np.exp(-1.5**2 / 8)
    assert value == pytest.approx(expected, abs=1e-10)


@pytest.mark.parametrize("x", [0.0, 5.0, 19.5])
def test_periodised_poisson(x):
    value = kernel_by_quadrature(1.0, x, 0.5, KernelKind.FRACTIONAL, period=40.0)
    assert value == pytest.approx(float(poisson_kernel(1.0, x, period=40.0)), rel=1e-8)


def test_point_outside_period():
    with pytest.raises(KernelError):
        kernel_by_quadrature(1.0, 30.0, 0.5, KernelKind.MIXED, period=40.0)


def test_invalid_time():
    with pytest.raises(KernelError):
        kernel_by_quadrature(0.0, 0.0, 0.5, KernelKind.MIXED)


def test_constants():
    assert tail_constant(1, 0.5) == pytest.approx(1 / np.pi)
    assert tail_alpha(1, 0.5) == pytest.approx(2.0)
    # C_{2,1/2} = 1/(2 pi)
    assert tail_constant(2, 0.5) == pytest.approx(1 / (2 * np.pi))


def test_quadrature_table_matches_poisson():
    grid = make_grid(1, 16, 8.0)
    table = quadrature_table(grid, 1.0, 0.5, KernelKind.FRACTIONAL)
    assert table.construction is Construction.QUADRATURE
    np.testing.assert_allclose(table.values, poisson_kernel(1.0, grid.axis, period=16.0), rtol=1e-8)


def test_radial_oracle(caplog):
    value = radial_kernel_by_quadrature(1.0, 0.0, 0.5, KernelKind.GAUSSIAN)
    assert value == pytest.approx(1 / (4 * np.pi), abs=1e-9)
    assert "experimental" in caplog.text
    # the s = 1/2 kernel in the plane is t / (2 pi (t^2 + r^2)^(3/2))
    value = radial_kernel_by_quadrature(1.0, 1.0, 0.5, KernelKind.FRACTIONAL)
    assert value == pytest.approx(1 / (2 * np.pi * 2**1.5), rel=1e-6)


if __name__ == "__main__":
    pytest.main([__file__])
