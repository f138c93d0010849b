"""
Sampled heat kernels of -Delta, (-Delta)^s and -Delta + (-Delta)^s.

Tables are stored centred: index n/2 along each axis is x = 0. Spectral
tables are the exact lattice inversion of exp(-t m(xi)), which on the
periodic domain is the 2L-periodisation of the whole-space kernel.
"""
import logging
from dataclasses import dataclass
from enum import Enum
from typing import Optional

import numpy as np
import scipy.fft as sfft

from ..errors import KernelError
from ..grid import Field, SymbolSpec, UniformGrid, get_fft_workers, half_symbol, symbol_tail

logger = logging.getLogger(__name__)

TAIL_WARNING = 1e-12


class KernelKind(Enum):
    GAUSSIAN = "gaussian"
    FRACTIONAL = "fractional"
    MIXED = "mixed"

    def symbol(self, s: float) -> SymbolSpec:
        if self is KernelKind.GAUSSIAN:
            return SymbolSpec.local(s if s is not None else 0.5)
        if self is KernelKind.FRACTIONAL:
            return SymbolSpec.fractional(s)
        return SymbolSpec.mixed(s)


class Construction(Enum):
    SPECTRAL = "spectral"
    QUADRATURE = "quadrature"
    CONVOLUTION = "convolution"


@dataclass(frozen=True, eq=False)
class KernelTable:
    grid: UniformGrid
    t: float
    s: Optional[float]
    kind: KernelKind
    values: np.ndarray
    construction: Construction
    spectral_tail: float = 0.0

    def __post_init__(self):
        values = np.array(self.values, dtype=float)
        if values.shape != self.grid.shape:
            raise KernelError(f"kernel values of shape {values.shape} do not fit the grid")
        values.flags.writeable = False
        object.__setattr__(self, "values", values)

    def mass(self) -> float:
        return float(np.sum(self.values) * self.grid.cell_volume)

    def minimum(self) -> float:
        return float(np.min(self.values))

    def at_origin(self) -> float:
        return float(self.values[self.grid.center_index()])

    def symmetry_defect(self) -> float:
        """max |K(x) - K(-x)| relative to max K; x = -L has no mirror and is skipped."""
        inner = self.values[(slice(1, None),) * self.grid.dim]
        mirrored = inner[(slice(None, None, -1),) * self.grid.dim]
        return float(np.max(np.abs(inner - mirrored)) / np.max(np.abs(self.values)))

    def transform_order(self) -> np.ndarray:
        """Values with x = 0 moved to index 0, as circular convolution expects."""
        return sfft.ifftshift(self.values)


def _check_time(t: float) -> None:
    if not t > 0:
        raise KernelError(f"kernel time must be positive, got {t}")


def _check_order(s: float) -> None:
    if s is None or not 0.0 < s < 1.0:
        raise KernelError(f"s must lie in (0, 1), got {s}")


def _spectral_table(grid: UniformGrid, t: float, s: float, kind: KernelKind) -> KernelTable:
    spec = kind.symbol(s)
    tail = symbol_tail(grid, spec, t)
    if tail > TAIL_WARNING:
        logger.warning(
            "%s kernel at t=%g: discarded spectrum exp(-t m(xi_max)) = %.2e; "
            "refine the grid or expect ringing",
            kind.value,
            t,
            tail,
        )
    multiplier = np.exp(-t * half_symbol(grid, spec))
    values = sfft.irfftn(multiplier, s=grid.shape, workers=get_fft_workers())
    values = sfft.fftshift(values / grid.cell_volume)
    return KernelTable(grid, t, s, kind, values, Construction.SPECTRAL, tail)


def gaussian_kernel(grid: UniformGrid, t: float) -> KernelTable:
    """(4 pi t)^(-N/2) exp(-|z|^2 / 4t) evaluated on the lattice."""
    _check_time(t)
    N = grid.dim
    values = (4.0 * np.pi * t) ** (-N / 2.0) * np.exp(-grid.radius**2 / (4.0 * t))
    return KernelTable(grid, t, None, KernelKind.GAUSSIAN, values, Construction.SPECTRAL)


def fractional_kernel(grid: UniformGrid, t: float, s: float) -> KernelTable:
    _check_time(t)
    _check_order(s)
    return _spectral_table(grid, t, s, KernelKind.FRACTIONAL)


def mixed_kernel(grid: UniformGrid, t: float, s: float) -> KernelTable:
    _check_time(t)
    _check_order(s)
    return _spectral_table(grid, t, s, KernelKind.MIXED)


def kernel_table(kind: KernelKind, grid: UniformGrid, t: float, s: float = None) -> KernelTable:
    if kind is KernelKind.GAUSSIAN:
        return gaussian_kernel(grid, t)
    if kind is KernelKind.FRACTIONAL:
        return fractional_kernel(grid, t, s)
    return mixed_kernel(grid, t, s)


def resolving_half_width(
    points_per_axis: int, t: float, s: float, kind: KernelKind, target: float = 45.0, cap: float = None
) -> float:
    """
    Largest half-width whose lattice still resolves the kernel at time t:
    t m(xi_max) >= target, so the discarded spectrum is below exp(-target).
    """
    _check_time(t)
    xi_local = np.sqrt(target / t)
    if kind is KernelKind.GAUSSIAN:
        xi = xi_local
    else:
        _check_order(s)
        xi_frac = (target / t) ** (1.0 / (2.0 * s))
        xi = xi_frac if kind is KernelKind.FRACTIONAL else min(xi_frac, xi_local)
    half_width = np.pi * points_per_axis / (2.0 * xi)
    if cap is not None:
        half_width = min(half_width, cap)
    return float(half_width)


def convolve(u: Field, table: KernelTable) -> Field:
    """Circular convolution (table * u)(x) = sum_y K(x - y) u(y) dx^N."""
    if u.grid != table.grid:
        raise KernelError("field and kernel table live on different grids")
    grid = u.grid
    workers = get_fft_workers()
    spectrum = sfft.rfftn(u.values, workers=workers) * sfft.rfftn(table.transform_order(), workers=workers)
    values = sfft.irfftn(spectrum, s=grid.shape, workers=workers) * grid.cell_volume
    return Field(grid, values)


def convolve_tables(a: KernelTable, b: KernelTable, kind: KernelKind = None, t: float = None) -> KernelTable:
    """a * b as a centred table; metadata defaults to the Chapman-Kolmogorov reading (t_a + t_b)."""
    if a.grid != b.grid:
        raise KernelError("kernel tables live on different grids")
    grid = a.grid
    workers = get_fft_workers()
    spectrum = sfft.rfftn(a.transform_order(), workers=workers) * sfft.rfftn(b.transform_order(), workers=workers)
    values = sfft.irfftn(spectrum, s=grid.shape, workers=workers) * grid.cell_volume
    kind = kind or (a.kind if a.kind is b.kind else KernelKind.MIXED)
    s = a.s if a.s is not None else b.s
    return KernelTable(
        grid,
        t if t is not None else a.t + b.t,
        s,
        kind,
        sfft.fftshift(values),
        Construction.CONVOLUTION,
    )


def poisson_kernel(t: float, x, period: float = None):
    """
    The s = 1/2 kernel t / (pi (t^2 + x^2)); with a period P, its P-periodisation
    (1/P) sinh(a) / (cosh(a) - cos(b)) with a = 2 pi t / P, b = 2 pi x / P.
    """
    _check_time(t)
    x = np.asarray(x, dtype=float)
    if period is None:
        return t / (np.pi * (t**2 + x**2))
    a = 2.0 * np.pi * t / period
    b = 2.0 * np.pi * x / period
    # cosh(a) - cos(b) written without cancellation
    denom = 2.0 * np.sinh(a / 2.0) ** 2 + 2.0 * np.sin(b / 2.0) ** 2
    return np.sinh(a) / (period * denom)
