"""
Periodic grids on [-L, L)^N and the spectral operations built on them.

Every linear operator in the lab is a Fourier multiplier of the symbol
m(xi) = |xi|^2 + |xi|^(2s) (or one of its two parts), applied exactly on the
discrete lattice xi_k = pi k / L.
"""
import logging
from dataclasses import dataclass
from enum import Enum
from functools import cached_property, lru_cache
from typing import Tuple

import numpy as np
import scipy.fft as sfft

from .errors import GridError

logger = logging.getLogger(__name__)

_FFT_WORKERS = 1


def set_fft_workers(workers: int) -> None:
    """Set the thread count used by every transform (the --threads flag)."""
    global _FFT_WORKERS
    if workers < 1:
        raise GridError(f"workers must be >= 1, got {workers}")
    _FFT_WORKERS = int(workers)


def get_fft_workers() -> int:
    return _FFT_WORKERS


class Space(Enum):
    PHYSICAL = "physical"
    FREQUENCY = "frequency"


def _is_power_of_two(n: int) -> bool:
    return n > 0 and (n & (n - 1)) == 0


@dataclass(frozen=True)
class UniformGrid:
    dim: int
    points_per_axis: int
    half_width: float

    def __post_init__(self):
        if self.dim not in (1, 2):
            raise GridError(f"dim must be 1 or 2, got {self.dim}")
        if not _is_power_of_two(self.points_per_axis) or self.points_per_axis < 8:
            raise GridError(
                f"points_per_axis must be a power of two >= 8, got {self.points_per_axis}"
            )
        if not self.half_width > 0:
            raise GridError(f"half_width must be positive, got {self.half_width}")

    @property
    def spacing(self) -> float:
        return 2.0 * self.half_width / self.points_per_axis

    @property
    def shape(self) -> Tuple[int, ...]:
        return (self.points_per_axis,) * self.dim

    @property
    def size(self) -> int:
        return self.points_per_axis**self.dim

    @property
    def cell_volume(self) -> float:
        return self.spacing**self.dim

    @property
    def nyquist(self) -> float:
        return np.pi / self.spacing

    @cached_property
    def axis(self) -> np.ndarray:
        x = -self.half_width + self.spacing * np.arange(self.points_per_axis)
        x.flags.writeable = False
        return x

    @cached_property
    def frequency_axis(self) -> np.ndarray:
        """Dual lattice pi*k/L in transform (not centred) order."""
        xi = 2.0 * np.pi * sfft.fftfreq(self.points_per_axis, d=self.spacing)
        xi.flags.writeable = False
        return xi

    @cached_property
    def coordinates(self) -> Tuple[np.ndarray, ...]:
        if self.dim == 1:
            return (self.axis,)
        return tuple(np.meshgrid(self.axis, self.axis, indexing="ij"))

    @cached_property
    def radius(self) -> np.ndarray:
        r = np.sqrt(sum(c**2 for c in self.coordinates))
        r.flags.writeable = False
        return r

    def bulk_mask(self, fraction: float) -> np.ndarray:
        return self.radius <= fraction * self.half_width * (1 + 1e-12)

    def edge_mask(self, width: float = None) -> np.ndarray:
        if width is None:
            width = max(self.spacing, 0.01 * self.half_width)
        reach = np.max(np.abs(np.stack(self.coordinates)), axis=0)
        return reach >= self.half_width - width * (1 + 1e-12)

    def center_index(self) -> Tuple[int, ...]:
        return (self.points_per_axis // 2,) * self.dim


def make_grid(dim: int, points_per_axis: int, half_width: float) -> UniformGrid:
    return UniformGrid(int(dim), int(points_per_axis), float(half_width))


@dataclass(frozen=True)
class SymbolSpec:
    """Selects -Delta, (-Delta)^s or their sum through the symbol m(xi)."""

    s: float
    include_local: bool = True
    include_fractional: bool = True

    def __post_init__(self):
        if not 0.0 < self.s < 1.0:
            raise GridError(f"s must lie in (0, 1), got {self.s}")
        if not (self.include_local or self.include_fractional):
            raise GridError("at least one of include_local / include_fractional is required")

    @classmethod
    def mixed(cls, s: float) -> "SymbolSpec":
        return cls(s, True, True)

    @classmethod
    def local(cls, s: float = 0.5) -> "SymbolSpec":
        return cls(s, True, False)

    @classmethod
    def fractional(cls, s: float) -> "SymbolSpec":
        return cls(s, False, True)

    @property
    def label(self) -> str:
        if self.include_local and self.include_fractional:
            return "mixed"
        return "classical" if self.include_local else "fractional"

    def evaluate(self, xi_abs) -> np.ndarray:
        xi_abs = np.abs(np.asarray(xi_abs, dtype=float))
        m = np.zeros_like(xi_abs)
        if self.include_local:
            m += xi_abs**2
        if self.include_fractional:
            m += xi_abs ** (2.0 * self.s)
        return m


@dataclass(frozen=True, eq=False)
class Field:
    grid: UniformGrid
    values: np.ndarray
    space: Space = Space.PHYSICAL

    def __post_init__(self):
        dtype = float if self.space is Space.PHYSICAL else complex
        values = np.array(self.values, dtype=dtype)
        if values.shape != self.grid.shape:
            raise GridError(
                f"values of shape {values.shape} do not match grid shape {self.grid.shape}"
            )
        values.flags.writeable = False
        object.__setattr__(self, "values", values)

    @classmethod
    def constant(cls, grid: UniformGrid, value: float) -> "Field":
        return cls(grid, np.full(grid.shape, float(value)))

    def with_values(self, values) -> "Field":
        return Field(self.grid, values, self.space)

    def mass(self) -> float:
        return float(np.sum(self.values).real * self.grid.cell_volume)

    def max(self) -> float:
        return float(np.max(self.values.real))

    def min(self) -> float:
        return float(np.min(self.values.real))

    def sup_norm(self) -> float:
        return float(np.max(np.abs(self.values)))


@lru_cache(maxsize=64)
def _half_wavenumbers(grid: UniformGrid) -> np.ndarray:
    n, dx = grid.points_per_axis, grid.spacing
    last = 2.0 * np.pi * sfft.rfftfreq(n, d=dx)
    if grid.dim == 1:
        xi = last
    else:
        first = grid.frequency_axis
        xi = np.sqrt(first[:, None] ** 2 + last[None, :] ** 2)
    xi.flags.writeable = False
    return xi


@lru_cache(maxsize=64)
def half_symbol(grid: UniformGrid, spec: SymbolSpec) -> np.ndarray:
    """m(xi) on the real-transform half lattice; the Nyquist mode keeps its positive magnitude."""
    m = spec.evaluate(_half_wavenumbers(grid))
    m.flags.writeable = False
    return m


def _phase(grid: UniformGrid) -> np.ndarray:
    # exp(i L xi_k) = (-1)^k for the lattice starting at -L
    sign = np.where(np.arange(grid.points_per_axis) % 2 == 0, 1.0, -1.0)
    if grid.dim == 1:
        return sign
    return sign[:, None] * sign[None, :]


def _scale(grid: UniformGrid) -> float:
    return grid.cell_volume / (2.0 * np.pi) ** (grid.dim / 2.0)


def to_frequency(f: Field) -> Field:
    """Unitary transform approximating (2 pi)^(-N/2) * integral of exp(-i x.xi) u(x) dx."""
    if f.space is not Space.PHYSICAL:
        raise GridError("to_frequency expects a physical-space field")
    grid = f.grid
    coeffs = sfft.fftn(f.values, workers=_FFT_WORKERS) * (_scale(grid) * _phase(grid))
    return Field(grid, coeffs, Space.FREQUENCY)


def to_physical(f: Field) -> Field:
    if f.space is not Space.FREQUENCY:
        raise GridError("to_physical expects a frequency-space field")
    grid = f.grid
    values = sfft.ifftn(f.values / (_scale(grid) * _phase(grid)), workers=_FFT_WORKERS)
    return Field(grid, values.real, Space.PHYSICAL)


def multiply_half(values: np.ndarray, grid: UniformGrid, multiplier: np.ndarray) -> np.ndarray:
    """Apply a real, even multiplier given on the half lattice to physical values."""
    spectrum = sfft.rfftn(values, workers=_FFT_WORKERS)
    spectrum *= multiplier
    return sfft.irfftn(spectrum, s=grid.shape, workers=_FFT_WORKERS)


def apply_multiplier(f: Field, spec: SymbolSpec, t: float) -> Field:
    """Return the field with frequency content multiplied by exp(-t m(xi))."""
    if t < 0:
        raise GridError(f"t must be nonnegative, got {t}")
    if f.space is not Space.PHYSICAL:
        raise GridError("apply_multiplier expects a physical-space field")
    if t == 0:
        return f
    multiplier = np.exp(-t * half_symbol(f.grid, spec))
    return Field(f.grid, multiply_half(f.values, f.grid, multiplier))


def apply_symbol(f: Field, spec: SymbolSpec) -> Field:
    """L u evaluated spectrally: multiply by m(xi)."""
    return Field(f.grid, multiply_half(f.values, f.grid, half_symbol(f.grid, spec)))


def spectral_derivative(f: Field, order: int = 1, axis: int = -1) -> Field:
    grid = f.grid
    n, dx = grid.points_per_axis, grid.spacing
    axis = axis % grid.dim
    last = axis == grid.dim - 1
    if last:
        xi = 2.0 * np.pi * sfft.rfftfreq(n, d=dx)
    else:
        xi = np.array(grid.frequency_axis)
    if order % 2 == 1:
        # odd derivatives of the unpaired Nyquist mode are not real
        xi[n // 2] = 0.0
    factor = (1j * xi) ** order
    shape = [1] * grid.dim
    shape[axis] = factor.size
    return Field(grid, multiply_half(f.values, grid, factor.reshape(shape)))


def symbol_tail(grid: UniformGrid, spec: SymbolSpec, t: float) -> float:
    """exp(-t m(xi_max)): size of the spectrum discarded by the lattice truncation."""
    return float(np.exp(-t * spec.evaluate(grid.nyquist)))
