import numpy as np
from scipy.special import erf

from .grid import Field, UniformGrid


def indicator(grid: UniformGrid, radius: float, amplitude: float = 1.0) -> Field:
    """amplitude on the closed ball |x| <= radius, zero elsewhere (no smoothing)."""
    values = np.where(grid.radius <= radius * (1 + 1e-12), amplitude, 0.0)
    return Field(grid, values)


def smoothed_indicator(
    grid: UniformGrid, radius: float, amplitude: float = 1.0, width: float = 1.0
) -> Field:
    """Indicator of the ball with erf edges of the given width, resolvable by the lattice."""
    if width <= 0:
        return indicator(grid, radius, amplitude)
    r = grid.radius
    profile = 0.5 * (erf((radius - r) / width) + erf((radius + r) / width))
    return Field(grid, amplitude * profile)


def band_limited_field(grid: UniformGrid, modes: int, rng: np.random.Generator) -> Field:
    """Random real trigonometric polynomial using only the lowest `modes` wavenumbers."""
    L = grid.half_width
    values = np.full(grid.shape, rng.normal())
    for axis_coords in grid.coordinates:
        for k in range(1, modes + 1):
            a, b = rng.normal(size=2) / k
            values = values + a * np.cos(np.pi * k * axis_coords / L)
            values = values + b * np.sin(np.pi * k * axis_coords / L)
    return Field(grid, values)


def uniform_noise(grid: UniformGrid, rng: np.random.Generator, low=0.0, high=1.0) -> Field:
    return Field(grid, rng.uniform(low, high, size=grid.shape))


def dyadic_shells(r_min: float, r_max: float):
    """Consecutive shells [r, 2r) covering [r_min, r_max]."""
    shells = []
    inner = r_min
    while inner < r_max:
        outer = min(2.0 * inner, r_max)
        shells.append((inner, outer))
        inner = outer
    return shells
