"""
Independent quadrature oracle for the kernels,

    K(t, x) = (1/pi) * int_0^Xi cos(x xi) exp(-t m(xi)) d xi      (N = 1),

with Xi chosen so the discarded tail is below 1e-12. QUADPACK's QAWO
handles the cosine weight; the far periodic images of a heavy-tailed
kernel are summed in closed form through the Hurwitz zeta function.
"""
import logging

import numpy as np
from scipy import integrate, special

from ..errors import KernelError, QuadratureError
from ..grid import UniformGrid
from .tables import Construction, KernelKind, KernelTable

logger = logging.getLogger(__name__)

TAIL_TOL = 1e-12
EPSABS = 1e-14
EPSREL = 1e-12
LIMIT = 500


def tail_constant(N: int, s: float) -> float:
    """C_{N,s}: the kernel of (-Delta)^s is C_{N,s} |x|^(-N-2s), and p^(s)(t,x) ~ C_{N,s} t |x|^(-N-2s)."""
    return (
        2.0 ** (2 * s - 1)
        * 2.0
        * s
        * special.gamma((N + 2 * s) / 2.0)
        / (np.pi ** (N / 2.0) * special.gamma(1.0 - s))
    )


def tail_alpha(N: int, s: float) -> float:
    """The tail coefficient alpha = 2^(N+2s) pi^(N/2-1) s Gamma(N/2+s) Gamma(s) of the mixed-kernel bound."""
    return (
        2.0 ** (N + 2 * s)
        * np.pi ** (N / 2.0 - 1.0)
        * s
        * special.gamma(N / 2.0 + s)
        * special.gamma(s)
    )


def _symbol(kind: KernelKind, s: float):
    spec = kind.symbol(s)
    return spec.evaluate


def _power_tail(t: float, p: float, cutoff: float) -> float:
    """int_cutoff^inf exp(-t xi^p) d xi."""
    a = 1.0 / p
    return a * t ** (-a) * special.gamma(a) * special.gammaincc(a, t * cutoff**p)


def tail_bound(t: float, s: float, kind: KernelKind, cutoff: float) -> float:
    bounds = []
    if kind in (KernelKind.GAUSSIAN, KernelKind.MIXED):
        bounds.append(_power_tail(t, 2.0, cutoff))
    if kind in (KernelKind.FRACTIONAL, KernelKind.MIXED):
        bounds.append(_power_tail(t, 2.0 * s, cutoff))
    return min(bounds) / np.pi


def frequency_cutoff(t: float, s: float, kind: KernelKind) -> float:
    cutoff = 1.0
    while tail_bound(t, s, kind, cutoff) >= TAIL_TOL:
        cutoff *= 2.0
        if cutoff > 1e12:
            raise QuadratureError(f"no frequency cutoff reaches tail {TAIL_TOL} for t={t}, s={s}")
    return cutoff


def _integrate(fun, a: float, b: float, x: float):
    if x == 0.0:
        result = integrate.quad(fun, a, b, epsabs=EPSABS, epsrel=EPSREL, limit=LIMIT, full_output=1)
    else:
        result = integrate.quad(
            fun, a, b, weight="cos", wvar=x, epsabs=EPSABS, epsrel=EPSREL, limit=LIMIT, full_output=1
        )
    value, error = result[0], result[1]
    return value, error


def _free_space(t: float, x: float, s: float, kind: KernelKind, cutoff: float) -> float:
    m = _symbol(kind, s)

    def integrand(xi):
        return np.exp(-t * m(xi))

    total, error = 0.0, 0.0
    # the fractional symbol is not smooth at 0; keep that point at an interval end
    for a, b in ((0.0, min(1.0, cutoff)), (1.0, cutoff)):
        if b <= a:
            continue
        value, err = _integrate(integrand, a, b, abs(x))
        total += value
        error += err
    total /= np.pi
    error /= np.pi
    if error > max(1e-10, 1e-8 * abs(total)):
        raise QuadratureError(
            f"quadrature error estimate {error:.2e} too large at t={t}, x={x}, s={s}"
        )
    return total


def kernel_by_quadrature(
    t: float, x: float, s: float, kind: KernelKind, period: float = None, images: int = 16
) -> float:
    """
    Kernel value at a point of the line. With `period`, returns the periodised
    kernel sum_m K(x + m P): the nearest `images` copies on each side by
    quadrature, the rest from the tail t C_{1,s} |y|^(-1-2s).
    """
    if not t > 0:
        raise KernelError(f"kernel time must be positive, got {t}")
    if kind is not KernelKind.GAUSSIAN and (s is None or not 0 < s < 1):
        raise KernelError(f"s must lie in (0, 1), got {s}")
    cutoff = frequency_cutoff(t, s, kind)
    x = float(x)
    if period is None:
        return _free_space(t, x, s, kind, cutoff)

    if abs(x) > period / 2:
        raise KernelError(f"point {x} lies outside one period [-{period / 2}, {period / 2}]")
    total = 0.0
    for m in range(-images, images + 1):
        total += _free_space(t, x + m * period, s, kind, cutoff)
    if kind is not KernelKind.GAUSSIAN:
        a = 1.0 + 2.0 * s
        q = images + 1
        far = special.zeta(a, q + x / period) + special.zeta(a, q - x / period)
        total += t * tail_constant(1, s) * period ** (-a) * far
    return total


def radial_kernel_by_quadrature(t: float, r: float, s: float, kind: KernelKind) -> float:
    """
    N = 2 radial oracle (1/2pi) int_0^Xi J0(r xi) exp(-t m(xi)) xi d xi.
    Experimental: the Bessel oscillation is handled by splitting at its period.
    """
    logger.warning("radial quadrature oracle is experimental (N = 2)")
    if not t > 0:
        raise KernelError(f"kernel time must be positive, got {t}")
    m = _symbol(kind, s)
    cutoff = frequency_cutoff(t, s, kind) * 2.0

    def integrand(xi):
        return special.j0(r * xi) * np.exp(-t * m(xi)) * xi

    step = cutoff if r == 0 else min(cutoff, np.pi / r)
    edges = np.append(np.arange(0.0, cutoff, step), cutoff)
    total = 0.0
    for a, b in zip(edges[:-1], edges[1:]):
        value, error = integrate.quad(integrand, a, b, epsabs=EPSABS, epsrel=EPSREL, limit=LIMIT)[:2]
        if error > 1e-9:
            raise QuadratureError(f"radial quadrature error {error:.2e} on [{a}, {b}]")
        total += value
    return total / (2.0 * np.pi)


def quadrature_table(grid: UniformGrid, t: float, s: float, kind: KernelKind, images: int = 16) -> KernelTable:
    """Full 1D table from the periodised oracle; slow, meant for small grids."""
    if grid.dim != 1:
        raise KernelError("quadrature tables are built in one dimension only")
    period = 2.0 * grid.half_width
    x = grid.axis
    values = np.empty(grid.shape)
    centre = grid.points_per_axis // 2
    for i in range(centre, grid.points_per_axis):
        values[i] = kernel_by_quadrature(t, x[i], s, kind, period=period, images=images)
    # the table is even about index n/2; index 0 (x = -L) is its own mirror
    values[1:centre] = values[centre + 1 :][::-1]
    values[0] = kernel_by_quadrature(t, x[0], s, kind, period=period, images=images)
    return KernelTable(grid, t, s if kind is not KernelKind.GAUSSIAN else None, kind, values, Construction.QUADRATURE)
