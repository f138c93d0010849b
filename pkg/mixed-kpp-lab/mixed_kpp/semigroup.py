"""
The linear propagator T_t = exp(-tL) acting on sampled fields, the weighted
spaces X_gamma, and numerical checks of the growth, continuity, maximum
principle and barrier estimates of T_t.
"""
import logging
from dataclasses import dataclass
from typing import List, Sequence, Tuple

import numpy as np
import scipy.fft as sfft

from .errors import ConfigError, FitError, GridError, KernelError
from .grid import Field, SymbolSpec, UniformGrid, apply_multiplier, apply_symbol, get_fft_workers, half_symbol, make_grid
from .kernels import KernelTable, convolve, image_sum
from .reports import Check, Report
from .utils import band_limited_field, dyadic_shells, indicator, smoothed_indicator, uniform_noise

logger = logging.getLogger(__name__)

BULK = 0.9


@dataclass(frozen=True)
class WeightedNorm:
    gamma: float
    s: float

    def __post_init__(self):
        if not 0.0 < self.s < 1.0:
            raise ConfigError(f"s must lie in (0, 1), got {self.s}")
        if not 0.0 <= self.gamma < 2.0 * self.s:
            raise ConfigError(f"gamma must be < 2s (gamma={self.gamma}, 2s={2 * self.s})")

    def weight(self, grid: UniformGrid) -> np.ndarray:
        return 1.0 + grid.radius**self.gamma

    def power(self, grid: UniformGrid) -> Field:
        """w_gamma(x) = |x|^gamma."""
        return Field(grid, grid.radius**self.gamma)


@dataclass(frozen=True)
class PowerLawBarrier:
    """a0 |x|^(-N-2s) outside the ball of radius r0, the constant epsilon inside."""

    a0: float
    r0: float
    s: float

    def __post_init__(self):
        if not self.a0 > 0:
            raise ConfigError(f"a0 must be positive, got {self.a0}")
        if not self.r0 >= 1:
            raise ConfigError(f"r0 must be >= 1, got {self.r0}")
        if not 0.0 < self.s < 1.0:
            raise ConfigError(f"s must lie in (0, 1), got {self.s}")

    def exponent(self, N: int) -> float:
        return N + 2.0 * self.s

    def epsilon(self, N: int) -> float:
        return self.a0 * self.r0 ** (-self.exponent(N))

    @classmethod
    def from_epsilon(cls, epsilon: float, r0: float, s: float, N: int = 1) -> "PowerLawBarrier":
        return cls(epsilon * r0 ** (N + 2.0 * s), r0, s)


def barrier_field(b: PowerLawBarrier, grid: UniformGrid) -> Field:
    r = grid.radius
    plateau = r <= b.r0
    with np.errstate(divide="ignore"):
        tail = b.a0 * r ** (-b.exponent(grid.dim))
    return Field(grid, np.where(plateau, b.epsilon(grid.dim), tail))


def propagate(u0: Field, spec: SymbolSpec, t: float) -> Field:
    """T_t u0 through the multiplier exp(-t m(xi))."""
    if t < 0:
        raise GridError(f"t must be nonnegative, got {t}")
    return apply_multiplier(u0, spec, t)


def xgamma_norm(u: Field, w: WeightedNorm) -> float:
    return float(np.max(np.abs(u.values) / w.weight(u.grid)))


def _probe_family(grid: UniformGrid, w: WeightedNorm, seed: int) -> List[Tuple[str, Field]]:
    rng = np.random.default_rng(seed)
    return [
        ("constant", Field.constant(grid, 1.0)),
        ("weight", w.power(grid)),
        ("one_plus_weight", Field(grid, w.weight(grid))),
        ("indicator", indicator(grid, 1.0)),
        ("smoothed_indicator", smoothed_indicator(grid, 4.0, width=1.0)),
        ("noise", uniform_noise(grid, rng, -1.0, 1.0)),
        ("band_limited", band_limited_field(grid, 8, rng)),
    ]


def _growth_envelope(t: float, w: WeightedNorm) -> float:
    return 1.0 + t ** (w.gamma / 2.0) + t ** (w.gamma / (2.0 * w.s))


def check_strong_continuity(
    u: Field, w: WeightedNorm, spec: SymbolSpec, times: Sequence[float] = (1e-1, 1e-2, 1e-3)
) -> Report:
    """||T_t u - u||_X decreases monotonically as t -> 0."""
    times = sorted(times, reverse=True)
    distances = [xgamma_norm(u.with_values(propagate(u, spec, t).values - u.values), w) for t in times]
    ratios = [b / a for a, b in zip(distances[:-1], distances[1:]) if a > 0]
    report = Report("strong_continuity", times=times, distances=distances)
    report.add(Check.at_most("distance_ratio", max(ratios, default=0.0), 1.0))
    report.add(Check.record("distance_at_smallest_t", distances[-1], t=times[-1]))
    return report


def check_uniform_local_continuity(u: Field, w: WeightedNorm, shifts: Sequence[float] = (1.0, 0.5, 0.25, 0.125)) -> Report:
    """
    Finite-difference modulus sup_x |u(x+h) - u(x)| / (1 + |x|^gamma) over
    lattice shifts h along the first axis; it should shrink with h.
    """
    grid = u.grid
    steps = sorted({max(1, int(round(h / grid.spacing))) for h in shifts}, reverse=True)
    weight = w.weight(grid)
    moduli = []
    for k in steps:
        shifted = np.roll(u.values, -k, axis=0)
        moduli.append(float(np.max(np.abs(shifted - u.values) / weight)))
    ratios = [b / a for a, b in zip(moduli[:-1], moduli[1:]) if a > 0]
    report = Report("uniform_local_continuity", shifts=[k * grid.spacing for k in steps], moduli=moduli)
    report.add(Check.at_most("modulus_ratio", max(ratios, default=0.0), 1.0))
    return report


def check_semigroup_growth(
    w: WeightedNorm,
    times: Sequence[float],
    grid: UniformGrid = None,
    spec: SymbolSpec = None,
    seed: int = 0,
    probes: List[Tuple[str, Field]] = None,
) -> Report:
    """
    Estimates ||T_t||_X by the worst ratio ||T_t u|| / ||u|| over a probe family,
    normalised by 1 + t^(gamma/2) + t^(gamma/2s). The fitted C_gamma should be
    stable (within 2x) over the time list.
    """
    grid = grid or make_grid(1, 4096, 256.0)
    spec = spec or SymbolSpec.mixed(w.s)
    if probes is None:
        probes = _probe_family(grid, w, seed)
    if not probes:
        raise FitError("the probe family is empty")
    if any(t < 0 for t in times):
        raise GridError("times must be nonnegative")

    ratios, normalised, worst = [], [], []
    for t in times:
        best, name = 0.0, None
        for label, u in probes:
            norm = xgamma_norm(u, w)
            if norm == 0:
                continue
            r = xgamma_norm(propagate(u, spec, t), w) / norm
            if r > best:
                best, name = r, label
        ratios.append(best)
        worst.append(name)
        normalised.append(best / _growth_envelope(t, w))

    positive = [c for t, c in zip(times, normalised) if t > 0]
    report = Report("semigroup_growth", gamma=w.gamma, s=w.s, times=list(times), ratios=ratios, worst_probe=worst)
    C = max(normalised)
    report.add(Check.at_most("fitted_C_gamma", C, float("inf")))
    if w.gamma == 0:
        report.add(Check.at_most("sup_contraction", max(ratios), 1.0 + 1e-10))
    if len(positive) > 1:
        report.add(Check.at_most("C_gamma_stability", max(positive) / min(positive), 2.0))
    return report


def push_powerlaw_barrier(
    b: PowerLawBarrier, t: float, grid: UniformGrid = None, spec: SymbolSpec = None
) -> Tuple[Field, Report]:
    if t < 1:
        raise ConfigError(f"the barrier estimate needs t >= 1, got {t}")
    grid = grid or make_grid(1, 8192, 512.0)
    spec = spec or SymbolSpec.mixed(b.s)
    N = grid.dim
    exponent = b.exponent(N)
    v0 = barrier_field(b, grid)
    v = propagate(v0, spec, t)

    r = grid.radius
    window = (r >= b.r0) & grid.bulk_mask(BULK)
    if not np.any(window):
        raise KernelError("barrier tail window is empty; enlarge the domain")
    # periodic images of T_t v0 are far-field copies a0 K |y|^(-N-2s); K is read
    # off at L/4 after removing the bare images, then the images are removed again
    images = b.a0 * image_sum(grid, exponent)
    scale = r[window] ** exponent / b.a0
    probe = np.argmin(np.abs(r[window] - 0.25 * grid.half_width))
    far_ratio = ((v.values - images)[window] * scale)[probe]
    ratio = (v.values - far_ratio * images)[window] * scale
    lower_shape = t / (t ** (N / (2.0 * b.s) + 1.0) + 1.0)
    upper_shape = 1.0 + b.r0 ** (-2.0 * b.s) * t
    c = float(np.min(ratio) / lower_shape)
    C = float(np.max(ratio) / upper_shape)

    eps = b.epsilon(N)
    plateau = r <= b.r0
    spreads = []
    for inner, outer in dyadic_shells(2.0 * b.r0, BULK * grid.half_width):
        shell = (r[window] >= inner) & (r[window] < outer)
        if np.any(shell):
            spreads.append(float(np.max(ratio[shell]) / np.min(ratio[shell])))

    report = Report("powerlaw_barrier", a0=b.a0, r0=b.r0, s=b.s, t=t, shell_spreads=spreads)
    report.add(Check.at_least("fitted_c", c, 1e-12))
    report.add(Check.at_most("fitted_C", C, float("inf"), ratio_max=float(np.max(ratio))))
    report.add(Check.at_most("plateau_bound", float(np.max(v.values[plateau])) - eps, 1e-12 * eps))
    if len(spreads) > 1:
        report.add(Check.at_most("ratio_alignment", spreads[-1] / spreads[0], 1.0))
    return v, report


def push_polynomial_weight(w: WeightedNorm, t: float, grid: UniformGrid = None, spec: SymbolSpec = None) -> Report:
    if t < 1:
        raise ConfigError(f"the weight estimate needs t >= 1, got {t}")
    grid = grid or make_grid(1, 8192, 512.0)
    spec = spec or SymbolSpec.mixed(w.s)
    v = propagate(w.power(grid), spec, t).values
    r = grid.radius
    bulk = grid.bulk_mask(BULK)
    upper = float(np.max(v[bulk] / (r[bulk] ** w.gamma + t ** (w.gamma / (2.0 * w.s)))))
    far = bulk & (r >= t ** (1.0 / (2.0 * w.s)))
    if not np.any(far):
        raise KernelError("no lattice point with |x| >= t^(1/2s) inside the bulk")
    lower = float(np.min(v[far] / r[far] ** w.gamma))

    report = Report("polynomial_weight", gamma=w.gamma, s=w.s, t=t)
    report.add(Check.at_most("fitted_C_gamma", upper, float("inf")))
    report.add(Check.at_least("fitted_c_gamma", lower, 1e-12))
    return report


def _interpolant_at(coeffs: np.ndarray, xi: np.ndarray, weights: np.ndarray, offset: float, n: int) -> float:
    return float(np.sum(weights * (coeffs * np.exp(1j * xi * offset)).real) / n)


def _newton_max(coeffs, xi, weights, n: int, dx: float, i: int) -> Tuple[float, float]:
    offset = i * dx
    best, best_value = offset, _interpolant_at(coeffs, xi, weights, offset, n)
    for _ in range(20):
        d1 = _interpolant_at(coeffs * (1j * xi), xi, weights, offset, n)
        d2 = _interpolant_at(coeffs * (1j * xi) ** 2, xi, weights, offset, n)
        if d2 >= 0:
            break
        step = -d1 / d2
        offset = float(np.clip(offset + step, (i - 1) * dx, (i + 1) * dx))
        value = _interpolant_at(coeffs, xi, weights, offset, n)
        if value >= best_value:
            best, best_value = offset, value
        if abs(step) < 1e-15 * n * dx:
            break
    return best, best_value


def _refine_max_1d(u: Field, candidates: int = 16) -> Tuple[float, np.ndarray, np.ndarray, np.ndarray]:
    """
    Maximum of the trigonometric interpolant: Newton steps on u' = 0 from every
    lattice local maximum that could still hide the global one.
    """
    grid = u.grid
    n, dx = grid.points_per_axis, grid.spacing
    coeffs = sfft.rfft(u.values, workers=get_fft_workers())
    xi = 2.0 * np.pi * sfft.rfftfreq(n, d=dx)
    weights = np.full(xi.size, 2.0)
    weights[0] = 1.0
    weights[-1] = 1.0

    values = u.values
    curvature = sfft.irfft(coeffs * (1j * xi) ** 2, n=n, workers=get_fft_workers())
    margin = dx**2 * np.max(np.abs(curvature))
    local = (values >= np.roll(values, 1)) & (values >= np.roll(values, -1))
    local &= values >= values.max() - margin
    order = np.flatnonzero(local)
    order = order[np.argsort(values[order])[::-1][:candidates]]

    best, best_value = order[0] * dx, -np.inf
    for i in order:
        offset, value = _newton_max(coeffs, xi, weights, n, dx, int(i))
        if value > best_value:
            best, best_value = offset, value
    return best, coeffs, xi, weights


def check_discrete_max_principle(u: Field, spec: SymbolSpec) -> Report:
    """(L u)(x0) >= 0 at the maximum x0 of u."""
    grid = u.grid
    Lu = apply_symbol(u, spec)
    if grid.dim == 1:
        offset, coeffs, xi, weights = _refine_max_1d(u)
        m = half_symbol(grid, spec)
        value = _interpolant_at(coeffs * m, xi, weights, offset, grid.points_per_axis)
        x0 = grid.axis[0] + offset
    else:
        index = np.unravel_index(np.argmax(u.values), grid.shape)
        value = float(Lu.values[index])
        x0 = [c[index] for c in grid.coordinates]
    tol = 1e-8 * Lu.sup_norm() + 1e-12 * max(1.0, u.sup_norm())
    report = Report("max_principle")
    report.add(Check.at_least("L_u_at_max", value, -tol, x0=x0))
    return report


def check_order_preservation(u0: Field, v0: Field, spec: SymbolSpec, t: float, tol: float = 1e-12) -> Report:
    u, v = propagate(u0, spec, t), propagate(v0, spec, t)
    report = Report("order_preservation", t=t)
    report.add(Check.at_most("premise_ordered", float(np.max(u0.values - v0.values)), 0.0))
    if u0.min() >= 0:
        report.add(Check.at_least("positivity", u.min(), -tol))
    report.add(Check.at_most("order", float(np.max(u.values - v.values)), tol))
    report.add(Check.at_most("sup_contraction", u.sup_norm() - u0.sup_norm(), tol * max(1.0, u0.sup_norm())))
    return report


def check_convolution_route(u: Field, table: KernelTable, tol: float = 1e-10) -> Report:
    """Kernel-table convolution against the multiplier route."""
    s = table.s if table.s is not None else 0.5
    spec = table.kind.symbol(s)
    by_table = convolve(u, table)
    by_symbol = propagate(u, spec, table.t)
    report = Report("convolution_route", kind=table.kind, t=table.t)
    report.add(Check.at_most("route_difference", float(np.max(np.abs(by_table.values - by_symbol.values))), tol))
    return report
