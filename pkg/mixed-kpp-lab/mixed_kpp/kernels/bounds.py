"""
Checkers for the kernel tables: table invariants, self-similarity,
Chapman-Kolmogorov, factorisation, two-sided bounds, sup decay, the power-law
tail, and agreement with the quadrature oracle. Each returns a Report.
"""
import itertools
import logging
from dataclasses import dataclass
from enum import IntEnum
from typing import Optional, Sequence, Tuple

import numpy as np
from scipy import special, stats

from ..errors import KernelError
from ..grid import UniformGrid, make_grid
from ..reports import Check, Report
from .quadrature import kernel_by_quadrature, tail_alpha, radial_kernel_by_quadrature, tail_constant
from .tables import (
    KernelKind,
    KernelTable,
    convolve_tables,
    fractional_kernel,
    gaussian_kernel,
    kernel_table,
    mixed_kernel,
    resolving_half_width,
)

logger = logging.getLogger(__name__)

# periodic images pollute the outer annulus of heavy-tailed tables
BOUND_BULK = 0.9
ORACLE_BULK = 0.25


class Region(IntEnum):
    """The four cases of the q1/q2 decomposition of H."""

    SHORT_NEAR = 1  # |x|^2 < t < |x|^(2s) <= 1
    SHORT_MID = 2  # t < |x|^2 <= 1
    SHORT_INNER = 3  # |x|^(2s) <= t <= 1
    LONG = 4  # t >= 1 or |x| >= 1


@dataclass(frozen=True)
class KernelBoundSpec:
    B: float = 1.0
    alpha: float = 2.0
    M: float = 5.0
    region: Optional[Region] = None

    def __post_init__(self):
        if not self.B >= 1.0:
            raise KernelError(f"B must be >= 1, got {self.B}")
        if not self.alpha > 0:
            raise KernelError(f"alpha must be positive, got {self.alpha}")
        if not self.M > 0:
            raise KernelError(f"M must be positive, got {self.M}")

    @classmethod
    def default(cls, N: int, s: float, M: float = 5.0) -> "KernelBoundSpec":
        return cls(1.0, tail_alpha(N, s), M)

    def to_dict(self) -> dict:
        region = self.region.name.lower() if self.region is not None else None
        return {"B": self.B, "alpha": self.alpha, "M": self.M, "region": region}


def classify_regions(grid: UniformGrid, t: float, s: float) -> np.ndarray:
    r = grid.radius
    labels = np.full(grid.shape, int(Region.LONG), dtype=int)
    if t >= 1:
        return labels
    near = r < 1.0
    labels[near & (r**2 < t) & (t < r ** (2 * s))] = Region.SHORT_NEAR
    labels[near & (t < r**2)] = Region.SHORT_MID
    labels[near & (r ** (2 * s) <= t)] = Region.SHORT_INNER
    return labels


def q_envelopes(grid: UniformGrid, t: float, s: float) -> Tuple[np.ndarray, np.ndarray]:
    """Lower and upper comparison functions q1, q2 on the lattice."""
    N = grid.dim
    r2 = grid.radius**2
    norm = (4.0 * np.pi * t) ** (-N / 2.0)
    p2 = gaussian_kernel(grid, t).values
    p2_hat = norm * np.exp(-r2 / t)
    p2_tilde = norm * np.exp(-r2 / (16.0 * t))
    ps = fractional_kernel(grid, t, s).values

    labels = classify_regions(grid, t, s)
    q1 = np.where(labels == Region.LONG, ps, p2)
    q2 = np.where(labels == Region.LONG, ps, p2)
    q1 = np.where(labels == Region.SHORT_NEAR, p2_hat, q1)
    q1 = np.where(labels == Region.SHORT_MID, np.maximum(p2_hat, ps), q1)
    q2 = np.where(labels == Region.SHORT_MID, np.maximum(p2_tilde, ps), q2)
    return q1, q2


def image_sum(grid: UniformGrid, exponent: float, images: int = 8) -> np.ndarray:
    """
    sum over periodic images m != 0 of |x + 2Lm|^(-exponent). Exact infinite
    sum in 1D (Hurwitz zeta); in 2D the images with |m|_inf <= `images` are
    summed directly.
    """
    P = 2.0 * grid.half_width
    if grid.dim == 1:
        u = grid.axis / P
        return P ** (-exponent) * (special.zeta(exponent, 1.0 + u) + special.zeta(exponent, 1.0 - u))
    x, y = grid.coordinates
    total = np.zeros(grid.shape)
    for i, j in itertools.product(range(-images, images + 1), repeat=2):
        if i == 0 and j == 0:
            continue
        total += np.hypot(x + i * P, y + j * P) ** (-exponent)
    return total


def periodic_image_tail(grid: UniformGrid, t: float, s: float, images: int = 8) -> np.ndarray:
    """Leading-order contribution t C_{N,s} |x + 2Lm|^(-N-2s) of the periodic images of a kernel."""
    N = grid.dim
    return t * tail_constant(N, s) * image_sum(grid, N + 2.0 * s, images)


def check_table_invariants(
    table: KernelTable, mass_tol: float = 1e-8, symmetry_tol: float = 1e-12, positivity_tol: float = 1e-12
) -> Report:
    report = Report("table_invariants", kind=table.kind, t=table.t, s=table.s)
    report.add(Check.at_most("mass", abs(table.mass() - 1.0), mass_tol, mass=table.mass()))
    report.add(Check.at_most("symmetry", table.symmetry_defect(), symmetry_tol))
    report.add(Check.at_least("positivity", table.minimum(), -positivity_tol))
    return report


def check_scaling(table: KernelTable, tol: float = 1e-6, bulk: float = ORACLE_BULK) -> Report:
    """
    p(t, x) against t^(-N/(2s)) p(1, t^(-1/(2s)) x). The reference p(1, .) is
    built on the rescaled grid L' = L t^(-1/(2s)), whose periodisation matches.
    """
    if table.kind is not KernelKind.FRACTIONAL:
        raise KernelError("the self-similar scaling law applies to the fractional kernel only")
    grid, t, s = table.grid, table.t, table.s
    N = grid.dim
    factor = t ** (-1.0 / (2.0 * s))
    ref_grid = make_grid(N, grid.points_per_axis, grid.half_width * factor)
    reference = fractional_kernel(ref_grid, 1.0, s)
    if N == 1:
        rescaled = np.interp(grid.axis * factor, ref_grid.axis, reference.values)
    else:
        # the rescaled lattice is the reference lattice point for point
        rescaled = reference.values
    predicted = t ** (-N / (2.0 * s)) * rescaled

    mask = grid.bulk_mask(bulk)
    deviation = np.max(np.abs(table.values[mask] - predicted[mask]) / np.abs(predicted[mask]))
    report = Report("scaling", t=t, s=s)
    details = {"prefactor_exponent": -N / (2.0 * s)}
    if N == 2:
        details["note"] = "prefactor t^(-N/(2s)) used; the 1/t^(1/(2s)) form holds for N = 1 only"
    report.add(Check.at_most("scaling_deviation", deviation, tol, **details))
    return report


def check_chapman_kolmogorov(
    kind: KernelKind,
    t: float,
    tau: float,
    grid: UniformGrid = None,
    s: float = 0.5,
    tol: float = 1e-7,
) -> Report:
    if not (t > 0 and tau > 0):
        raise KernelError(f"t and tau must be positive, got {t}, {tau}")
    if grid is None:
        n = 4096
        grid = make_grid(1, n, resolving_half_width(n, min(t, tau, 1.0), s, kind, cap=64.0))
    first = kernel_table(kind, grid, t, s)
    second = kernel_table(kind, grid, tau, s)
    combined = convolve_tables(first, second)
    target = kernel_table(kind, grid, t + tau, s)
    error = np.max(np.abs(combined.values - target.values))
    change = np.max(np.abs(combined.values - first.values))

    report = Report("chapman_kolmogorov", kind=kind, t=t, tau=tau, s=s)
    report.add(Check.at_most("ck_sup_error", error, tol))
    report.add(Check.record("change_from_t", change))
    return report


def check_factorization(grid: UniformGrid, t: float, s: float, tol: float = 1e-8) -> Report:
    """H(t) against the discrete convolution p^(2)(t) * p^(s)(t)."""
    H = mixed_kernel(grid, t, s)
    product = convolve_tables(gaussian_kernel(grid, t), fractional_kernel(grid, t, s), KernelKind.MIXED, t)
    error = np.max(np.abs(H.values - product.values))
    report = Report("factorization", t=t, s=s)
    report.add(Check.at_most("factorization_sup_error", error, tol))
    return report


def _fit_fractional_B(table: KernelTable) -> float:
    grid, t, s = table.grid, table.t, table.s
    N = grid.dim
    mask = grid.bulk_mask(BOUND_BULK)
    r = grid.radius[mask]
    with np.errstate(divide="ignore"):
        envelope = np.minimum(t ** (-N / (2.0 * s)), t / r ** (N + 2.0 * s))
    values = table.values[mask]
    if np.any(values <= 0):
        return float("inf")
    return float(max(np.max(values / envelope), np.max(envelope / values)))


def _tail_window(table: KernelTable, M: float, window: Tuple[float, float] = None) -> np.ndarray:
    grid, t, s = table.grid, table.t, table.s
    if window is None:
        outer = BOUND_BULK if grid.dim == 1 else ORACLE_BULK
        window = (M * t ** (1.0 / (2.0 * s)), outer * grid.half_width)
    r = grid.radius
    mask = (r > window[0]) & (r <= window[1])
    if not np.any(mask):
        raise KernelError(
            f"tail window ({window[0]:g}, {window[1]:g}] is empty; enlarge the domain (L={grid.half_width:g})"
        )
    return mask


def tail_ratio(table: KernelTable, mask: np.ndarray) -> np.ndarray:
    """rho(x) = K(t,x) |x|^(N+2s) / t with the periodic images removed."""
    grid, t, s = table.grid, table.t, table.s
    if table.kind is KernelKind.GAUSSIAN:
        raise KernelError("the Gaussian kernel has no power-law tail")
    free = table.values - periodic_image_tail(grid, t, s)
    r = grid.radius[mask]
    return free[mask] * r ** (grid.dim + 2.0 * s) / t


def _fit_harnack(table: KernelTable) -> Tuple[float, dict]:
    grid, t, s = table.grid, table.t, table.s
    q1, q2 = q_envelopes(grid, t, s)
    labels = classify_regions(grid, t, s)
    mask = grid.bulk_mask(BOUND_BULK) & (table.values > 0)
    H = table.values
    per_region = {}
    for region in Region:
        sel = mask & (labels == region)
        if not np.any(sel):
            continue
        # q2 underflows to 0 far out in the short-time Gaussian regions; the fit is then infinite
        with np.errstate(divide="ignore"):
            upper = np.max(H[sel] / q2[sel])
        lower = np.max(q1[sel] / H[sel])
        per_region[region.name.lower()] = float(max(lower, upper, 1.0))
    return max(per_region.values()), per_region


def check_two_sided_bounds(table: KernelTable, spec: KernelBoundSpec = None) -> Report:
    grid, t, s = table.grid, table.t, table.s
    N = grid.dim
    if table.kind is KernelKind.GAUSSIAN:
        raise KernelError("two-sided bounds are stated for the fractional and mixed kernels")
    spec = spec or KernelBoundSpec.default(N, s)
    report = Report("two_sided_bounds", kind=table.kind, t=t, s=s, M=spec.M)

    if table.kind is KernelKind.FRACTIONAL:
        B = _fit_fractional_B(table)
        report.add(Check.at_most("fitted_B", B, float("inf")))
        report.data["spec"] = KernelBoundSpec(max(B, 1.0), spec.alpha, spec.M)
        return report

    if t >= 1:
        mask = _tail_window(table, spec.M)
        rho = tail_ratio(table, mask)
        constancy = float(np.max(rho) / np.min(rho))
        C = tail_constant(N, s)
        report.add(
            Check.at_most(
                "tail_ratio_constancy",
                constancy,
                1.1,
                rho_min=float(np.min(rho)),
                rho_max=float(np.max(rho)),
            )
        )
        limit = float(rho[np.argmax(grid.radius[mask])])
        report.add(Check.record("tail_limit_vs_alpha", limit / spec.alpha, alpha=spec.alpha,
                                inside_bracket=bool(spec.alpha / 2 < limit < 2 * spec.alpha)))
        report.add(Check.record("tail_limit_vs_C", limit / C, C=C))
    else:
        report.add(Check.record("tail_ratio_constancy", float("nan"), skipped="t < 1"))

    harnack, per_region = _fit_harnack(table)
    report.add(Check.at_most("fitted_harnack_C", harnack, float("inf"), **per_region))
    report.data["spec"] = spec
    return report


def check_sup_decay(
    grid: UniformGrid,
    s: float,
    times: Sequence[float] = (16.0, 32.0, 64.0, 128.0, 256.0, 512.0, 1024.0),
    kind: KernelKind = KernelKind.MIXED,
    tol: float = 0.05,
) -> Report:
    """sup_x K(t, .) is nonincreasing and decays like t^(-N/(2s))."""
    times = np.sort(np.asarray(times, dtype=float))
    sups = np.array([np.max(kernel_table(kind, grid, t, s).values) for t in times])
    increase = float(np.max(np.diff(sups), initial=0.0))
    fit = stats.linregress(np.log(times), np.log(sups))
    target = -grid.dim / (2.0 * s)

    report = Report("sup_decay", kind=kind, s=s, times=times, sups=sups)
    report.add(Check.at_most("sup_nonincreasing", increase, 0.0))
    report.add(
        Check.at_most(
            "decay_exponent",
            abs(fit.slope - target) / abs(target),
            tol,
            slope=fit.slope,
            target=target,
            stated_exponent=1.0 / (2.0 * s),
        )
    )
    return report


def check_tail_law(
    table: KernelTable, window: Tuple[float, float] = None, M: float = 5.0, oracle: bool = True
) -> Report:
    grid, t, s = table.grid, table.t, table.s
    N = grid.dim
    mask = _tail_window(table, M, window)
    r = grid.radius[mask]
    rho = tail_ratio(table, mask)
    if np.any(rho <= 0):
        raise KernelError("kernel tail is not positive over the window; the table is under-resolved")
    fit = stats.linregress(np.log(r), np.log(rho * t / r ** (N + 2.0 * s)))
    target = -(N + 2.0 * s)
    C = tail_constant(N, s)
    alpha = tail_alpha(N, s)
    far = np.argmax(r)
    limit = float(rho[far])

    report = Report("tail_law", kind=table.kind, t=t, s=s)
    report.add(Check.at_most("tail_slope", abs(fit.slope - target) / abs(target), 0.02, slope=fit.slope))
    report.add(Check.at_most("tail_ratio_constancy", np.max(rho) / np.min(rho), 1.1))
    report.add(Check.record("tail_coefficient_vs_C", limit / C, coefficient=limit, C=C))
    report.add(Check.record("tail_coefficient_vs_alpha", limit / alpha, alpha=alpha))
    if oracle and N == 1:
        x = float(grid.axis[mask][far])
        reference = kernel_by_quadrature(t, x, s, table.kind, period=2.0 * grid.half_width)
        value = float(table.values[mask][far])
        report.add(Check.at_most("tail_vs_oracle", abs(value - reference) / reference, 0.05, x=x))
    return report


def check_oracle(
    table: KernelTable, points: int = 32, seed: int = 0, tol: float = 1e-6, bulk: float = ORACLE_BULK
) -> Report:
    """Spectral table against the quadrature oracle at random bulk lattice points."""
    grid = table.grid
    rng = np.random.default_rng(seed)
    candidates = np.flatnonzero(grid.bulk_mask(bulk))
    picks = rng.choice(candidates, size=min(points, candidates.size), replace=False)
    flat = table.values.ravel()
    errors = []
    if grid.dim == 1:
        period = 2.0 * grid.half_width
        for i in picks:
            exact = kernel_by_quadrature(table.t, grid.axis[i], table.s, table.kind, period=period)
            errors.append(abs(flat[i] - exact) / abs(exact))
    else:
        radius = grid.radius.ravel()
        for i in picks:
            exact = radial_kernel_by_quadrature(table.t, radius[i], table.s, table.kind)
            errors.append(abs(flat[i] - exact) / abs(exact))

    report = Report("oracle", kind=table.kind, t=table.t, s=table.s, points=len(picks))
    report.add(Check.at_most("oracle_relative_error", max(errors), tol, seed=seed))
    return report
