"""
Level-set fronts R_lambda(t) = max{|x| : u(t, x) >= lambda}, invasion-rate
fits (exponential log R = sigma t + b against linear R = c t + b), the
three-regime comparison, and traveling-wave diagnostics.
"""
import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, replace
from enum import Enum
from itertools import product
from typing import Dict, List, Sequence, Tuple

import numpy as np
from scipy.special import expit
from scipy.stats import linregress

from .dynamics import ReactionKPP, SolverConfig, Trajectory, solve
from .errors import ConfigError, FitError
from .grid import Field, SymbolSpec, UniformGrid, apply_symbol, spectral_derivative
from .reports import Check, Report

logger = logging.getLogger(__name__)

MIN_FIT_SAMPLES = 5
MIN_SPEED_SAMPLES = 10
TRANSIENT = 4.0
DECISIVE_R2 = 0.05
DECISIVE_VARIANCE = 10.0


class Regime(Enum):
    CLASSICAL = "classical"
    FRACTIONAL = "fractional"
    MIXED = "mixed"

    def symbol(self, s: float) -> SymbolSpec:
        if self is Regime.CLASSICAL:
            return SymbolSpec.local(s)
        if self is Regime.FRACTIONAL:
            return SymbolSpec.fractional(s)
        return SymbolSpec.mixed(s)


class RateModel(Enum):
    EXPONENTIAL = "exponential"
    LINEAR = "linear"


@dataclass(frozen=True)
class FrontTrace:
    threshold: float
    times: np.ndarray
    radii: np.ndarray
    regime: Regime = Regime.MIXED

    def __post_init__(self):
        if not 0.0 < self.threshold < 1.0:
            raise ConfigError(f"threshold must lie in (0, 1), got {self.threshold}")
        times = np.asarray(self.times, dtype=float)
        if np.any(np.diff(times) <= 0):
            raise FitError("front samples must be strictly increasing in t")
        object.__setattr__(self, "times", times)
        object.__setattr__(self, "radii", np.asarray(self.radii, dtype=float))

    def __len__(self) -> int:
        return self.times.size

    def in_window(self, window: Tuple[float, float]) -> np.ndarray:
        lo, hi = window
        return (self.times >= lo - 1e-12) & (self.times <= hi + 1e-12)

    def to_dict(self) -> Dict:
        return {
            "threshold": self.threshold,
            "regime": self.regime.value,
            "t": self.times.tolist(),
            "R": self.radii.tolist(),
        }


@dataclass(frozen=True)
class RateFit:
    model: RateModel
    window: Tuple[float, float]
    estimate: float
    intercept: float
    stderr: float
    r_squared: float
    samples: int

    def to_dict(self) -> Dict:
        return {
            "model": self.model.value,
            "window": list(self.window),
            "estimate": self.estimate,
            "intercept": self.intercept,
            "stderr": self.stderr,
            "r_squared": self.r_squared,
            "samples": self.samples,
        }


@dataclass(frozen=True)
class ModelVerdict:
    preferred: RateModel
    delta_r2: float
    variance_ratio: float
    fits: Dict[RateModel, RateFit]

    @property
    def decisive(self) -> bool:
        return self.delta_r2 >= DECISIVE_R2 or self.variance_ratio >= DECISIVE_VARIANCE

    def to_dict(self) -> Dict:
        return {
            "preferred": self.preferred.value,
            "delta_r2": self.delta_r2,
            "variance_ratio": self.variance_ratio,
            "decisive": self.decisive,
            "fits": {m.value: f.to_dict() for m, f in self.fits.items()},
        }


def front_crossings(u: Field, threshold: float) -> Tuple[float, float]:
    """Outermost left and right crossings of u = threshold on a 1D lattice, linearly interpolated."""
    grid = u.grid
    values, x, dx = u.values, grid.axis, grid.spacing
    above = np.flatnonzero(values >= threshold)
    if above.size == 0:
        return np.nan, np.nan
    i, j = above[-1], above[0]
    right, left = x[i], x[j]
    if i + 1 < values.size:
        right += dx * (values[i] - threshold) / (values[i] - values[i + 1])
    if j > 0:
        left -= dx * (values[j] - threshold) / (values[j] - values[j - 1])
    return float(left), float(right)


def _front_radius(u: Field, threshold: float) -> float:
    if u.grid.dim == 1:
        left, right = front_crossings(u, threshold)
        return max(abs(left), abs(right))
    above = u.values >= threshold
    if not np.any(above):
        return np.nan
    return float(np.max(u.grid.radius[above]))


def extract_front(traj: Trajectory, threshold: float, regime: Regime = Regime.MIXED) -> FrontTrace:
    if not 0.0 < threshold < 1.0:
        raise ConfigError(f"threshold must lie in (0, 1), got {threshold}")
    times, radii = [], []
    for t, u in zip(traj.times, traj.snapshots):
        R = _front_radius(u, threshold)
        if np.isfinite(R):
            times.append(t)
            radii.append(R)
    if not times:
        raise FitError(f"the level {threshold} is never reached")
    return FrontTrace(threshold, np.array(times), np.array(radii), regime)


def default_window(trace: FrontTrace) -> Tuple[float, float]:
    """Last half of the run, never earlier than the initial layer."""
    end = float(trace.times[-1])
    return max(TRANSIENT, 0.5 * end), end


def fit_rate(trace: FrontTrace, model: RateModel, window: Tuple[float, float] = None) -> RateFit:
    window = tuple(window or default_window(trace))
    if window[1] <= window[0]:
        raise FitError(f"degenerate fit window {window}")
    mask = trace.in_window(window)
    samples = int(mask.sum())
    if samples < MIN_FIT_SAMPLES:
        raise FitError(f"{samples} front samples in window {window}, need at least {MIN_FIT_SAMPLES}")
    t, R = trace.times[mask], trace.radii[mask]
    if model is RateModel.EXPONENTIAL:
        if np.any(R <= 0):
            raise FitError("the exponential model needs positive radii")
        y = np.log(R)
    else:
        y = R
    fit = linregress(t, y)
    # exact data gives a zero-variance residual and r = +-1
    r_squared = float(fit.rvalue**2) if np.isfinite(fit.rvalue) else 1.0
    return RateFit(model, window, float(fit.slope), float(fit.intercept), float(fit.stderr), r_squared, samples)


def select_model(trace: FrontTrace, window: Tuple[float, float] = None) -> ModelVerdict:
    fits = {model: fit_rate(trace, model, window) for model in RateModel}
    better, worse = sorted(fits.values(), key=lambda f: f.r_squared, reverse=True)
    unexplained = 1.0 - better.r_squared
    ratio = (1.0 - worse.r_squared) / unexplained if unexplained > 0 else np.inf
    return ModelVerdict(better.model, better.r_squared - worse.r_squared, float(ratio), fits)


def expected_law(regime: Regime, reaction: ReactionKPP, s: float, dim: int = 1) -> Tuple[RateModel, float]:
    """Predicted model and rate: c* = 2 sqrt(f'(0)) for the classical problem, f'(0)/(N + 2s) otherwise."""
    if regime is Regime.CLASSICAL:
        return RateModel.LINEAR, 2.0 * float(np.sqrt(reaction.fprime0))
    return RateModel.EXPONENTIAL, reaction.fprime0 / (dim + 2.0 * s)


def fitted_radius(fit: RateFit, times) -> np.ndarray:
    t = np.asarray(times, dtype=float)
    if fit.model is RateModel.EXPONENTIAL:
        return np.exp(fit.intercept + fit.estimate * t)
    return fit.intercept + fit.estimate * t


def reference_fit(fit: RateFit, rate: float) -> RateFit:
    """The same model with the predicted rate, through the fitted value at the window start."""
    intercept = fit.intercept + (fit.estimate - rate) * fit.window[0]
    return replace(fit, estimate=float(rate), intercept=float(intercept), stderr=0.0, r_squared=float("nan"))


def regime_comparison(
    u0: Field,
    reaction: ReactionKPP,
    s: float,
    config: SolverConfig,
    thresholds: Sequence[float] = (0.5,),
    window: Tuple[float, float] = None,
    rate_tol: float = 0.15,
    agreement_tol: float = 0.10,
    speed_tol: float = 0.10,
) -> Report:
    """
    Runs the classical, fractional and mixed problems from identical data and
    compares the fitted invasion laws at the first threshold; further
    thresholds probe the level-set independence of the mixed rate.
    """
    N = u0.grid.dim
    sigma_star = reaction.fprime0 / (N + 2.0 * s)
    c_star = 2.0 * np.sqrt(reaction.fprime0)

    with ThreadPoolExecutor(max_workers=len(Regime)) as pool:
        futures = {r: pool.submit(solve, u0, reaction, r.symbol(s), config) for r in Regime}
        runs = {r: f.result() for r, f in futures.items()}

    traces = {r: [extract_front(runs[r], lam, r) for lam in thresholds] for r in Regime}
    verdicts = {r: select_model(traces[r][0], window) for r in Regime}
    for regime, verdict in verdicts.items():
        fit = verdict.fits[verdict.preferred]
        logger.info(
            "%s: %s fit %.4g +- %.2g (r2=%.6f)", regime.value, fit.model.value, fit.estimate, fit.stderr, fit.r_squared
        )

    report = Report(
        "regime_comparison",
        s=s,
        sigma_star=sigma_star,
        c_star=c_star,
        verdicts={r.value: v for r, v in verdicts.items()},
        traces={r.value: t for r, t in traces.items()},
    )
    classical = verdicts[Regime.CLASSICAL]
    report.add(Check.at_least("classical_linear_decisive", float(classical.preferred is RateModel.LINEAR and classical.decisive), 1.0))
    c = classical.fits[RateModel.LINEAR].estimate
    report.add(Check.at_most("classical_speed_vs_c_star", abs(c / c_star - 1.0), speed_tol, c=c))

    sigmas = {}
    for regime in (Regime.FRACTIONAL, Regime.MIXED):
        verdict = verdicts[regime]
        sigmas[regime] = verdict.fits[RateModel.EXPONENTIAL].estimate
        decisive = verdict.preferred is RateModel.EXPONENTIAL and verdict.decisive
        report.add(Check.at_least(f"{regime.value}_exponential_decisive", float(decisive), 1.0))
        report.add(
            Check.at_most(
                f"{regime.value}_sigma_vs_sigma_star", abs(sigmas[regime] / sigma_star - 1.0), rate_tol, sigma=sigmas[regime]
            )
        )
    report.add(
        Check.at_most("fractional_mixed_agreement", abs(sigmas[Regime.MIXED] / sigmas[Regime.FRACTIONAL] - 1.0), agreement_tol)
    )
    if len(thresholds) > 1:
        rates = [fit_rate(t, RateModel.EXPONENTIAL, window).estimate for t in traces[Regime.MIXED]]
        spread = (max(rates) - min(rates)) / np.mean(rates)
        report.add(Check.at_most("threshold_spread", spread, agreement_tol, thresholds=list(thresholds), rates=rates))
    return report


def check_spreading(
    trace: FrontTrace,
    reaction: ReactionKPP,
    s: float,
    dim: int = 1,
    window: Tuple[float, float] = None,
    rate_tol: float = 0.15,
    speed_tol: float = 0.10,
) -> Report:
    """Single-regime invasion law: linear at c* = 2 sqrt(f'(0)) or exponential at f'(0)/(N + 2s)."""
    verdict = select_model(trace, window)
    report = Report("spreading", regime=trace.regime, threshold=trace.threshold, verdict=verdict)
    expected, target = expected_law(trace.regime, reaction, s, dim)
    tol = speed_tol if expected is RateModel.LINEAR else rate_tol
    estimate = verdict.fits[expected].estimate
    decisive = verdict.preferred is expected and verdict.decisive
    report.add(Check.at_least(f"{expected.value}_decisive", float(decisive), 1.0, delta_r2=verdict.delta_r2))
    report.add(Check.at_most("rate_vs_prediction", abs(estimate / target - 1.0), tol, estimate=estimate, prediction=target))
    return report


def moving_frame_speed(trace: FrontTrace, window: Tuple[float, float] = None, floor: float = 5.0) -> Report:
    """
    Ratio of the instantaneous front speed at the end of the window to the
    speed at its start. A traveling wave keeps it near 1.
    """
    window = tuple(window or default_window(trace))
    mask = trace.in_window(window)
    if mask.sum() < MIN_SPEED_SAMPLES:
        raise FitError(f"{int(mask.sum())} front samples in window {window}, need at least {MIN_SPEED_SAMPLES}")
    t, R = trace.times[mask], trace.radii[mask]
    speed = np.gradient(R, t, edge_order=2)
    ratio = float(speed[-1] / speed[0])
    report = Report("moving_frame_speed", regime=trace.regime, window=window, t=t, speed=speed)
    if trace.regime is Regime.CLASSICAL:
        deviation = max(ratio, 1.0 / ratio) if ratio > 0 else np.inf
        report.add(Check.at_most("speed_ratio_deviation", deviation, 1.25, ratio=ratio))
    else:
        report.add(Check.at_least("speed_ratio", ratio, floor))
    return report


def front_profile(grid: UniformGrid, width: float, center: float = None) -> Field:
    """
    Periodic pulse sigma((x + a)/w) sigma((a - x)/w) with a = L/2; its rising
    flank at x = -a is the logistic profile (1 + tanh((x + a)/2w))/2.
    """
    a = 0.5 * grid.half_width if center is None else center
    x = grid.coordinates[0]
    return Field(grid, expit((x + a) / width) * expit((a - x) / width))


def rising_flank(grid: UniformGrid, center: float = None) -> np.ndarray:
    a = 0.5 * grid.half_width if center is None else center
    return np.abs(grid.coordinates[0] + a) <= 0.25 * grid.half_width


def traveling_wave_residual(
    phi: Field, c, reaction: ReactionKPP, spec: SymbolSpec, region: np.ndarray = None
) -> float:
    """sup over region of |L phi + c . grad phi - f(phi)|."""
    grid = phi.grid
    c = np.broadcast_to(np.asarray(c, dtype=float), (grid.dim,))
    residual = apply_symbol(phi, spec).values - reaction(phi.values)
    for axis, ci in enumerate(c):
        if ci != 0:
            residual = residual + ci * spectral_derivative(phi, 1, axis).values
    if region is None:
        region = grid.bulk_mask(0.9)
    return float(np.max(np.abs(residual[region])))


def wave_sweep(
    grid: UniformGrid,
    reaction: ReactionKPP,
    spec: SymbolSpec,
    speeds: Sequence[float],
    widths: Sequence[float] = (0.5, 1.0, 2.0),
    floor: float = 1e-2,
    workers: int = 4,
) -> Report:
    """Residual of logistic-front candidates over (width, c); no pair should come close to zero."""
    region = rising_flank(grid)
    profiles = {w: front_profile(grid, w) for w in widths}
    pairs: List[Tuple[float, float]] = list(product(widths, speeds))

    def residual(pair):
        w, c = pair
        return traveling_wave_residual(profiles[w], c, reaction, spec, region)

    with ThreadPoolExecutor(max_workers=workers) as pool:
        residuals = list(pool.map(residual, pairs))

    table = [{"width": w, "c": c, "residual": r} for (w, c), r in zip(pairs, residuals)]
    best = int(np.argmin(residuals))
    zero = traveling_wave_residual(Field.constant(grid, 0.0), 0.0, reaction, spec, region)
    one = traveling_wave_residual(Field.constant(grid, 1.0), 0.0, reaction, spec, region)

    report = Report("wave_sweep", operator=spec.label, table=table)
    report.add(Check.at_least("min_residual", residuals[best], floor, width=pairs[best][0], c=pairs[best][1]))
    report.add(Check.at_most("constant_zero_residual", zero, 1e-10))
    report.add(Check.at_most("constant_one_residual", one, 1e-10))
    return report
