"""
Time stepping of u_t + L u = f(u) in mild (Duhamel) form

    u(t) = T_t u0 + int_0^t T_(t-r) f(u(r)) dr.

Two schemes are available: a Picard fixed point of the step map, with f(u(r))
replaced by its linear interpolant through the two Gauss-Legendre nodes of
[0, dt], and the first-order exponential Euler step u+ = T_dt (u + dt f(u)).
"""
import logging
from dataclasses import dataclass, field
from enum import Enum
from functools import lru_cache
from typing import Callable, Dict, List, Tuple

import numpy as np
import scipy.fft as sfft

from ..errors import BoundaryGuardError, ConfigError, PicardConvergenceError, RangeViolationError
from ..grid import Field, SymbolSpec, UniformGrid, get_fft_workers, half_symbol
from ..semigroup import propagate
from .reaction import ReactionKPP

logger = logging.getLogger(__name__)

Reaction = Callable[[np.ndarray], np.ndarray]

_GAUSS_NODES = (0.5 - 0.5 / np.sqrt(3.0), 0.5 + 0.5 / np.sqrt(3.0))
_CONTOUR_POINTS = 32
_CONTOUR_SWITCH = 0.5


class Scheme(Enum):
    PICARD_DUHAMEL = "picard_duhamel"
    EXPONENTIAL_EULER = "exponential_euler"


@dataclass(frozen=True)
class SolverConfig:
    dt: float
    t_end: float
    scheme: Scheme = Scheme.EXPONENTIAL_EULER
    picard_tol: float = 1e-10
    picard_max_iters: int = 50
    boundary_guard: float = 1e-2
    range_tol: float = 1e-8
    # time between stored snapshots; 0 stores every step
    snapshot_stride: float = 0.0

    def __post_init__(self):
        if not isinstance(self.scheme, Scheme):
            try:
                object.__setattr__(self, "scheme", Scheme(self.scheme))
            except ValueError:
                choices = ", ".join(s.value for s in Scheme)
                raise ConfigError(f"unknown scheme {self.scheme!r}, expected one of {choices}") from None
        for name in ("dt", "t_end", "picard_tol", "boundary_guard"):
            if not getattr(self, name) > 0:
                raise ConfigError(f"{name} must be positive, got {getattr(self, name)}")
        if self.picard_max_iters < 1:
            raise ConfigError(f"picard_max_iters must be >= 1, got {self.picard_max_iters}")
        if self.range_tol < 0 or self.snapshot_stride < 0:
            raise ConfigError("range_tol and snapshot_stride must be nonnegative")

    def validate(self, reaction: ReactionKPP) -> None:
        if self.scheme is Scheme.PICARD_DUHAMEL:
            window = 1.0 / (4.0 * reaction.growth_constant)
            if self.dt > window * (1 + 1e-12):
                raise ConfigError(f"dt exceeds contraction window 1/(4c)={window:.6g} (dt={self.dt})")

    @property
    def steps(self) -> int:
        return max(1, int(np.ceil(self.t_end / self.dt - 1e-9)))

    @property
    def snapshot_every(self) -> int:
        if self.snapshot_stride == 0:
            return 1
        return max(1, int(round(self.snapshot_stride / self.dt)))


@dataclass
class Trajectory:
    times: List[float]
    snapshots: List[Field]
    diagnostics: Dict[str, np.ndarray] = field(default_factory=dict)

    @property
    def grid(self) -> UniformGrid:
        return self.snapshots[0].grid

    @property
    def final(self) -> Field:
        return self.snapshots[-1]

    def snapshot_at(self, t: float) -> Field:
        return self.snapshots[int(np.argmin(np.abs(np.asarray(self.times) - t)))]

    def __len__(self) -> int:
        return len(self.snapshots)


def phi_functions(z: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    """
    phi1(z) = (e^z - 1)/z and phi2(z) = (e^z - 1 - z)/z^2 for real z. Near
    zero both are averaged over a circle around z to avoid cancellation.
    """
    z = np.asarray(z, dtype=float)
    phi1, phi2 = np.empty_like(z), np.empty_like(z)
    small = np.abs(z) < _CONTOUR_SWITCH
    zb = z[~small]
    e = np.expm1(zb)
    phi1[~small] = e / zb
    phi2[~small] = (e - zb) / zb**2
    if np.any(small):
        roots = np.exp(1j * np.pi * (np.arange(_CONTOUR_POINTS) + 0.5) / _CONTOUR_POINTS)
        w = z[small][:, None] + roots[None, :]
        ew = np.exp(w) - 1.0
        phi1[small] = (ew / w).mean(axis=1).real
        phi2[small] = ((ew - w) / w**2).mean(axis=1).real
    return phi1, phi2


@lru_cache(maxsize=32)
def _collocation_weights(grid: UniformGrid, spec: SymbolSpec, dt: float):
    """
    Multipliers (E, A1, A2) with v(tau)^ = E u^ + A1 f(v1)^ + A2 f(v2)^ for tau
    at the two Gauss nodes and at dt.
    """
    m = half_symbol(grid, spec)
    r1, r2 = dt * _GAUSS_NODES[0], dt * _GAUSS_NODES[1]
    h = r2 - r1
    weights = []
    for tau in (r1, r2, dt):
        phi1, phi2 = phi_functions(-tau * m)
        p1, p2 = tau * phi1, tau**2 * phi2
        arrays = (np.exp(-tau * m), p1 * (1.0 + r1 / h) - p2 / h, (p2 - r1 * p1) / h)
        for a in arrays:
            a.flags.writeable = False
        weights.append(arrays)
    return tuple(weights)


def step_picard(
    u: Field,
    reaction: Reaction,
    spec: SymbolSpec,
    dt: float,
    tol: float = 1e-10,
    max_iters: int = 50,
    initial_guess: Field = None,
) -> Tuple[Field, int]:
    """One Duhamel step by Picard iteration; returns the new field and the iteration count."""
    grid = u.grid
    workers = get_fft_workers()
    weights = _collocation_weights(grid, spec, float(dt))
    u_hat = sfft.rfftn(u.values, workers=workers)

    def at(j, f1, f2):
        E, a1, a2 = weights[j]
        return sfft.irfftn(E * u_hat + a1 * f1 + a2 * f2, s=grid.shape, workers=workers)

    start = u.values if initial_guess is None else initial_guess.values
    iterate = [start, start, start]
    change = np.inf
    for iteration in range(1, max_iters + 1):
        f1 = sfft.rfftn(reaction(iterate[0]), workers=workers)
        f2 = sfft.rfftn(reaction(iterate[1]), workers=workers)
        new = [at(0, f1, f2), at(1, f1, f2), at(2, f1, f2)]
        change = max(float(np.max(np.abs(a - b))) for a, b in zip(new, iterate))
        iterate = new
        if change <= tol:
            break
    else:
        raise PicardConvergenceError(max_iters, change)
    if iteration > max_iters // 2:
        logger.warning("Picard step needed %d of %d iterations (dt=%g)", iteration, max_iters, dt)
    return Field(grid, iterate[2]), iteration


def step_exponential_euler(u: Field, reaction: Reaction, spec: SymbolSpec, dt: float) -> Field:
    return propagate(u.with_values(u.values + dt * reaction(u.values)), spec, dt)


def edge_magnitude(u: Field) -> float:
    """Largest |u| on the outermost cells relative to sup |u|; zero for uniform fields."""
    sup = u.sup_norm()
    if np.ptp(u.values) <= 1e-12 * max(1.0, sup):
        return 0.0
    return float(np.max(np.abs(u.values[u.grid.edge_mask()])) / sup)


def _guard(u: Field, t: float, config: SolverConfig) -> None:
    edge = edge_magnitude(u)
    if edge > config.boundary_guard:
        raise BoundaryGuardError(t, edge, config.boundary_guard)
    lo, hi = u.min(), u.max()
    if lo < -config.range_tol or hi > 1.0 + config.range_tol:
        raise RangeViolationError(t, lo, hi)


def solve(u0: Field, reaction: ReactionKPP, spec: SymbolSpec, config: SolverConfig) -> Trajectory:
    config.validate(reaction)
    _guard(u0, 0.0, config)
    steps, every = config.steps, config.snapshot_every
    report_every = max(1, steps // 10)
    logger.debug(
        "solving %s with %s, %s: %d steps of dt=%g", reaction.label, spec.label, config.scheme.value, steps, config.dt
    )

    times, snapshots = [0.0], [u0]
    diag = {key: np.zeros(steps + 1) for key in ("time", "mass", "min", "max", "iters")}
    diag["mass"][0], diag["min"][0], diag["max"][0] = u0.mass(), u0.min(), u0.max()

    u, t = u0, 0.0
    for k in range(1, steps + 1):
        dt = config.dt if k < steps else config.t_end - (steps - 1) * config.dt
        if config.scheme is Scheme.PICARD_DUHAMEL:
            u, iters = step_picard(u, reaction, spec, dt, config.picard_tol, config.picard_max_iters)
        else:
            u, iters = step_exponential_euler(u, reaction, spec, dt), 0
        t = config.t_end if k == steps else k * config.dt
        _guard(u, t, config)
        diag["time"][k], diag["mass"][k], diag["min"][k], diag["max"][k] = t, u.mass(), u.min(), u.max()
        diag["iters"][k] = iters
        if k % every == 0 or k == steps:
            times.append(t)
            snapshots.append(u)
        if k % report_every == 0:
            logger.info("t=%.4g max=%.6g mass=%.6g", t, diag["max"][k], diag["mass"][k])
    return Trajectory(times, snapshots, diag)
