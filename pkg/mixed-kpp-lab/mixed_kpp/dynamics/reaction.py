"""KPP reaction terms f on [0, 1]: f(0) = f(1) = 0, f'(1) < 0 < f'(0), f concave."""
import logging
from dataclasses import dataclass
from enum import Enum
from typing import Callable, Optional

import numpy as np

from ..errors import HypothesisError

logger = logging.getLogger(__name__)

PROBE_POINTS = 1001
CONCAVITY_TOL = 1e-10
ENDPOINT_TOL = 1e-12
_H = 1e-5


class ReactionForm(Enum):
    LOGISTIC = "logistic"
    POWER = "power"
    CUSTOM = "custom-concave"


@dataclass(frozen=True)
class ReactionKPP:
    form: ReactionForm
    rate: float
    q: float = 1.0
    func: Optional[Callable[[np.ndarray], np.ndarray]] = None

    def __post_init__(self):
        if not self.rate > 0:
            raise HypothesisError(f"reaction rate must be positive, got {self.rate}")
        if self.form is ReactionForm.POWER and not self.q > 0:
            raise HypothesisError(f"power reaction needs q > 0 for concavity, got {self.q}")
        if self.form is ReactionForm.CUSTOM and self.func is None:
            raise HypothesisError("a custom reaction needs a callable")
        self._check_hypotheses()

    @classmethod
    def logistic(cls, rate: float = 1.0) -> "ReactionKPP":
        return cls(ReactionForm.LOGISTIC, float(rate))

    @classmethod
    def power(cls, rate: float, q: float) -> "ReactionKPP":
        """f(u) = r u (1 - u^q)."""
        return cls(ReactionForm.POWER, float(rate), float(q))

    @classmethod
    def custom(cls, func: Callable[[np.ndarray], np.ndarray], rate: float = None) -> "ReactionKPP":
        if rate is None:
            rate = _one_sided_slope(func, 0.0, 1.0)
        return cls(ReactionForm.CUSTOM, float(rate), func=func)

    @property
    def label(self) -> str:
        if self.form is ReactionForm.POWER:
            return f"power(r={self.rate:g}, q={self.q:g})"
        return f"{self.form.value}(r={self.rate:g})"

    def __call__(self, u) -> np.ndarray:
        u = np.asarray(u, dtype=float)
        if self.form is ReactionForm.LOGISTIC:
            return self.rate * u * (1.0 - u)
        if self.form is ReactionForm.POWER:
            # |u| keeps undershoots below zero real for fractional q
            return self.rate * u * (1.0 - np.sign(u) * np.abs(u) ** self.q)
        return np.asarray(self.func(u), dtype=float)

    @property
    def fprime0(self) -> float:
        if self.form is ReactionForm.CUSTOM:
            return _one_sided_slope(self, 0.0, 1.0)
        return self.rate

    @property
    def fprime1(self) -> float:
        if self.form is ReactionForm.LOGISTIC:
            return -self.rate
        if self.form is ReactionForm.POWER:
            return -self.rate * self.q
        return _one_sided_slope(self, 1.0, -1.0)

    @property
    def lipschitz(self) -> float:
        """Lipschitz constant of f on [0, 1]."""
        if self.form is ReactionForm.LOGISTIC:
            return self.rate
        if self.form is ReactionForm.POWER:
            return self.rate * max(1.0, self.q)
        u = np.linspace(0.0, 1.0, PROBE_POINTS)
        return float(np.max(np.abs(np.diff(self(u)) / np.diff(u))))

    @property
    def growth_constant(self) -> float:
        """c with f(v) <= c v on [0, 1]; f'(0) for concave f."""
        return self.fprime0

    def _check_hypotheses(self) -> None:
        ends = self(np.array([0.0, 1.0]))
        if np.max(np.abs(ends)) > ENDPOINT_TOL:
            raise HypothesisError(f"f(0) and f(1) must vanish, got f(0)={ends[0]:.3e}, f(1)={ends[1]:.3e}")
        if not self.fprime1 < 0 < self.fprime0:
            raise HypothesisError(
                f"need f'(1) < 0 < f'(0), got f'(0)={self.fprime0:.6g}, f'(1)={self.fprime1:.6g}"
            )
        u = np.linspace(0.0, 1.0, PROBE_POINTS)
        f = self(u)
        second = f[2:] - 2.0 * f[1:-1] + f[:-2]
        if np.max(second) > CONCAVITY_TOL:
            worst = int(np.argmax(second)) + 1
            raise HypothesisError(
                f"f is not concave: second difference {second[worst - 1]:.3e} at u={u[worst]:.4f}"
            )


def _one_sided_slope(func, at: float, direction: float) -> float:
    points = at + direction * _H * np.array([0.0, 1.0, 2.0])
    f0, f1, f2 = np.asarray(func(points), dtype=float)
    return float(direction * (-3.0 * f0 + 4.0 * f1 - f2) / (2.0 * _H))


def logistic_solution(u0, rate: float, t: float):
    """Exact spatially uniform solution of u' = r u (1 - u)."""
    grow = np.exp(rate * t)
    return u0 * grow / (1.0 - u0 + u0 * grow)
