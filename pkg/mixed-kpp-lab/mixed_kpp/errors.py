class LabError(Exception):
    """Base class for every error raised by the lab."""


class ConfigError(LabError, ValueError):
    pass


class GridError(LabError, ValueError):
    pass


class KernelError(LabError, ValueError):
    pass


class HypothesisError(LabError, ValueError):
    """The reaction term violates f(0)=f(1)=0, f'(1)<0<f'(0) or concavity."""


class FitError(LabError, ValueError):
    pass


class QuadratureError(LabError, RuntimeError):
    pass


class PicardConvergenceError(LabError, RuntimeError):
    def __init__(self, iterations: int, change: float):
        super().__init__(
            f"Picard iteration did not converge after {iterations} iterations "
            f"(last sup-norm change {change:.3e}); reduce dt or relax picard_tol"
        )
        self.iterations = iterations
        self.change = change


class BoundaryGuardError(LabError, RuntimeError):
    def __init__(self, time: float, edge_value: float, guard: float):
        super().__init__(
            f"solution reached the domain edge at t={time:.6g}: "
            f"edge magnitude {edge_value:.3e} exceeds boundary_guard {guard:.3e}"
        )
        self.time = time
        self.edge_value = edge_value
        self.guard = guard


class RangeViolationError(LabError, RuntimeError):
    def __init__(self, time: float, minimum: float, maximum: float):
        super().__init__(
            f"solution left [0, 1] at t={time:.6g}: min={minimum:.3e}, max={maximum:.17g}"
        )
        self.time = time
        self.minimum = minimum
        self.maximum = maximum


class DomainExhaustedError(LabError, RuntimeError):
    pass


class OutputError(LabError, OSError):
    pass
