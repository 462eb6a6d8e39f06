"""Exception types raised by solvers and the simulation pipeline."""

from __future__ import annotations


class SemiflError(Exception):
    """Base class for all package-specific errors."""


class ConfigError(SemiflError):
    """Invalid experiment configuration; ``field`` holds the offending path."""

    def __init__(self, message: str, field: str = ""):
        super().__init__(f"{field}: {message}" if field else message)
        self.field = field


class InfeasibleError(SemiflError):
    """A solver constraint set is empty. ``context`` records which one and why."""

    def __init__(self, message: str, **context):
        super().__init__(message)
        self.context = dict(context)


class InfeasibleMse(InfeasibleError):
    """Amplitude-ratio target incompatible with the MSE threshold."""


class GapInfeasible(InfeasibleError):
    """Optimality-gap target unreachable for any receiver normalization."""


class PowerBudgetExceeded(InfeasibleError):
    """Required transmit power exceeds the per-device cap."""


class LatencyInfeasible(InfeasibleError):
    """Round latency budget cannot be met by any allocation."""


class FrequencyCapExceeded(InfeasibleError):
    """Required CPU frequency exceeds the hardware cap."""


class LpInfeasible(InfeasibleError):
    """Data-allocation linear program has no feasible point."""


class NoFeasibleStart(InfeasibleError):
    """No feasible starting beamformer set for the DC iteration."""


class InnerSolverFailure(SemiflError):
    """Inner convex subproblem did not converge within its iteration budget."""


class UnservableDevice(SemiflError):
    """Effective channel gain after beamforming is numerically zero."""

    def __init__(self, device: int, gain: float):
        super().__init__(
            f"device {device} has effective channel gain {gain:.3e}; "
            "channel inversion would overflow"
        )
        self.device = device
        self.gain = gain
