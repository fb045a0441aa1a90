"""Exception types shared across modules."""
from __future__ import annotations


class ConfigurationError(ValueError):
    """Invalid parameters or run configuration."""


class SupercriticalExponent(ConfigurationError):
    """``q`` is not below the Sobolev critical exponent ``2* = 2N/(N-2)``."""

    def __init__(self, q: float, dim: int):
        crit = "inf" if dim <= 2 else f"{2 * dim / (dim - 2):g}"
        super().__init__(f"q = {q:g} is not Sobolev subcritical in dimension {dim} (need q < 2* = {crit})")
        self.q = q
        self.dim = dim


class NotApplicable(ValueError):
    """Hypotheses of a certificate are not met (e.g. ``gamma >= lambda * lambda_1``)."""


class PreconditionError(ValueError):
    """Inputs violate a documented precondition; nothing was run."""


class BlowupSignal(ArithmeticError):
    """Non-finite values appeared while stepping."""

    def __init__(self, step: int, time: float, trajectory=None):
        super().__init__(f"non-finite state at step {step} (t = {time:.6g})")
        self.step = step
        self.time = time
        self.trajectory = trajectory


class NonContractive(RuntimeError):
    """Picard iteration hit ``max_iter`` without meeting the tolerance."""

    def __init__(self, report):
        d = report.distances
        super().__init__(f"no convergence after {report.iterations} iterations; last distances {d[-3:]}")
        self.report = report


class BallEscape(RuntimeError):
    """A Picard iterate left the ball ``||h||_{H^S} <= R``."""

    def __init__(self, norm: float, radius: float, report):
        super().__init__(f"iterate norm {norm:.6g} exceeds ball radius R = {radius:.6g}")
        self.norm = norm
        self.radius = radius
        self.report = report
