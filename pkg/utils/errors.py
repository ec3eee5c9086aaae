"""
utils/errors.py
---------------
Exception hierarchy shared by the analytic models, the simulator and the front end.
app.py maps ConfigError/DomainError/DigestMismatch to exit code 1 and NumericalError to exit code 2.
"""
from typing import Optional


class PfsAnalyticaError(Exception):
    """Base class for every error raised by this project"""


class ConfigError(PfsAnalyticaError):
    """Invalid or inconsistent scenario configuration"""

    def __init__(self, message: str, key: Optional[str] = None):
        self.key = key
        if key:
            message = f"{key}: {message}"
        super().__init__(message)


class DomainError(PfsAnalyticaError, ValueError):
    """Argument outside the domain of an operation"""


class NumericalError(PfsAnalyticaError):
    """
    Numerical failure. The analytic pipelines attach the (terminal, RB) they were
    working on before re-raising, so the front end can name it.
    """

    def __init__(self, message: str, terminal: Optional[int] = None, rb: Optional[int] = None):
        super().__init__(message)
        self.terminal = terminal
        self.rb = rb

    def locate(self, terminal: Optional[int] = None, rb: Optional[int] = None) -> "NumericalError":
        if self.terminal is None:
            self.terminal = terminal
        if self.rb is None:
            self.rb = rb
        return self

    def __str__(self):
        base = super().__str__()
        where = []
        if self.terminal is not None:
            where.append(f"terminal={self.terminal}")
        if self.rb is not None:
            where.append(f"rb={self.rb}")
        return f"{base} ({', '.join(where)})" if where else base


class NonConvergence(NumericalError):
    """Adaptive quadrature ran out of subdivisions before meeting its tolerance"""


class NonFinite(NumericalError):
    """An integrand returned inf or nan at an evaluation node"""


class DivergentMean(NumericalError, DomainError):
    """E[X] diverges: the SINR tail decays like 1/x when the noise power is zero"""


class SchedulingProbabilityUnderflow(NumericalError):
    """P(M=1) underflowed to zero, so the scheduled-SINR density is undefined"""


class DegenerateStd(NumericalError):
    """Gaussian reference model needs a strictly positive rate standard deviation"""


class EmptySubset(PfsAnalyticaError, ValueError):
    """Minimum order statistics need a nonempty RB subset"""


class EnumerationTooLarge(PfsAnalyticaError):
    """Exact subset enumeration requested for too many resource blocks"""


class InsufficientSamples(PfsAnalyticaError):
    """Not enough scheduled samples to build a histogram"""


class DigestMismatch(PfsAnalyticaError):
    """Reports being compared were produced from different scenarios"""


class NegativeVariance(UserWarning):
    """Numerical cancellation produced a negative variance (clamped to zero for reporting)"""
