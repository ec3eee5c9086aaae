"""
channel_model/sinr_dist.py
--------------------------
SINR law of one (terminal, RB) link under Rayleigh fading on both the wanted signal
and a single dominant interferer:

    pdf(x)  = [eta/(Pi x + Ps) + Ps Pi/(Pi x + Ps)^2] exp(-eta x / Ps)
    ccdf(x) = Ps/(Pi x + Ps) exp(-eta x / Ps)

plus the scaled variable X / E[X] that the proportional fair scheduler ranks.
The exponential law used by the interference-as-noise reference model shares the
same interface so both plug into the scheduled-SINR pipeline.
"""
import logging
import math
from functools import cached_property
from typing import Dict

import numpy as np

from channel_model.scenario import LinkStats
from utils.errors import DomainError, NumericalError
from utils.numerics import DEFAULT_SPEC, QuadratureSpec, integrate_semi_infinite, scaled_exp_integral_e1

logger = logging.getLogger(__name__)


def _as_sinr(x):
    """Validated float array of SINR values and whether the input was a scalar"""
    arr = np.asarray(x, dtype=float)
    if np.any(arr < 0) or np.any(np.isnan(arr)):
        raise DomainError("SINR argument must be >= 0")
    return arr, arr.ndim == 0


def _out(values, scalar: bool):
    return float(values) if scalar else values


class SinrLaw:
    """
    Common surface of a per-link SINR distribution. Subclasses provide pdf and
    log_ccdf; the rest is derived from them.
    """

    link: LinkStats
    spec: QuadratureSpec

    def pdf(self, x):
        raise NotImplementedError

    def log_ccdf(self, x):
        raise NotImplementedError

    @property
    def mean(self) -> float:
        raise NotImplementedError

    @property
    def natural_scale(self) -> float:
        """SINR of the average powers, the scale the integrators work in"""
        return self.link.mean_power_sinr

    @property
    def tail_scale(self) -> float:
        """Scale of the exponential noise cut-off, Ps / eta"""
        return self.link.p_sig / self.link.noise

    def ccdf(self, x):
        arr, scalar = _as_sinr(x)
        return _out(np.exp(self.log_ccdf(arr)), scalar)

    def cdf(self, x):
        arr, scalar = _as_sinr(x)
        return _out(-np.expm1(self.log_ccdf(arr)), scalar)

    def log_cdf(self, x):
        """log F(x); -inf at x = 0"""
        arr, scalar = _as_sinr(x)
        with np.errstate(divide="ignore"):
            values = np.log(-np.expm1(self.log_ccdf(arr)))
        return _out(values, scalar)

    def scaled_pdf(self, x):
        """Density of X / E[X]"""
        arr, scalar = _as_sinr(x)
        m = self.mean
        return _out(m * np.asarray(self.pdf(m * arr)), scalar)

    def scaled_cdf(self, x):
        arr, scalar = _as_sinr(x)
        return _out(np.asarray(self.cdf(self.mean * arr)), scalar)


class SinrDist(SinrLaw):
    """Interference-limited SINR law of one link; the mean is computed once and cached"""

    def __init__(self, link: LinkStats, spec: QuadratureSpec = DEFAULT_SPEC):
        self.link = link
        self.spec = spec

    def __repr__(self):
        l = self.link
        return f"SinrDist(p_sig={l.p_sig:.4g}, p_intf={l.p_intf:.4g}, noise={l.noise:.4g})"

    def pdf(self, x):
        arr, scalar = _as_sinr(x)
        a, b, c = self.link.p_sig, self.link.p_intf, self.link.noise
        denom = b * arr + a
        values = (c / denom + a * b / (denom * denom)) * np.exp(-c * arr / a)
        return _out(values, scalar)

    def log_ccdf(self, x):
        arr, scalar = _as_sinr(x)
        a, b, c = self.link.p_sig, self.link.p_intf, self.link.noise
        return _out(-np.log1p(b * arr / a) - c * arr / a, scalar)

    @cached_property
    def mean(self) -> float:
        """E[X] by quadrature of x pdf(x), integrated in units of the mean-power SINR"""
        s = self.natural_scale
        knee = self.tail_scale / s

        def integrand(y):
            x = s * y
            return y * s * self.pdf(x)

        value = s * integrate_semi_infinite(integrand, self.spec, points=[1.0, knee])
        if not (value > 0 and math.isfinite(value)):
            raise NumericalError(f"mean SINR evaluated to {value!r} for {self!r}")
        logger.debug("E[X]=%.6g for %r", value, self)
        return value

    def mean_closed_form(self) -> float:
        """
        E[X] = (Ps/Pi) exp(eta/Pi) E1(eta/Pi), the antiderivative of x pdf(x) evaluated
        between 0 and infinity. Needs Pi > 0.
        """
        a, b, c = self.link.p_sig, self.link.p_intf, self.link.noise
        if b == 0:
            raise DomainError("closed-form mean divides by the interference power, which is 0")
        return (a / b) * scaled_exp_integral_e1(c / b)

    def printed_antiderivative(self, x: float) -> float:
        """
        The closed-form mean left unevaluated, as a function of a free SINR variable x:

            (Ps/Pi) Ei(-eta x/Ps - eta/Pi) exp(eta/Pi) + (Ps^2/(Pi(Pi x + Ps)) - Ps/Pi) exp(-eta x/Ps)

        It is an antiderivative of x pdf(x); its value at 0 is -E[X].
        """
        a, b, c = self.link.p_sig, self.link.p_intf, self.link.noise
        if b == 0:
            raise DomainError("unevaluated closed form divides by the interference power, which is 0")
        x = float(x)
        if x < 0:
            raise DomainError(f"SINR argument must be >= 0, got {x}")
        decay = math.exp(-c * x / a)
        # Ei(-z) exp(eta/Pi) = -e^z E1(z) exp(-eta x/Ps) with z = eta x/Ps + eta/Pi
        ei_term = -(a / b) * scaled_exp_integral_e1(c * x / a + c / b) * decay
        return ei_term + (a * a / (b * (b * x + a)) - a / b) * decay

    def closed_form_report(self) -> Dict[str, float]:
        """Quadrature mean next to the closed-form evaluations and their relative gaps"""
        quadrature = self.mean
        report = {"quadrature_mean": quadrature}
        if self.link.p_intf == 0:
            report.update(closed_form_mean=math.nan, printed_at_zero=math.nan,
                          closed_form_rel_error=math.nan, printed_rel_error=math.nan)
            return report
        closed = self.mean_closed_form()
        printed = self.printed_antiderivative(0.0)
        report.update(
            closed_form_mean=closed,
            printed_at_zero=printed,
            closed_form_rel_error=abs(closed - quadrature) / quadrature,
            printed_rel_error=abs(printed - quadrature) / quadrature,
        )
        return report

    def draw(self, rng: np.random.Generator, size=None):
        """Samples Ps Gs / (Pi Gi + eta) with unit-mean exponential gains"""
        gs = rng.exponential(1.0, size)
        gi = rng.exponential(1.0, size)
        return self.link.p_sig * gs / (self.link.p_intf * gi + self.link.noise)


class ExponentialSinrDist(SinrLaw):
    """
    Interference treated as extra noise: X ~ Exp(lambda), lambda = (Pi + eta) / Ps.
    """

    def __init__(self, link: LinkStats, spec: QuadratureSpec = DEFAULT_SPEC):
        self.link = link
        self.spec = spec

    def __repr__(self):
        return f"ExponentialSinrDist(rate={self.rate:.4g})"

    @property
    def rate(self) -> float:
        return (self.link.p_intf + self.link.noise) / self.link.p_sig

    def pdf(self, x):
        arr, scalar = _as_sinr(x)
        lam = self.rate
        return _out(lam * np.exp(-lam * arr), scalar)

    def log_ccdf(self, x):
        arr, scalar = _as_sinr(x)
        return _out(-self.rate * arr, scalar)

    @property
    def mean(self) -> float:
        return 1.0 / self.rate

    @property
    def tail_scale(self) -> float:
        return self.mean

    def draw(self, rng: np.random.Generator, size=None):
        return rng.exponential(self.mean, size)


# Module-level operations

def pdf(d: SinrLaw, x):
    return d.pdf(x)


def cdf(d: SinrLaw, x):
    return d.cdf(x)


def mean(d: SinrLaw, closed_form: bool = False) -> float:
    """E[X]; quadrature unless closed_form is set"""
    if closed_form:
        if not isinstance(d, SinrDist):
            raise DomainError("closed-form mean is only defined for the interference-limited law")
        return d.mean_closed_form()
    return d.mean


def scaled_pdf(d: SinrLaw, x):
    return d.scaled_pdf(x)


def scaled_cdf(d: SinrLaw, x):
    return d.scaled_cdf(x)


__all__ = [
    "SinrLaw", "SinrDist", "ExponentialSinrDist",
    "pdf", "cdf", "mean", "scaled_pdf", "scaled_cdf",
]
