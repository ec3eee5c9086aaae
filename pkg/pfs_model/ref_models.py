"""
pfs_model/ref_models.py
-----------------------
Reference rate predictors compared against the scheduled-SINR model:

- Gaussian: instantaneous rates taken as Gaussian with moments from an exponential
  SINR of mean Ps/(Pi+eta); the winner integral runs over y in [0, inf) and the
  product runs over the rival terminals.
- IaN (interference as noise): exponential SINR law with rate (Pi+eta)/Ps, pushed
  through the same scheduled-SINR pipeline as the exact law.
- Naive: C(Ps/(Pi+eta)) shared equally among J terminals.
"""
import logging
import math
import warnings
from enum import Enum
from typing import List, Sequence, Tuple

import numpy as np
from scipy.stats import norm

from channel_model.mcs import SpectralEfficiency
from channel_model.scenario import LinkStats, LinkTable
from channel_model.sinr_dist import ExponentialSinrDist
from pfs_model.pfs_analytic import IAN_LAW, PFS, ScheduledSinrModel
from utils.errors import DegenerateStd, DomainError, NegativeVariance, NumericalError
from utils.numerics import DEFAULT_SPEC, QuadratureSpec, integrate_semi_infinite

logger = logging.getLogger(__name__)

SQRT_2PI = math.sqrt(2.0 * math.pi)


class ReferenceModelKind(str, Enum):
    GAUSSIAN = "gaussian"
    IAN = "ian"
    NAIVE = "naive"


def gaussian_rate_moments(link: LinkStats, eff: SpectralEfficiency,
                          spec: QuadratureSpec = DEFAULT_SPEC, clamp: bool = False) -> Tuple[float, float]:
    """
    (E[r], sigma_r) in bits/symbol with r = C(gamma_bar y), y ~ Exp(1).

    A negative variance from cancellation raises a NegativeVariance warning; it is
    clamped to 0 only when clamp is set.
    """
    if eff.is_constant:
        return eff.value, 0.0
    gamma_bar = link.mean_power_sinr
    hints = [b / gamma_bar for b in eff.breakpoints]

    def first(y):
        return np.asarray(eff.efficiency(gamma_bar * y)) * np.exp(-y)

    def second(y):
        c = np.asarray(eff.efficiency(gamma_bar * y))
        return c * c * np.exp(-y)

    mean = integrate_semi_infinite(first, spec, points=hints)
    variance = integrate_semi_infinite(second, spec, points=hints) - mean * mean
    if variance < 0:
        warnings.warn(NegativeVariance(f"rate variance {variance:.3g} < 0 for gamma_bar={gamma_bar:.4g}"))
        if not clamp:
            raise DegenerateStd(f"rate variance evaluated to {variance:.3g}")
        variance = 0.0
    return mean, math.sqrt(variance)


def gaussian_rate_from_moments(moments: Sequence[Tuple[float, float]], j: int, symbol_rate: float,
                               spec: QuadratureSpec = DEFAULT_SPEC) -> float:
    """
    (R S / T_TTI) int_0^inf (y s_j + m_j) phi(y) prod_{i != j} Phi(m_i s_j / (m_j s_i) y) dy
    """
    if not 0 <= j < len(moments):
        raise DomainError(f"terminal index {j} out of range for {len(moments)} terminals")
    means = np.array([m for m, _ in moments], dtype=float)
    stds = np.array([s for _, s in moments], dtype=float)
    if np.any(stds <= 0):
        bad = int(np.flatnonzero(stds <= 0)[0])
        raise DegenerateStd(f"Gaussian model needs every rate std > 0, terminal {bad} has {stds[bad]}",
                            terminal=bad)
    if means[j] <= 0:
        raise DegenerateStd(f"Gaussian model needs a positive mean rate, terminal {j} has {means[j]}",
                            terminal=j)
    slopes = np.delete(means * stds[j] / (means[j] * stds), j)

    def integrand(y):
        y = np.asarray(y, dtype=float)
        log_rivals = np.zeros_like(y)
        for slope in slopes:
            log_rivals = log_rivals + norm.logcdf(slope * y)
        return (y * stds[j] + means[j]) / SQRT_2PI * np.exp(-0.5 * y * y + log_rivals)

    return symbol_rate * integrate_semi_infinite(integrand, spec)


def gaussian_pfs_rate(links: Sequence[LinkStats], j: int, eff: SpectralEfficiency, symbol_rate: float,
                      spec: QuadratureSpec = DEFAULT_SPEC) -> float:
    """Gaussian-model rate of terminal j on one RB, bit/s; links are every terminal's on that RB"""
    moments = [gaussian_rate_moments(link, eff, spec) for link in links]
    return gaussian_rate_from_moments(moments, j, symbol_rate, spec)


def ian_pdf(link: LinkStats, x):
    """lambda exp(-lambda x), lambda = (Pi + eta) / Ps"""
    return ExponentialSinrDist(link).pdf(x)


def naive_rate(links: Sequence[LinkStats], j: int, n_terminals: int, eff: SpectralEfficiency,
               symbol_rate: float) -> float:
    """
    sum_n (R S)/(J T_TTI) C(Ps/(Pi+eta)); links are terminal j's over the RBs.
    The index j only labels the row.
    """
    if n_terminals < 1:
        raise DomainError(f"need at least one terminal, got {n_terminals}")
    gamma_bar = np.array([link.mean_power_sinr for link in links])
    return float(symbol_rate / n_terminals * np.sum(eff.efficiency(gamma_bar)))


def gaussian_rates(table: LinkTable, eff: SpectralEfficiency, symbol_rate: float,
                   spec: QuadratureSpec = DEFAULT_SPEC) -> np.ndarray:
    classes, representatives = table.rb_classes()
    per_class: List[np.ndarray] = []
    for rep in representatives:
        column = table.rb_column(rep)
        moments = [gaussian_rate_moments(link, eff, spec, clamp=True) for link in column]
        rates = []
        for j in range(table.n_terminals):
            try:
                rates.append(gaussian_rate_from_moments(moments, j, symbol_rate, spec))
            except NumericalError as e:
                raise e.locate(terminal=j, rb=rep)
        per_class.append(np.asarray(rates))
    return np.sum([per_class[c] for c in classes], axis=0)


def ian_rates(table: LinkTable, eff: SpectralEfficiency, symbol_rate: float,
              spec: QuadratureSpec = DEFAULT_SPEC, n_jobs: int = 1) -> np.ndarray:
    model = ScheduledSinrModel(table, eff, symbol_rate, law=IAN_LAW, mode=PFS, spec=spec)
    return model.total_rates(n_jobs)


def naive_rates(table: LinkTable, eff: SpectralEfficiency, symbol_rate: float) -> np.ndarray:
    J = table.n_terminals
    return np.array([naive_rate(table.terminal_row(j), j, J, eff, symbol_rate) for j in range(J)])


def reference_rates(kind: ReferenceModelKind, table: LinkTable, eff: SpectralEfficiency, symbol_rate: float,
                    spec: QuadratureSpec = DEFAULT_SPEC, n_jobs: int = 1) -> np.ndarray:
    """Per-terminal rates of one reference model, bit/s"""
    kind = ReferenceModelKind(kind)
    logger.debug("Evaluating %s reference model", kind.value)
    if kind is ReferenceModelKind.GAUSSIAN:
        return gaussian_rates(table, eff, symbol_rate, spec)
    if kind is ReferenceModelKind.IAN:
        return ian_rates(table, eff, symbol_rate, spec, n_jobs)
    return naive_rates(table, eff, symbol_rate)


__all__ = [
    "ReferenceModelKind", "gaussian_rate_moments", "gaussian_rate_from_moments", "gaussian_pfs_rate",
    "ian_pdf", "naive_rate", "gaussian_rates", "ian_rates", "naive_rates", "reference_rates",
]
