"""
pfs_model/pfs_analytic.py
-------------------------
Scheduled-SINR model of the proportional fair scheduler with W -> infinity.

Terminal j wins RB n when its scaled SINR X_j / E[X_j] beats every rival's. Treating
the scaled SINRs as independent across terminals:

    P(M_j = 1)        = int f_j(x) prod_{i != j} F_i(E[X_i] x / E[X_j]) dx
    f_{X_j | M_j = 1} = f_j(x) prod_{i != j} F_i(E[X_i] x / E[X_j]) / P(M_j = 1)

and the expected rate on the RB is (R S / T_TTI) int C(x) f_j(x) prod(...) dx.
Setting every mean to 1 gives the opportunistic (max-SINR) scheduler.

Products of CDFs are accumulated as sums of log-CDFs.
"""
import logging
from collections import namedtuple
from functools import cached_property
from typing import Callable, Dict, List, Optional, Sequence, Tuple

import numpy as np
from joblib import Parallel, delayed
from scipy.interpolate import PchipInterpolator

from channel_model.mcs import SpectralEfficiency
from channel_model.scenario import LinkTable, Scenario, build_link_stats
from channel_model.sinr_dist import ExponentialSinrDist, SinrDist, SinrLaw
from utils.errors import DomainError, NumericalError, SchedulingProbabilityUnderflow
from utils.numerics import DEFAULT_SPEC, QuadratureSpec, cumulative_on_grid, integrate_semi_infinite

logger = logging.getLogger(__name__)

# Scheduler modes
PFS = "pfs"
OPPORTUNISTIC = "opportunistic"
MODES = (PFS, OPPORTUNISTIC)

# Per-link SINR laws
EXACT_LAW = "exact"
IAN_LAW = "ian"
LAWS = {EXACT_LAW: SinrDist, IAN_LAW: ExponentialSinrDist}

# Configuration constants
RATE_SHORT_CIRCUIT = 1e-12       # P(M=1) below this contributes no rate
PROBABILITY_TOLERANCE = 1e-6     # quadrature slack tolerated outside [0, 1]
CDF_GRID_POINTS = 2000
CDF_GRID_LOW = 1e-9              # times the mean-power SINR
CDF_GRID_HIGH = 40.0             # times Ps / eta

OpportunisticResult = namedtuple("OpportunisticResult", ["probability", "density"])


def _ranking_means(links: Sequence[SinrLaw], mode: str) -> List[float]:
    if mode not in MODES:
        raise DomainError(f"unknown scheduler mode '{mode}', expected one of {MODES}")
    if mode == OPPORTUNISTIC:
        return [1.0] * len(links)
    return [d.mean for d in links]


class ScheduledSinr:
    """
    SINR law of terminal j on one RB, conditioned on j being scheduled there.
    The scheduling probability, the tabulated CDF and the expected SINR are computed
    lazily and cached.
    """

    def __init__(self, links: Sequence[SinrLaw], j: int, mode: str = PFS,
                 spec: QuadratureSpec = DEFAULT_SPEC):
        if not links:
            raise DomainError("at least one terminal is required")
        if not 0 <= j < len(links):
            raise DomainError(f"terminal index {j} out of range for {len(links)} terminals")
        self.links = list(links)
        self.j = j
        self.mode = mode
        self.spec = spec
        self.means = _ranking_means(self.links, mode)

    @property
    def law(self) -> SinrLaw:
        return self.links[self.j]

    @property
    def natural_scale(self) -> float:
        return self.law.natural_scale

    def _log_rivals(self, x: np.ndarray) -> np.ndarray:
        """sum over i != j of log F_i(E[X_i] x / E[X_j])"""
        total = np.zeros_like(x)
        m_j = self.means[self.j]
        for i, d in enumerate(self.links):
            if i != self.j:
                total = total + np.asarray(d.log_cdf(self.means[i] / m_j * x))
        return total

    def joint_density(self, x):
        """f_j(x) times the probability that every rival ranks below it"""
        arr = np.asarray(x, dtype=float)
        flat = np.atleast_1d(arr)
        with np.errstate(under="ignore"):
            values = np.asarray(self.law.pdf(flat)) * np.exp(self._log_rivals(flat))
        return float(values[0]) if arr.ndim == 0 else values.reshape(arr.shape)

    def integrate(self, weight: Optional[Callable] = None, points: Sequence[float] = ()) -> float:
        """int weight(x) joint_density(x) dx, integrated in units of the mean-power SINR"""
        s = self.natural_scale

        def g(y):
            x = s * y
            values = self.joint_density(x) * s
            if weight is not None:
                values = values * np.asarray(weight(x), dtype=float)
            return values

        hints = [1.0, self.law.tail_scale / s] + [p / s for p in points]
        return integrate_semi_infinite(g, self.spec, points=hints)

    @cached_property
    def probability(self) -> float:
        """P(M_j = 1)"""
        if len(self.links) == 1:
            return 1.0
        value = self.integrate()
        if value < -PROBABILITY_TOLERANCE or value > 1.0 + PROBABILITY_TOLERANCE:
            raise NumericalError(f"scheduling probability {value!r} is outside [0, 1]", terminal=self.j)
        if not 0.0 <= value <= 1.0:
            logger.warning("Scheduling probability %.12g of terminal %d clipped to [0, 1]", value, self.j)
        return min(max(value, 0.0), 1.0)

    def _require_probability(self) -> float:
        p = self.probability
        if not p > 0:
            raise SchedulingProbabilityUnderflow(
                f"scheduling probability underflowed to {p!r}; the conditional density is undefined",
                terminal=self.j)
        return p

    def pdf(self, x):
        """f_{X_j | M_j = 1}(x)"""
        arr = np.asarray(x, dtype=float)
        if np.any(arr < 0):
            raise DomainError("SINR argument must be >= 0")
        p = self._require_probability()
        values = np.asarray(self.joint_density(arr)) / p
        return float(values) if arr.ndim == 0 else values

    @cached_property
    def _cdf_table(self) -> Tuple[float, PchipInterpolator]:
        self._require_probability()
        s = self.natural_scale
        hi = max(CDF_GRID_HIGH * self.law.tail_scale, 1e3 * s)
        grid = np.concatenate([[0.0], np.geomspace(CDF_GRID_LOW * s, hi, CDF_GRID_POINTS)])
        cumulative = cumulative_on_grid(self.joint_density, grid)
        total = cumulative[-1]
        if not total > 0:
            raise SchedulingProbabilityUnderflow("tabulated scheduled-SINR mass is zero", terminal=self.j)
        gap = abs(total - self.probability) / self.probability
        if gap > 1e-4:
            logger.warning("Tabulated scheduled-SINR mass %.6g differs from P(M=1)=%.6g (terminal %d)",
                           total, self.probability, self.j)
        values = np.clip(np.maximum.accumulate(cumulative / total), 0.0, 1.0)
        return hi, PchipInterpolator(grid, values)

    def cdf(self, x):
        """F_{X_j | M_j = 1}(x), from a monotone interpolant of the tabulated integral"""
        arr = np.asarray(x, dtype=float)
        if np.any(arr < 0):
            raise DomainError("SINR argument must be >= 0")
        hi, interpolant = self._cdf_table
        values = np.where(arr >= hi, 1.0, interpolant(np.minimum(arr, hi)))
        values = np.clip(values, 0.0, 1.0)
        return float(values) if arr.ndim == 0 else values

    def ccdf(self, x):
        return 1.0 - np.asarray(self.cdf(x))

    def expected_efficiency(self, eff: SpectralEfficiency) -> float:
        """P(M=1) E[C(X) | M=1]; zero below the short-circuit threshold"""
        p = self.probability
        if p < RATE_SHORT_CIRCUIT:
            logger.warning("P(M=1)=%.3g for terminal %d is below %.0e; rate contribution dropped",
                           p, self.j, RATE_SHORT_CIRCUIT)
            return 0.0
        if eff.is_constant:
            return p * eff.value
        return self.integrate(eff.efficiency, eff.breakpoints)

    @cached_property
    def expected_sinr(self) -> float:
        """E[X_j | M_j = 1]"""
        p = self._require_probability()
        return self.integrate(lambda x: x) / p


# Operations on the terminals sharing one RB

def scheduling_probability(links: Sequence[SinrLaw], j: int, mode: str = PFS,
                           spec: QuadratureSpec = DEFAULT_SPEC) -> float:
    return ScheduledSinr(links, j, mode, spec).probability


def scheduled_sinr_pdf(links: Sequence[SinrLaw], j: int, x, mode: str = PFS,
                       spec: QuadratureSpec = DEFAULT_SPEC):
    return ScheduledSinr(links, j, mode, spec).pdf(x)


def scheduled_sinr_cdf(links: Sequence[SinrLaw], j: int, x, mode: str = PFS,
                       spec: QuadratureSpec = DEFAULT_SPEC):
    return ScheduledSinr(links, j, mode, spec).cdf(x)


def expected_rate_per_rb(links: Sequence[SinrLaw], j: int, eff: SpectralEfficiency, symbol_rate: float,
                         mode: str = PFS, spec: QuadratureSpec = DEFAULT_SPEC) -> float:
    """(R S / T_TTI) P(M=1) int C(x) f_{X|M=1}(x) dx in bit/s; symbol_rate is R S / T_TTI"""
    return symbol_rate * ScheduledSinr(links, j, mode, spec).expected_efficiency(eff)


def expected_scheduled_sinr(links: Sequence[SinrLaw], j: int, mode: str = PFS,
                            spec: QuadratureSpec = DEFAULT_SPEC) -> float:
    return ScheduledSinr(links, j, mode, spec).expected_sinr


def opportunistic_mode(links: Sequence[SinrLaw], j: int, x=None,
                       spec: QuadratureSpec = DEFAULT_SPEC) -> OpportunisticResult:
    """Scheduling probability and, when x is given, scheduled density of the max-SINR scheduler"""
    scheduled = ScheduledSinr(links, j, OPPORTUNISTIC, spec)
    density = None if x is None else scheduled.pdf(x)
    return OpportunisticResult(scheduled.probability, density)


class ScheduledSinrModel:
    """
    Scheduling probabilities and scheduled-SINR laws for every (terminal, RB) of a
    LinkTable. RBs whose whole link column is identical share one computation.
    """

    def __init__(self, table: LinkTable, efficiency: Optional[SpectralEfficiency] = None,
                 symbol_rate: float = 84e3, law: str = EXACT_LAW, mode: str = PFS,
                 spec: QuadratureSpec = DEFAULT_SPEC):
        if law not in LAWS:
            raise DomainError(f"unknown SINR law '{law}', expected one of {tuple(LAWS)}")
        if mode not in MODES:
            raise DomainError(f"unknown scheduler mode '{mode}', expected one of {MODES}")
        self.table = table
        self.efficiency = efficiency or SpectralEfficiency.truncated_shannon()
        self.symbol_rate = float(symbol_rate)
        self.law = law
        self.mode = mode
        self.spec = spec
        self.class_of_rb, self.representatives = table.rb_classes()
        self._columns: Dict[int, List[SinrLaw]] = {}
        self._conditionals: Dict[Tuple[int, int], ScheduledSinr] = {}
        logger.debug("ScheduledSinrModel: %d terminals, %d RBs in %d classes (%s, %s)",
                     self.n_terminals, self.n_rbs, len(self.representatives), law, mode)

    @classmethod
    def from_scenario(cls, s: Scenario, law: str = EXACT_LAW, mode: str = PFS,
                      spec: QuadratureSpec = DEFAULT_SPEC) -> "ScheduledSinrModel":
        return cls(build_link_stats(s), s.efficiency, s.symbol_rate_per_rb, law, mode, spec)

    @property
    def n_terminals(self) -> int:
        return self.table.n_terminals

    @property
    def n_rbs(self) -> int:
        return self.table.n_rbs

    def links(self, n: int) -> List[SinrLaw]:
        """Per-terminal SINR laws on RB n"""
        c = self.class_of_rb[n]
        if c not in self._columns:
            factory = LAWS[self.law]
            rep = self.representatives[c]
            self._columns[c] = [factory(link, self.spec) for link in self.table.rb_column(rep)]
        return self._columns[c]

    def conditional(self, j: int, n: int) -> ScheduledSinr:
        key = (j, self.class_of_rb[n])
        if key not in self._conditionals:
            self._conditionals[key] = ScheduledSinr(self.links(n), j, self.mode, self.spec)
        return self._conditionals[key]

    def _located(self, j: int, n: int, fn: Callable):
        try:
            return fn(self.conditional(j, n))
        except NumericalError as e:
            raise e.locate(terminal=j, rb=n)

    def sched_prob(self, j: int, n: int) -> float:
        return self._located(j, n, lambda c: c.probability)

    def cond_pdf(self, j: int, n: int) -> Callable:
        return lambda x: self._located(j, n, lambda c: c.pdf(x))

    def cond_cdf(self, j: int, n: int) -> Callable:
        return lambda x: self._located(j, n, lambda c: c.cdf(x))

    def expected_scheduled_sinr(self, j: int, n: int) -> float:
        return self._located(j, n, lambda c: c.expected_sinr)

    def rate_per_rb(self, j: int, n: int) -> float:
        return self.symbol_rate * self._located(j, n, lambda c: c.expected_efficiency(self.efficiency))

    def total_rate(self, j: int) -> float:
        """Sum over RBs of the expected per-RB rate, bit/s"""
        per_class: Dict[int, float] = {}
        total = 0.0
        for n in range(self.n_rbs):
            c = self.class_of_rb[n]
            if c not in per_class:
                per_class[c] = self.rate_per_rb(j, n)
            total += per_class[c]
        return total

    def probabilities(self, n_jobs: int = 1) -> np.ndarray:
        """(J, N) array of P(M_{j,n} = 1)"""
        J, N = self.n_terminals, self.n_rbs
        cells = [(j, self.representatives[c]) for c in range(len(self.representatives)) for j in range(J)]
        values = Parallel(n_jobs=n_jobs, prefer="threads")(
            delayed(self.sched_prob)(j, n) for j, n in cells)
        per_class = {(j, self.class_of_rb[n]): v for (j, n), v in zip(cells, values)}
        out = np.empty((J, N))
        for j in range(J):
            for n in range(N):
                out[j, n] = per_class[(j, self.class_of_rb[n])]
        return out

    def total_rates(self, n_jobs: int = 1) -> np.ndarray:
        """Expected rate of every terminal, bit/s"""
        values = Parallel(n_jobs=n_jobs, prefer="threads")(
            delayed(self.total_rate)(j) for j in range(self.n_terminals))
        return np.asarray(values, dtype=float)

    def check_conservation(self, tol: float = 1e-4) -> float:
        """Largest deviation of sum_j P(M_{j,n}=1) from 1 over all RBs"""
        sums = self.probabilities().sum(axis=0)
        worst = float(np.max(np.abs(sums - 1.0)))
        if worst > tol:
            logger.warning("Scheduling probabilities sum to 1 only within %.3g", worst)
        return worst


def total_rate(model: ScheduledSinrModel, j: int) -> float:
    return model.total_rate(j)


__all__ = [
    "PFS", "OPPORTUNISTIC", "EXACT_LAW", "IAN_LAW", "RATE_SHORT_CIRCUIT",
    "ScheduledSinr", "ScheduledSinrModel", "OpportunisticResult",
    "scheduling_probability", "scheduled_sinr_pdf", "scheduled_sinr_cdf",
    "expected_rate_per_rb", "expected_scheduled_sinr", "opportunistic_mode", "total_rate",
]
