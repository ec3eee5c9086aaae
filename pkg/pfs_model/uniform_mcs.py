"""
pfs_model/uniform_mcs.py
------------------------
Expected rate when every RB granted to a terminal in a TTI carries one MCS, chosen
from the worst SINR among them.

For an assignment A (the set of RBs the terminal wins), with RBs independent:

    P_A          = prod_{n in A} p_n prod_{n not in A} (1 - p_n)
    F_min(x)     = 1 - prod_{n in A} (1 - F_n(x))
    f_min(x)     = sum_{n in A} f_n(x) prod_{m in A, m != n} (1 - F_m(x))
    rate(A)      = P_A |A| (R S / T_TTI) int C(x) f_min(x) dx

where p_n, f_n and F_n are the scheduling probability and the scheduled-SINR law on
RB n. The total sums rate(A) over nonempty A, exactly for N <= 16 or by sampling
assignments otherwise.
"""
import itertools
import logging
from collections import namedtuple
from dataclasses import dataclass
from typing import Dict, Iterable, List, Optional, Sequence, Tuple, Union

import numpy as np
from joblib import Parallel, delayed

from channel_model.mcs import SpectralEfficiency
from pfs_model.pfs_analytic import ScheduledSinr, ScheduledSinrModel
from utils.errors import DomainError, EmptySubset, EnumerationTooLarge, NumericalError
from utils.numerics import QuadratureSpec, integrate_semi_infinite

logger = logging.getLogger(__name__)

# Configuration constants
MAX_EXACT_RBS = 16
DRAW_BLOCK = 10_000                  # assignments per independent random stream
DEFAULT_MC_SAMPLES = 100_000
MIN_ORDER_SPEC = QuadratureSpec(rel_tol=1e-7, abs_tol=1e-12, max_subdivisions=4000)

UniformRateEstimate = namedtuple("UniformRateEstimate", ["rate", "stderr", "draws"])


@dataclass(frozen=True)
class ExactEnumeration:
    """Sum over all 2^N - 1 nonempty assignments"""


@dataclass(frozen=True)
class MonteCarloAssignments:
    """Average over assignments drawn as independent Bernoulli(p_n) per RB"""
    samples: int = DEFAULT_MC_SAMPLES
    seed: int = 0

    def __post_init__(self):
        if int(self.samples) < 1:
            raise DomainError(f"samples must be >= 1, got {self.samples}")


Strategy = Union[ExactEnumeration, MonteCarloAssignments]


class AssignmentDist:
    """Distribution of the RB set a terminal wins in one TTI"""

    def __init__(self, probabilities: Sequence[float], strategy: Optional[Strategy] = None):
        p = np.asarray(probabilities, dtype=float)
        if p.ndim != 1 or p.size < 1:
            raise DomainError("need one scheduling probability per RB")
        if np.any(p < 0) or np.any(p > 1):
            raise DomainError("scheduling probabilities must lie in [0, 1]")
        self.p = p
        self.strategy = strategy if strategy is not None else self.default_strategy(p.size)

    @staticmethod
    def default_strategy(n_rbs: int) -> Strategy:
        if n_rbs <= MAX_EXACT_RBS:
            return ExactEnumeration()
        return MonteCarloAssignments()

    @property
    def n_rbs(self) -> int:
        return self.p.size

    def assignment_probability(self, subset: Iterable[int]) -> float:
        mask = np.zeros(self.n_rbs, dtype=bool)
        mask[list(subset)] = True
        return float(np.prod(np.where(mask, self.p, 1.0 - self.p)))

    def subsets(self, include_empty: bool = False) -> Iterable[Tuple[int, ...]]:
        if self.n_rbs > MAX_EXACT_RBS:
            raise EnumerationTooLarge(f"exact enumeration is limited to {MAX_EXACT_RBS} RBs, got {self.n_rbs}")
        start = 0 if include_empty else 1
        for size in range(start, self.n_rbs + 1):
            yield from itertools.combinations(range(self.n_rbs), size)

    def draw(self, rng: np.random.Generator, size: int) -> np.ndarray:
        """(size, N) boolean assignment masks"""
        return rng.random((size, self.n_rbs)) < self.p[None, :]


def assignment_probability(a: AssignmentDist, subset: Iterable[int]) -> float:
    return a.assignment_probability(subset)


def _require_subset(conds: Sequence[ScheduledSinr], subset: Sequence[int]) -> List[ScheduledSinr]:
    subset = list(subset)
    if not subset:
        raise EmptySubset("minimum order statistics need a nonempty RB subset")
    return [conds[n] for n in subset]


def min_order_cdf(conds: Sequence[ScheduledSinr], subset: Sequence[int], x):
    """1 - prod_{n in A} (1 - F_n(x))"""
    chosen = _require_subset(conds, subset)
    arr = np.asarray(x, dtype=float)
    with np.errstate(divide="ignore"):
        log_survival = sum(np.log1p(-np.asarray(c.cdf(arr))) for c in chosen)
    values = -np.expm1(log_survival)
    return float(values) if arr.ndim == 0 else values


def min_order_pdf(conds: Sequence[ScheduledSinr], subset: Sequence[int], x):
    """sum_{n in A} f_n(x) prod_{m in A, m != n} (1 - F_m(x))"""
    chosen = _require_subset(conds, subset)
    arr = np.asarray(x, dtype=float)
    survival = [np.asarray(c.ccdf(arr)) for c in chosen]
    total = np.zeros(arr.shape)
    for k, c in enumerate(chosen):
        term = np.asarray(c.pdf(arr), dtype=float)
        for m, surv in enumerate(survival):
            if m != k:
                term = term * surv
        total = total + term
    return float(total) if arr.ndim == 0 else total


def expected_min_efficiency(conds: Sequence[ScheduledSinr], subset: Sequence[int],
                            eff: SpectralEfficiency, spec: QuadratureSpec = MIN_ORDER_SPEC) -> float:
    """E[C(min_{n in A} X_n)] under the scheduled-SINR laws"""
    chosen = _require_subset(conds, subset)
    if eff.is_constant:
        return eff.value
    s = min(c.natural_scale for c in chosen)

    def g(y):
        x = s * y
        return s * np.asarray(min_order_pdf(conds, subset, x)) * np.asarray(eff.efficiency(x))

    hints = [1.0] + [c.law.tail_scale / s for c in chosen] + [p / s for p in eff.breakpoints]
    return integrate_semi_infinite(g, spec, points=hints)


def rate_for_assignment(conds: Sequence[ScheduledSinr], subset: Sequence[int], eff: SpectralEfficiency,
                        symbol_rate: float, probability: float,
                        spec: QuadratureSpec = MIN_ORDER_SPEC) -> float:
    """P_A |A| (R S / T_TTI) int C(x) f_min(x) dx in bit/s"""
    subset = list(subset)
    return probability * len(subset) * symbol_rate * expected_min_efficiency(conds, subset, eff, spec)


class _MinOrderCache:
    """E[C(min)] keyed by the multiset of RB classes in the assignment"""

    def __init__(self, conds: Sequence[ScheduledSinr], class_of_rb: Sequence[int],
                 eff: SpectralEfficiency, spec: QuadratureSpec):
        self.conds = conds
        self.class_of_rb = list(class_of_rb)
        self.eff = eff
        self.spec = spec
        self._values: Dict[Tuple[int, ...], float] = {}

    def __call__(self, subset: Sequence[int]) -> float:
        key = tuple(sorted(self.class_of_rb[n] for n in subset))
        if key not in self._values:
            self._values[key] = expected_min_efficiency(self.conds, subset, self.eff, self.spec)
        return self._values[key]

    def __len__(self):
        return len(self._values)


def _sample_block(a: AssignmentDist, cache: _MinOrderCache, seed: int, block: int, size: int) -> np.ndarray:
    """Per-draw values |A| E[C(min_A)] for one block of assignments"""
    rng = np.random.default_rng(np.random.SeedSequence([seed, block]))
    masks = a.draw(rng, size)
    values = np.zeros(size)
    for k, mask in enumerate(masks):
        subset = np.flatnonzero(mask)
        if subset.size:
            values[k] = subset.size * cache(subset.tolist())
    return values


def estimate_uniform_rate(a: AssignmentDist, conds: Sequence[ScheduledSinr], eff: SpectralEfficiency,
                          symbol_rate: float, class_of_rb: Optional[Sequence[int]] = None,
                          spec: QuadratureSpec = MIN_ORDER_SPEC, n_jobs: int = 1) -> UniformRateEstimate:
    """Uniform-MCS rate with its standard error (0 for exact enumeration)"""
    if len(conds) != a.n_rbs:
        raise DomainError(f"{len(conds)} scheduled-SINR laws for {a.n_rbs} RBs")
    classes = class_of_rb if class_of_rb is not None else list(range(a.n_rbs))
    cache = _MinOrderCache(conds, classes, eff, spec)

    if isinstance(a.strategy, ExactEnumeration):
        total = 0.0
        for subset in a.subsets():
            p_subset = a.assignment_probability(subset)
            if p_subset == 0.0:
                continue
            total += p_subset * len(subset) * cache(subset)
        logger.debug("Exact uniform-MCS sum over %d RBs used %d distinct integrals", a.n_rbs, len(cache))
        return UniformRateEstimate(symbol_rate * total, 0.0, 0)

    samples = int(a.strategy.samples)
    sizes = [DRAW_BLOCK] * (samples // DRAW_BLOCK)
    if samples % DRAW_BLOCK:
        sizes.append(samples % DRAW_BLOCK)
    blocks = Parallel(n_jobs=n_jobs, prefer="threads")(
        delayed(_sample_block)(a, cache, a.strategy.seed, b, size) for b, size in enumerate(sizes))
    values = np.concatenate(blocks) * symbol_rate
    stderr = float(values.std(ddof=1) / np.sqrt(values.size)) if values.size > 1 else float("nan")
    logger.debug("Monte-Carlo uniform-MCS estimate from %d draws, %d distinct integrals", values.size, len(cache))
    return UniformRateEstimate(float(values.mean()), stderr, int(values.size))


def total_rate_uniform(a: AssignmentDist, conds: Sequence[ScheduledSinr], eff: SpectralEfficiency,
                       symbol_rate: float, class_of_rb: Optional[Sequence[int]] = None,
                       spec: QuadratureSpec = MIN_ORDER_SPEC, n_jobs: int = 1) -> float:
    """Sum over nonempty assignments of rate(A), bit/s"""
    return estimate_uniform_rate(a, conds, eff, symbol_rate, class_of_rb, spec, n_jobs).rate


def uniform_rates(model: ScheduledSinrModel, strategy: Optional[Strategy] = None,
                  spec: QuadratureSpec = MIN_ORDER_SPEC, n_jobs: int = 1) -> np.ndarray:
    """Uniform-MCS rate of every terminal of a scheduled-SINR model, bit/s"""
    rates = np.empty(model.n_terminals)
    for j in range(model.n_terminals):
        conds = [model.conditional(j, n) for n in range(model.n_rbs)]
        a = AssignmentDist([model.sched_prob(j, n) for n in range(model.n_rbs)], strategy)
        try:
            rates[j] = total_rate_uniform(a, conds, model.efficiency, model.symbol_rate,
                                          model.class_of_rb, spec, n_jobs)
        except NumericalError as e:
            raise e.locate(terminal=j)
        logger.debug("Uniform-MCS rate of terminal %d: %.6g bit/s", j, rates[j])
    return rates


__all__ = [
    "ExactEnumeration", "MonteCarloAssignments", "AssignmentDist", "UniformRateEstimate",
    "assignment_probability", "min_order_cdf", "min_order_pdf", "rate_for_assignment",
    "total_rate_uniform", "estimate_uniform_rate", "uniform_rates",
]
