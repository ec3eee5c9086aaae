"""
simulation/simulator.py
-----------------------
TTI-level Monte-Carlo simulator of the OFDMA down-link: one serving cell, one dominant
interferer, full-buffer terminals.

Per TTI:
1. draw fading and form SINRs  gamma = Ps gs / (Pi gi + eta)
2. push them into the per-(terminal, RB) SINR window (mean of the last min(t+1, W) samples)
3. give every RB to the argmax of
     sinr_pfs:      gamma / window mean
     rate_pfs:      R S C_q(reported gamma) / max(served bits over W / W, R S c_min)
     opportunistic: gamma
   ties go to the lowest terminal index
4. pick the MCS per RB, or per terminal from its worst RB (uniform_worst_rb)
5. deliver R S C bits per RB and update the served-bits window

The first W TTIs are warm-up and excluded from the statistics.
"""
import logging
import math
from collections import deque
from dataclasses import dataclass, field, replace
from typing import List, Optional, Sequence, Union

import numpy as np
import pandas as pd
from joblib import Parallel, delayed
from scipy import stats
from tqdm import tqdm

from channel_model.mcs import SpectralEfficiency, linear_to_db
from channel_model.scenario import UNIFORM_WORST_RB, Scenario, build_link_stats
from simulation.fading import FadingProcess
from utils.errors import ConfigError, InsufficientSamples

logger = logging.getLogger(__name__)

SINR_PFS = "sinr_pfs"
RATE_PFS = "rate_pfs"
OPPORTUNISTIC = "opportunistic"
SCHEDULERS = (SINR_PFS, RATE_PFS, OPPORTUNISTIC)

RATE_WINDOW_TERMINAL = "terminal"
RATE_WINDOW_RB = "rb"
RATE_WINDOWS = (RATE_WINDOW_TERMINAL, RATE_WINDOW_RB)

# Configuration constants
MIN_HISTOGRAM_SAMPLES = 100
DEFAULT_TTIS = 5000
DEFAULT_SEEDS = 30
TRACE_COLUMNS = ["tti", "rb", "terminal", "sinr_db", "efficiency_bits_per_symbol", "bits"]
AGGREGATE_COLUMNS = ["terminal", "mean_rate_bps", "ci95_halfwidth_bps", "scheduled_share"]

Seed = Union[int, np.random.SeedSequence]


@dataclass(frozen=True)
class SimulationSettings:
    """Everything a simulation run needs beyond the Scenario"""
    scheduler: str = SINR_PFS
    ttis: int = DEFAULT_TTIS
    seeds: int = DEFAULT_SEEDS
    master_seed: int = 20140101
    fading: FadingProcess = field(default_factory=FadingProcess)
    rate_window: str = RATE_WINDOW_TERMINAL
    feedback: SpectralEfficiency = field(default_factory=SpectralEfficiency.lte_cqi)
    feedback_delay: int = 0

    def __post_init__(self):
        if self.scheduler not in SCHEDULERS:
            raise ConfigError(f"must be one of {SCHEDULERS}, got '{self.scheduler}'", key="simulation.scheduler")
        if self.rate_window not in RATE_WINDOWS:
            raise ConfigError(f"must be one of {RATE_WINDOWS}, got '{self.rate_window}'",
                              key="simulation.rate_window")
        if int(self.seeds) < 1:
            raise ConfigError(f"must be >= 1, got {self.seeds}", key="simulation.seeds")
        if int(self.feedback_delay) < 0:
            raise ConfigError(f"must be >= 0, got {self.feedback_delay}", key="simulation.feedback_delay")

    def with_changes(self, **changes) -> "SimulationSettings":
        return replace(self, **{k: v for k, v in changes.items() if v is not None})


class SchedulerState:
    """
    Sliding windows of the last W samples: SINR per (terminal, RB) and served bits per
    terminal (or per terminal and RB), plus the queue of delayed SINR reports.
    """

    def __init__(self, n_terminals: int, n_rbs: int, window: int, rate_window: str = RATE_WINDOW_TERMINAL,
                 feedback_delay: int = 0):
        self.window = int(window)
        self.rate_window = rate_window
        self.t = 0
        self._sinr = np.zeros((self.window, n_terminals, n_rbs))
        self._sinr_sum = np.zeros((n_terminals, n_rbs))
        bits_shape = (n_terminals,) if rate_window == RATE_WINDOW_TERMINAL else (n_terminals, n_rbs)
        self._bits = np.zeros((self.window,) + bits_shape)
        self._bits_sum = np.zeros(bits_shape)
        self._reports = deque(maxlen=int(feedback_delay) + 1)

    @property
    def filled(self) -> int:
        return min(self.t, self.window)

    def push_sinr(self, gamma: np.ndarray):
        slot = self.t % self.window
        self._sinr_sum += gamma - self._sinr[slot]
        self._sinr[slot] = gamma
        self._reports.append(gamma)
        self.t += 1

    def sinr_average(self) -> np.ndarray:
        """Window mean including the current TTI"""
        return self._sinr_sum / self.filled

    def reported_sinr(self) -> np.ndarray:
        """SINR as reported feedback_delay TTIs ago (the oldest available at start-up)"""
        return self._reports[0]

    def served_average(self) -> np.ndarray:
        return self._bits_sum / self.window

    def push_bits(self, bits: np.ndarray):
        """Record this TTI's served bits; call after push_sinr for the same TTI"""
        slot = (self.t - 1) % self.window
        self._bits_sum += bits - self._bits[slot]
        self._bits[slot] = bits


@dataclass
class SimTrace:
    """
    Per-TTI record after warm-up. winners, sinr, efficiency and bits are (T, N): the
    terminal given each RB, its SINR, the efficiency used and the bits delivered.
    """
    n_terminals: int
    n_rbs: int
    tti_duration: float
    warmup: int
    ttis: int
    delivered_bits: np.ndarray
    scheduled_rbs: np.ndarray
    winners: Optional[np.ndarray] = None
    sinr: Optional[np.ndarray] = None
    efficiency: Optional[np.ndarray] = None
    bits: Optional[np.ndarray] = None

    @property
    def mean_rate(self) -> np.ndarray:
        """Delivered bit/s per terminal"""
        return self.delivered_bits / (self.ttis * self.tti_duration)

    @property
    def scheduled_share(self) -> np.ndarray:
        return self.scheduled_rbs / (self.ttis * self.n_rbs)

    @property
    def has_records(self) -> bool:
        return self.winners is not None

    def scheduled_sinr_samples(self, j: int, n: int) -> np.ndarray:
        if not self.has_records:
            raise InsufficientSamples("trace was recorded without per-TTI records")
        return self.sinr[self.winners[:, n] == j, n]

    def to_frame(self) -> pd.DataFrame:
        if not self.has_records:
            raise InsufficientSamples("trace was recorded without per-TTI records")
        T, N = self.winners.shape
        with np.errstate(divide="ignore"):
            sinr_db = linear_to_db(self.sinr)
        return pd.DataFrame({
            "tti": np.repeat(np.arange(self.warmup, self.warmup + T), N),
            "rb": np.tile(np.arange(N), T),
            "terminal": self.winners.ravel(),
            "sinr_db": sinr_db.ravel(),
            "efficiency_bits_per_symbol": self.efficiency.ravel(),
            "bits": self.bits.ravel(),
        }, columns=TRACE_COLUMNS)


def _select_efficiency(s: Scenario, winners: np.ndarray, gamma_won: np.ndarray, n_terminals: int) -> np.ndarray:
    if s.mcs_policy == UNIFORM_WORST_RB:
        worst = np.full(n_terminals, np.inf)
        np.minimum.at(worst, winners, gamma_won)
        return np.asarray(s.efficiency.efficiency(worst[winners]))
    return np.asarray(s.efficiency.efficiency(gamma_won))


def run(s: Scenario, f: FadingProcess, scheduler: str, ttis: int, seed: Seed,
        rate_window: str = RATE_WINDOW_TERMINAL, feedback: Optional[SpectralEfficiency] = None,
        feedback_delay: int = 0, keep_trace: bool = True) -> SimTrace:
    """
    One replication. Deterministic in all arguments; ttis counts warm-up TTIs, so it
    must exceed the PFS window.
    """
    if scheduler not in SCHEDULERS:
        raise ConfigError(f"must be one of {SCHEDULERS}, got '{scheduler}'", key="scheduler")
    if rate_window not in RATE_WINDOWS:
        raise ConfigError(f"must be one of {RATE_WINDOWS}, got '{rate_window}'", key="rate_window")
    W = int(s.pfs_window)
    if int(ttis) <= W:
        raise ConfigError(f"must exceed the PFS window W={W} (warm-up), got {ttis}", key="ttis")
    feedback = feedback or SpectralEfficiency.lte_cqi()

    table = build_link_stats(s)
    J, N = table.n_terminals, table.n_rbs
    rng = np.random.default_rng(seed)
    fading = f.generator(J, N, s.tti_duration, rng, s.rb_bandwidth_hz)
    state = SchedulerState(J, N, W, rate_window, feedback_delay)

    symbols = s.symbols_per_rb
    rb_index = np.arange(N)
    rate_floor = symbols * feedback.min_positive_efficiency
    measured = int(ttis) - W

    delivered = np.zeros(J)
    scheduled = np.zeros(J, dtype=np.int64)
    if keep_trace:
        winners_log = np.empty((measured, N), dtype=np.int64)
        sinr_log = np.empty((measured, N))
        eff_log = np.empty((measured, N))
        bits_log = np.empty((measured, N))

    for t in range(int(ttis)):
        gs, gi = fading.next()
        gamma = table.p_sig * gs / (table.p_intf * gi + table.noise)
        state.push_sinr(gamma)

        if scheduler == SINR_PFS:
            metric = gamma / state.sinr_average()
        elif scheduler == OPPORTUNISTIC:
            metric = gamma
        else:
            achievable = symbols * np.asarray(feedback.efficiency(state.reported_sinr()))
            served = np.maximum(state.served_average(), rate_floor)
            metric = achievable / (served[:, None] if served.ndim == 1 else served)

        winners = np.argmax(metric, axis=0)
        gamma_won = gamma[winners, rb_index]
        eff = _select_efficiency(s, winners, gamma_won, J)
        bits = symbols * eff

        if rate_window == RATE_WINDOW_TERMINAL:
            state.push_bits(np.bincount(winners, weights=bits, minlength=J))
        else:
            served_rb = np.zeros((J, N))
            served_rb[winners, rb_index] = bits
            state.push_bits(served_rb)

        if t >= W:
            delivered += np.bincount(winners, weights=bits, minlength=J)
            scheduled += np.bincount(winners, minlength=J)
            if keep_trace:
                k = t - W
                winners_log[k] = winners
                sinr_log[k] = gamma_won
                eff_log[k] = eff
                bits_log[k] = bits

    trace = SimTrace(J, N, s.tti_duration, W, measured, delivered, scheduled)
    if keep_trace:
        trace.winners, trace.sinr, trace.efficiency, trace.bits = winners_log, sinr_log, eff_log, bits_log
    return trace


def scheduled_sinr_histogram(trace: SimTrace, j: int, n: int, bins=50,
                             min_samples: int = MIN_HISTOGRAM_SAMPLES):
    """Normalized histogram (density, edges) of the SINR on TTIs where j holds RB n"""
    samples = trace.scheduled_sinr_samples(j, n)
    if samples.size < min_samples:
        raise InsufficientSamples(f"terminal {j} holds RB {n} on {samples.size} TTIs, need {min_samples}")
    return np.histogram(samples, bins=bins, density=True)


def replicate(s: Scenario, settings: SimulationSettings, n_jobs: int = 1, keep_trace: bool = False,
              progress: bool = False) -> List[SimTrace]:
    """settings.seeds independent replications, returned in seed order"""
    children = np.random.SeedSequence(int(settings.master_seed)).spawn(int(settings.seeds))
    logger.info("Simulating %d replications x %d TTIs (%s, %s fading)",
                settings.seeds, settings.ttis, settings.scheduler, settings.fading.mode)
    jobs = (delayed(run)(s, settings.fading, settings.scheduler, settings.ttis, child,
                         settings.rate_window, settings.feedback, settings.feedback_delay, keep_trace)
            for child in tqdm(children, desc="replications", disable=not progress))
    return Parallel(n_jobs=n_jobs, prefer="threads")(jobs)


def aggregate(traces: Sequence[SimTrace]) -> pd.DataFrame:
    """Per-terminal mean rate over replications with a 95% Student-t half-width"""
    if not traces:
        raise InsufficientSamples("no replications to aggregate")
    rates = np.stack([t.mean_rate for t in traces])
    shares = np.stack([t.scheduled_share for t in traces])
    n = rates.shape[0]
    if n > 1:
        half = stats.t.ppf(0.975, n - 1) * rates.std(axis=0, ddof=1) / math.sqrt(n)
    else:
        half = np.full(rates.shape[1], np.nan)
    return pd.DataFrame({
        "terminal": np.arange(rates.shape[1]),
        "mean_rate_bps": rates.mean(axis=0),
        "ci95_halfwidth_bps": half,
        "scheduled_share": shares.mean(axis=0),
    }, columns=AGGREGATE_COLUMNS)


__all__ = [
    "SINR_PFS", "RATE_PFS", "OPPORTUNISTIC", "SimulationSettings", "SchedulerState", "SimTrace",
    "run", "scheduled_sinr_histogram", "replicate", "aggregate",
]
