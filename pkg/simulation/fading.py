"""
simulation/fading.py
--------------------
Unit-mean Rayleigh power gains per (terminal, RB) for the wanted signal and the
dominant interferer.

Time behaviour:
- block_iid: a fresh complex Gaussian gain every TTI
- jakes: sum of sinusoids with random arrival angles and phases, autocorrelation
  J0(2 pi f_d tau)

Frequency behaviour:
- independent: one process per RB
- tapped_delay_line: one process per tap, mixed into RB n through exp(-j 2 pi f_n tau_l)
  with f_n = n * RB spacing
"""
import logging
import math
from dataclasses import dataclass
from typing import Dict, Optional, Sequence, Tuple

import numpy as np

from utils.errors import ConfigError

logger = logging.getLogger(__name__)

BLOCK_IID = "block_iid"
JAKES = "jakes"
FADING_MODES = (BLOCK_IID, JAKES)

INDEPENDENT_RBS = "independent"
TAPPED_DELAY_LINE = "tapped_delay_line"
FREQUENCY_MODES = (INDEPENDENT_RBS, TAPPED_DELAY_LINE)

# Configuration constants
DEFAULT_OSCILLATORS = 16
DEFAULT_DOPPLER_HZ = 5.5            # 3 km/h at 2 GHz
DEFAULT_RB_SPACING_HZ = 180e3


@dataclass(frozen=True)
class FadingProcess:
    mode: str = BLOCK_IID
    oscillators: int = DEFAULT_OSCILLATORS
    doppler_hz: float = DEFAULT_DOPPLER_HZ
    frequency_correlation: str = INDEPENDENT_RBS
    taps: Tuple[Tuple[float, float], ...] = ()       # (delay in s, power fraction)

    def __post_init__(self):
        if self.mode not in FADING_MODES:
            raise ConfigError(f"must be one of {FADING_MODES}, got '{self.mode}'", key="fading.mode")
        if self.frequency_correlation not in FREQUENCY_MODES:
            raise ConfigError(f"must be one of {FREQUENCY_MODES}, got '{self.frequency_correlation}'",
                              key="fading.frequency_correlation")
        if self.mode == JAKES:
            if int(self.oscillators) < 1:
                raise ConfigError(f"must be >= 1, got {self.oscillators}", key="fading.oscillators")
            if not self.doppler_hz >= 0:
                raise ConfigError(f"must be >= 0, got {self.doppler_hz}", key="fading.doppler_hz")
        if self.frequency_correlation == TAPPED_DELAY_LINE:
            if not self.taps:
                raise ConfigError("tapped delay line needs at least one tap", key="fading.taps")
            delays = np.array([d for d, _ in self.taps], dtype=float)
            powers = np.array([p for _, p in self.taps], dtype=float)
            if np.any(delays < 0) or np.any(powers < 0):
                raise ConfigError("tap delays and powers must be >= 0", key="fading.taps")
            if abs(powers.sum() - 1.0) > 1e-9:
                raise ConfigError(f"tap power fractions must sum to 1, got {powers.sum():.12g}",
                                  key="fading.taps")

    @property
    def n_sources(self) -> Optional[int]:
        """Independent processes per link, or None for one per RB"""
        return len(self.taps) if self.frequency_correlation == TAPPED_DELAY_LINE else None

    def mixing_matrix(self, n_rbs: int, rb_spacing_hz: float = DEFAULT_RB_SPACING_HZ) -> np.ndarray:
        """(L, N) complex weights sqrt(p_l) exp(-j 2 pi f_n tau_l)"""
        delays = np.array([d for d, _ in self.taps], dtype=float)
        powers = np.array([p for _, p in self.taps], dtype=float)
        freqs = np.arange(n_rbs) * rb_spacing_hz
        return np.sqrt(powers)[:, None] * np.exp(-2j * math.pi * delays[:, None] * freqs[None, :])

    def generator(self, n_terminals: int, n_rbs: int, tti_duration: float, rng: np.random.Generator,
                  rb_spacing_hz: float = DEFAULT_RB_SPACING_HZ) -> "FadingGenerator":
        return FadingGenerator(self, n_terminals, n_rbs, tti_duration, rng, rb_spacing_hz)

    def to_config(self) -> Dict:
        cfg = {"mode": self.mode, "frequency_correlation": self.frequency_correlation}
        if self.mode == JAKES:
            cfg.update(oscillators=int(self.oscillators), doppler_hz=float(self.doppler_hz))
        if self.frequency_correlation == TAPPED_DELAY_LINE:
            cfg.update(taps=[[float(d), float(p)] for d, p in self.taps])
        return cfg

    @classmethod
    def from_config(cls, cfg: Optional[Dict]) -> "FadingProcess":
        if cfg is None:
            return cls()
        if isinstance(cfg, str):
            cfg = {"mode": cfg}
        if not isinstance(cfg, dict):
            raise ConfigError("must be a mapping or a mode name", key="fading")
        try:
            taps = tuple((float(d), float(p)) for d, p in cfg.get("taps", []))
            return cls(
                mode=cfg.get("mode", BLOCK_IID),
                oscillators=int(cfg.get("oscillators", DEFAULT_OSCILLATORS)),
                doppler_hz=float(cfg.get("doppler_hz", DEFAULT_DOPPLER_HZ)),
                frequency_correlation=cfg.get("frequency_correlation", INDEPENDENT_RBS),
                taps=taps,
            )
        except (TypeError, ValueError) as e:
            raise ConfigError(f"malformed fading section ({e})", key="fading")


class FadingGenerator:
    """Stateful source of (signal, interferer) power gains, one (J, N) pair per TTI"""

    def __init__(self, process: FadingProcess, n_terminals: int, n_rbs: int, tti_duration: float,
                 rng: np.random.Generator, rb_spacing_hz: float = DEFAULT_RB_SPACING_HZ):
        self.process = process
        self.n_rbs = n_rbs
        self.tti_duration = tti_duration
        self.rng = rng
        self.t = 0
        k = process.n_sources or n_rbs
        # axis 0: signal, interferer
        self.shape = (2, n_terminals, k)
        self.mixing = process.mixing_matrix(n_rbs, rb_spacing_hz) if process.n_sources else None
        if process.mode == JAKES:
            m = int(process.oscillators)
            self._doppler = 2.0 * math.pi * process.doppler_hz * np.cos(
                rng.uniform(-math.pi, math.pi, self.shape + (m,)))
            self._phase = rng.uniform(-math.pi, math.pi, self.shape + (m,))
            self._norm = 1.0 / math.sqrt(m)

    def _complex_sources(self) -> np.ndarray:
        if self.process.mode == JAKES:
            t = self.t * self.tti_duration
            return self._norm * np.exp(1j * (self._doppler * t + self._phase)).sum(axis=-1)
        re = self.rng.standard_normal(self.shape)
        im = self.rng.standard_normal(self.shape)
        return (re + 1j * im) / math.sqrt(2.0)

    def next_complex(self) -> np.ndarray:
        """(2, J, N) complex channel coefficients of the current TTI; advances time"""
        h = self._complex_sources()
        if self.mixing is not None:
            h = h @ self.mixing
        self.t += 1
        return h

    def next(self) -> Tuple[np.ndarray, np.ndarray]:
        h = self.next_complex()
        power = h.real ** 2 + h.imag ** 2
        return power[0], power[1]

    def sample_complex(self, ttis: int) -> np.ndarray:
        """(ttis, 2, J, N) coefficients, for calibration checks"""
        return np.stack([self.next_complex() for _ in range(ttis)])


def jakes_autocorrelation(h_samples: np.ndarray, lags: Sequence[int]) -> np.ndarray:
    """Empirical normalized autocorrelation Re E[h(t) h*(t+lag)] / E|h|^2 over time and processes"""
    h = np.asarray(h_samples)
    power = np.mean(np.abs(h) ** 2)
    out = []
    for lag in lags:
        if lag == 0:
            out.append(1.0)
            continue
        out.append(float(np.real(np.mean(h[lag:] * np.conj(h[:-lag]))) / power))
    return np.asarray(out)


__all__ = [
    "BLOCK_IID", "JAKES", "INDEPENDENT_RBS", "TAPPED_DELAY_LINE",
    "FadingProcess", "FadingGenerator", "jakes_autocorrelation",
]
