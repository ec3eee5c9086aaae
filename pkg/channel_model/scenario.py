"""
channel_model/scenario.py
-------------------------
Scenario description (geometry, powers, RB grid, PFS window, MCS policy) and the
LinkStats table of average received powers that parameterizes every SINR law.
"""
import logging
import math
from dataclasses import dataclass, field, replace
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from channel_model.mcs import SpectralEfficiency
from utils.errors import ConfigError, DivergentMean, DomainError

logger = logging.getLogger(__name__)

# MCS policies
INDEPENDENT_PER_RB = "independent"
UNIFORM_WORST_RB = "uniform_worst_rb"
MCS_POLICIES = (INDEPENDENT_PER_RB, UNIFORM_WORST_RB)

# Path loss model: 35.2 + 35 log10(d), d in meters
PATH_LOSS_INTERCEPT_DB = 35.2
PATH_LOSS_SLOPE_DB = 35.0


def dbm_to_watts(value_dbm: float) -> float:
    return 10.0 ** ((float(value_dbm) - 30.0) / 10.0)


def watts_to_dbm(value_w: float) -> float:
    return 10.0 * math.log10(float(value_w)) + 30.0


def path_loss_db(distance: float) -> float:
    """Urban macro path loss in dB for a distance in meters"""
    if not distance > 0:
        raise DomainError(f"path loss needs a positive distance, got {distance}")
    return PATH_LOSS_INTERCEPT_DB + PATH_LOSS_SLOPE_DB * math.log10(distance)


def channel_gain(distance: float) -> float:
    """Average channel gain 10^(-PL/10)"""
    return 10.0 ** (-path_loss_db(distance) / 10.0)


@dataclass(frozen=True)
class LinkStats:
    """Average received signal and interferer power plus noise power, all in watts"""
    p_sig: float
    p_intf: float
    noise: float

    def __post_init__(self):
        if not self.p_sig > 0:
            raise DomainError(f"signal power must be > 0, got {self.p_sig}")
        if not self.p_intf >= 0:
            raise DomainError(f"interference power must be >= 0, got {self.p_intf}")
        if self.noise == 0:
            raise DivergentMean("noise power is 0: E[X] diverges because the SINR tail decays like 1/x")
        if not self.noise > 0:
            raise DomainError(f"noise power must be > 0, got {self.noise}")

    @property
    def mean_power_sinr(self) -> float:
        """P^s / (P^i + eta), the SINR of the average powers"""
        return self.p_sig / (self.p_intf + self.noise)

    def scaled(self, factor: float) -> "LinkStats":
        return LinkStats(self.p_sig * factor, self.p_intf * factor, self.noise * factor)


@dataclass(frozen=True)
class TerminalPlacement:
    id: int
    pos: float


@dataclass(frozen=True, eq=False)
class LinkTable:
    """LinkStats indexed (terminal, RB), stored as three (J, N) arrays"""
    p_sig: np.ndarray
    p_intf: np.ndarray
    noise: np.ndarray

    @property
    def n_terminals(self) -> int:
        return self.p_sig.shape[0]

    @property
    def n_rbs(self) -> int:
        return self.p_sig.shape[1]

    def __getitem__(self, index: Tuple[int, int]) -> LinkStats:
        j, n = index
        return LinkStats(float(self.p_sig[j, n]), float(self.p_intf[j, n]), float(self.noise[j, n]))

    def rb_column(self, n: int) -> List[LinkStats]:
        """Links of every terminal on RB n"""
        return [self[j, n] for j in range(self.n_terminals)]

    def terminal_row(self, j: int) -> List[LinkStats]:
        return [self[j, n] for n in range(self.n_rbs)]

    def rb_classes(self) -> Tuple[List[int], List[int]]:
        """
        Group RBs whose whole column of links is identical.
        Returns (class id per RB, representative RB per class).
        """
        class_of_rb: List[int] = []
        representatives: List[int] = []
        keys: Dict[bytes, int] = {}
        for n in range(self.n_rbs):
            key = np.stack([self.p_sig[:, n], self.p_intf[:, n], self.noise[:, n]]).tobytes()
            if key not in keys:
                keys[key] = len(representatives)
                representatives.append(n)
            class_of_rb.append(keys[key])
        return class_of_rb, representatives

    @property
    def is_rb_invariant(self) -> bool:
        return len(self.rb_classes()[1]) == 1

    @classmethod
    def from_links(cls, rows: Sequence[Sequence[LinkStats]]) -> "LinkTable":
        p_sig = np.array([[l.p_sig for l in row] for row in rows], dtype=float)
        p_intf = np.array([[l.p_intf for l in row] for row in rows], dtype=float)
        noise = np.array([[l.noise for l in row] for row in rows], dtype=float)
        return cls(p_sig, p_intf, noise)


@dataclass(frozen=True)
class Scenario:
    """Single source of truth for a run; immutable after construction"""
    n_rbs: int = 25
    subcarriers_per_rb: int = 12          # R
    symbols_per_subcarrier: int = 7       # S
    tti_duration: float = 1e-3
    terminals: Tuple[TerminalPlacement, ...] = ()
    serving_bs_pos: float = 0.0
    interferer_bs_pos: float = 500.0
    tx_power_per_rb_signal: float = 0.8
    tx_power_per_rb_interf: float = 0.8
    noise_power_per_rb: float = field(default_factory=lambda: dbm_to_watts(-112.0))
    pfs_window: int = 100
    mcs_policy: str = INDEPENDENT_PER_RB
    efficiency: SpectralEfficiency = field(default_factory=SpectralEfficiency.truncated_shannon)
    rb_bandwidth_hz: float = 180e3
    name: str = "scenario"
    # explicit (J, N) or (J, 1) tables bypass the line geometry
    link_table: Optional[LinkTable] = None

    def __post_init__(self):
        self.validate()

    def validate(self):
        if int(self.n_rbs) < 1:
            raise ConfigError(f"must be >= 1, got {self.n_rbs}", key="n_rbs")
        if self.subcarriers_per_rb < 1 or self.symbols_per_subcarrier < 1:
            raise ConfigError("R and S must be >= 1", key="subcarriers_per_rb")
        if not self.tti_duration > 0:
            raise ConfigError(f"must be > 0, got {self.tti_duration}", key="tti_duration")
        if int(self.pfs_window) < 1:
            raise ConfigError(f"must be >= 1, got {self.pfs_window}", key="pfs_window")
        if self.mcs_policy not in MCS_POLICIES:
            raise ConfigError(f"must be one of {MCS_POLICIES}, got '{self.mcs_policy}'", key="mcs_policy")
        if self.noise_power_per_rb == 0:
            raise ConfigError("noise power 0 violates the DivergentMean precondition: "
                              "E[X] diverges without noise", key="noise_power_per_rb")
        if not self.noise_power_per_rb > 0:
            raise ConfigError(f"must be > 0, got {self.noise_power_per_rb}", key="noise_power_per_rb")
        if self.link_table is not None:
            if self.link_table.n_rbs not in (1, self.n_rbs):
                raise ConfigError(f"table has {self.link_table.n_rbs} RB columns, expected 1 or {self.n_rbs}",
                                  key="link_stats")
            if self.link_table.n_terminals < 1:
                raise ConfigError("needs at least one terminal", key="link_stats")
            if np.any(self.link_table.noise == 0):
                raise ConfigError("noise power 0 violates the DivergentMean precondition: "
                                  "E[X] diverges without noise", key="link_stats.noise")
            if not (np.all(self.link_table.p_sig > 0) and np.all(self.link_table.p_intf >= 0)
                    and np.all(self.link_table.noise > 0)):
                raise ConfigError("needs p_sig > 0, p_intf >= 0 and noise > 0", key="link_stats")
            return
        if not self.terminals:
            raise ConfigError("at least one terminal is required", key="terminals")
        ids = [t.id for t in self.terminals]
        if ids != list(range(len(ids))):
            raise ConfigError("terminal ids must be unique and contiguous from 0", key="terminals")
        if not (self.tx_power_per_rb_signal > 0 and self.tx_power_per_rb_interf > 0):
            raise ConfigError("transmit powers must be > 0", key="tx_power_per_rb")
        for t in self.terminals:
            if t.pos == self.serving_bs_pos or t.pos == self.interferer_bs_pos:
                raise ConfigError(f"terminal {t.id} sits on a base station (pos={t.pos})", key="terminals")

    @property
    def n_terminals(self) -> int:
        if self.link_table is not None:
            return self.link_table.n_terminals
        return len(self.terminals)

    @property
    def symbols_per_rb(self) -> int:
        """R*S resource elements per RB per TTI"""
        return self.subcarriers_per_rb * self.symbols_per_subcarrier

    @property
    def symbol_rate_per_rb(self) -> float:
        """R*S / T_TTI in symbols per second"""
        return self.symbols_per_rb / self.tti_duration

    def with_changes(self, **changes) -> "Scenario":
        return replace(self, **changes)


def line_terminals(positions: Sequence[float]) -> Tuple[TerminalPlacement, ...]:
    return tuple(TerminalPlacement(i, float(p)) for i, p in enumerate(positions))


def build_link_stats(s: Scenario) -> LinkTable:
    """
    Average received powers per (terminal, RB).

    Line geometry gives frequency-flat averages, identical across RBs. An explicit
    table is broadcast over the RB axis when it carries a single column.
    """
    J, N = s.n_terminals, s.n_rbs
    if s.link_table is not None:
        table = s.link_table
        if table.n_rbs == N:
            return table
        return LinkTable(np.repeat(table.p_sig, N, axis=1),
                         np.repeat(table.p_intf, N, axis=1),
                         np.repeat(table.noise, N, axis=1))

    p_sig = np.empty((J, N))
    p_intf = np.empty((J, N))
    for t in s.terminals:
        p_sig[t.id, :] = s.tx_power_per_rb_signal * channel_gain(abs(t.pos - s.serving_bs_pos))
        p_intf[t.id, :] = s.tx_power_per_rb_interf * channel_gain(abs(t.pos - s.interferer_bs_pos))
    noise = np.full((J, N), s.noise_power_per_rb)
    logger.debug("Built link stats for %d terminals x %d RBs", J, N)
    return LinkTable(p_sig, p_intf, noise)


def reference_lineup(n_terminals: int = 20, spacing: float = 12.5, **overrides) -> Scenario:
    """
    Validation line-up: serving BS at 0 m, interferer at 500 m, terminals every
    12.5 m up to the cell edge, 0.8 W per RB, -112 dBm noise per RB, N=25, W=100.
    """
    settings = dict(
        n_rbs=25,
        subcarriers_per_rb=12,
        symbols_per_subcarrier=7,
        tti_duration=1e-3,
        terminals=line_terminals([spacing * (k + 1) for k in range(n_terminals)]),
        serving_bs_pos=0.0,
        interferer_bs_pos=500.0,
        tx_power_per_rb_signal=0.8,
        tx_power_per_rb_interf=0.8,
        noise_power_per_rb=dbm_to_watts(-112.0),
        pfs_window=100,
        mcs_policy=INDEPENDENT_PER_RB,
        efficiency=SpectralEfficiency.truncated_shannon(),
        name="reference_lineup",
    )
    settings.update(overrides)
    return Scenario(**settings)


def uniform_scenario(links: Sequence[LinkStats], n_rbs: int = 1, **overrides) -> Scenario:
    """Scenario from an explicit per-terminal link list, identical on every RB"""
    table = LinkTable.from_links([[l] for l in links])
    settings = dict(n_rbs=n_rbs, link_table=table, name="explicit_links",
                    noise_power_per_rb=float(table.noise[0, 0]))
    settings.update(overrides)
    return Scenario(**settings)
