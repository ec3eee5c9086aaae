"""
channel_model/mcs.py
--------------------
Spectral-efficiency functions C(gamma): SINR (linear) -> bits per symbol.
Shannon, truncated Shannon and staircase (MCS table) variants, plus a constant
C used for calibration runs.
"""
import math
from dataclasses import dataclass
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from utils.errors import ConfigError, DomainError

SHANNON = "shannon"
TRUNCATED_SHANNON = "truncated_shannon"
STAIRCASE = "staircase"
CONSTANT = "constant"

# LTE-like 64-QAM ceiling used by the reproduction runs
DEFAULT_CAP = 5.55

# 4-bit CQI table: (SINR threshold in dB, efficiency in bits/symbol)
LTE_CQI_TABLE_DB = [
    (-6.7, 0.1523), (-4.7, 0.2344), (-2.3, 0.3770), (0.2, 0.6016),
    (2.4, 0.8770), (4.3, 1.1758), (5.9, 1.4766), (8.1, 1.9141),
    (10.3, 2.4063), (11.7, 2.7305), (14.1, 3.3223), (16.3, 3.9023),
    (18.7, 4.5234), (21.0, 5.1152), (22.7, 5.5547),
]


def db_to_linear(value_db):
    return np.power(10.0, np.asarray(value_db, dtype=float) / 10.0)


def linear_to_db(value):
    return 10.0 * np.log10(value)


@dataclass(frozen=True)
class SpectralEfficiency:
    """C(gamma). Staircase thresholds are linear SINR values, strictly increasing."""
    kind: str = TRUNCATED_SHANNON
    cap: float = DEFAULT_CAP
    thresholds: Tuple[float, ...] = ()
    efficiencies: Tuple[float, ...] = ()
    value: float = 0.0

    def __post_init__(self):
        if self.kind not in (SHANNON, TRUNCATED_SHANNON, STAIRCASE, CONSTANT):
            raise ConfigError(f"unknown efficiency kind '{self.kind}'", key="efficiency.kind")
        if self.kind == TRUNCATED_SHANNON and not self.cap > 0:
            raise ConfigError(f"cap must be > 0, got {self.cap}", key="efficiency.cap")
        if self.kind == CONSTANT and not self.value >= 0:
            raise ConfigError(f"constant efficiency must be >= 0, got {self.value}", key="efficiency.value")
        if self.kind == STAIRCASE:
            if not self.thresholds or len(self.thresholds) != len(self.efficiencies):
                raise ConfigError("staircase needs matching, nonempty thresholds and efficiencies",
                                  key="efficiency.table_db")
            if np.any(np.diff(self.thresholds) <= 0) or np.any(np.diff(self.efficiencies) <= 0):
                raise ConfigError("staircase thresholds and efficiencies must be strictly increasing",
                                  key="efficiency.table_db")
            if self.efficiencies[0] <= 0:
                raise ConfigError("staircase efficiencies must be positive", key="efficiency.table_db")

    # --- constructors ---
    @classmethod
    def shannon(cls) -> "SpectralEfficiency":
        return cls(kind=SHANNON, cap=math.inf)

    @classmethod
    def truncated_shannon(cls, cap: float = DEFAULT_CAP) -> "SpectralEfficiency":
        if math.isinf(cap):
            return cls.shannon()
        return cls(kind=TRUNCATED_SHANNON, cap=float(cap))

    @classmethod
    def staircase(cls, table: Sequence[Tuple[float, float]]) -> "SpectralEfficiency":
        """Table of (linear SINR threshold, bits/symbol)"""
        if not table:
            raise ConfigError("staircase table is empty", key="efficiency.table_db")
        thresholds, efficiencies = zip(*table)
        return cls(kind=STAIRCASE, cap=math.inf,
                   thresholds=tuple(float(t) for t in thresholds),
                   efficiencies=tuple(float(e) for e in efficiencies))

    @classmethod
    def staircase_db(cls, table_db: Sequence[Tuple[float, float]]) -> "SpectralEfficiency":
        """Table of (SINR threshold in dB, bits/symbol), the scenario-file format"""
        return cls.staircase([(float(db_to_linear(t)), e) for t, e in table_db])

    @classmethod
    def lte_cqi(cls) -> "SpectralEfficiency":
        return cls.staircase_db(LTE_CQI_TABLE_DB)

    @classmethod
    def constant(cls, value: float) -> "SpectralEfficiency":
        return cls(kind=CONSTANT, cap=math.inf, value=float(value))

    # --- evaluation ---
    def efficiency(self, gamma):
        """C(gamma) in bits/symbol; accepts scalars or arrays"""
        gamma_arr = np.asarray(gamma, dtype=float)
        if np.any(gamma_arr < 0):
            raise DomainError("SINR must be >= 0")
        if self.kind == STAIRCASE:
            idx = np.searchsorted(np.asarray(self.thresholds), gamma_arr, side="right")
            out = np.concatenate([[0.0], self.efficiencies])[idx]
        elif self.kind == CONSTANT:
            out = np.full(gamma_arr.shape, self.value)
        else:
            out = np.log2(1.0 + gamma_arr)
            if self.kind == TRUNCATED_SHANNON:
                out = np.minimum(out, self.cap)
        return float(out) if np.ndim(out) == 0 else out

    def __call__(self, gamma):
        return self.efficiency(gamma)

    def quantize_index(self, gamma) -> np.ndarray:
        """Staircase step index, -1 below the first threshold"""
        if self.kind != STAIRCASE:
            raise DomainError("only staircase efficiencies can quantize feedback")
        return np.searchsorted(np.asarray(self.thresholds), np.asarray(gamma, dtype=float), side="right") - 1

    @property
    def breakpoints(self) -> List[float]:
        """SINR values where C is not smooth; handed to the integrators as panel edges"""
        if self.kind == STAIRCASE:
            return list(self.thresholds)
        if self.kind == TRUNCATED_SHANNON and self.cap < 1000:
            return [2.0 ** self.cap - 1.0]
        return []

    @property
    def is_constant(self) -> bool:
        return self.kind == CONSTANT

    @property
    def min_positive_efficiency(self) -> float:
        """Efficiency of the lowest MCS; for continuous C the lowest LTE CQI entry"""
        if self.kind == STAIRCASE:
            return self.efficiencies[0]
        if self.kind == CONSTANT and self.value > 0:
            return self.value
        return LTE_CQI_TABLE_DB[0][1]

    def to_config(self) -> Dict:
        if self.kind == SHANNON:
            return {"kind": SHANNON}
        if self.kind == TRUNCATED_SHANNON:
            return {"kind": TRUNCATED_SHANNON, "cap": self.cap}
        if self.kind == CONSTANT:
            return {"kind": CONSTANT, "value": self.value}
        return {"kind": STAIRCASE,
                "table_db": [[round(float(linear_to_db(t)), 10), e]
                             for t, e in zip(self.thresholds, self.efficiencies)]}

    @classmethod
    def from_config(cls, cfg: Optional[Dict]) -> "SpectralEfficiency":
        if cfg is None:
            return cls.truncated_shannon()
        if isinstance(cfg, str):
            cfg = {"kind": cfg}
        if not isinstance(cfg, dict):
            raise ConfigError("must be a mapping or a kind name", key="efficiency")
        kind = cfg.get("kind", TRUNCATED_SHANNON)
        try:
            if kind == SHANNON:
                return cls.shannon()
            if kind == TRUNCATED_SHANNON:
                return cls.truncated_shannon(float(cfg.get("cap", DEFAULT_CAP)))
            if kind == CONSTANT:
                return cls.constant(float(cfg["value"]))
            if kind == "lte_cqi":
                return cls.lte_cqi()
            if kind == STAIRCASE:
                table = cfg.get("table_db")
                if not table:
                    raise ConfigError("staircase efficiency needs a table_db list", key="efficiency.table_db")
                return cls.staircase_db([(float(t), float(e)) for t, e in table])
        except (KeyError, TypeError, ValueError) as e:
            raise ConfigError(f"malformed efficiency section ({e})", key="efficiency")
        raise ConfigError(f"unknown efficiency kind '{kind}'", key="efficiency.kind")
