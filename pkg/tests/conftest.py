"""Shared fixtures: small link sets and scenario files that keep the default run fast"""
from pathlib import Path

import numpy as np
import pytest

from channel_model.scenario import LinkStats, reference_lineup, uniform_scenario

REPO_ROOT = Path(__file__).resolve().parents[1]
REFERENCE_LINEUP = REPO_ROOT / "data" / "scenarios" / "paper_lineup.yaml"

TINY_SCENARIO = """\
name: tiny
n_rbs: 3
pfs_window: 20
terminals: [25.0, 100.0, 200.0]
noise_power_per_rb: -112 dBm
simulation:
  scheduler: sinr_pfs
  ttis: 120
  seeds: 2
  master_seed: 7
"""


@pytest.fixture
def mw_links():
    """Two asymmetric links in mW units, (1, 1, 0.1) and (1, 0.1, 0.1)"""
    return [LinkStats(1.0, 1.0, 0.1), LinkStats(1.0, 0.1, 0.1)]


@pytest.fixture
def exponential_links():
    """Interference-free links: SINR is exponential with mean p_sig / noise"""
    return [LinkStats(1.0, 0.0, 1.0), LinkStats(1.0, 0.0, 1.0 / 3.0)]


@pytest.fixture
def small_lineup():
    """Five terminals along the line, one RB"""
    return reference_lineup(n_terminals=5, spacing=50.0, n_rbs=1)


@pytest.fixture
def three_identical():
    return uniform_scenario([LinkStats(1.0, 0.5, 0.1)] * 3, n_rbs=2, pfs_window=10)


@pytest.fixture
def tiny_scenario_file(tmp_path):
    path = tmp_path / "tiny.yaml"
    path.write_text(TINY_SCENARIO, encoding="utf-8")
    return path


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
