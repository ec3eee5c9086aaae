"""
scenario_io.py - Scenario files
-------------------------------
Reads and writes the YAML scenario format documented in data/scenarios/README.md.

- Powers accept plain numbers (watts) or strings tagged W, mW or dBm
- An optional link_stats table replaces the line geometry
- An optional simulation section carries the simulator settings
- dump writes canonical watts, so dump(load(dump(s))) == dump(s)

The scenario digest is the SHA-256 of the canonical dump without the simulation
section; every CSV report carries it.
"""
import hashlib
import logging
import os
import re
from typing import Any, Dict, Optional, Tuple

import yaml

from channel_model.mcs import SpectralEfficiency
from channel_model.scenario import LinkStats, LinkTable, Scenario, dbm_to_watts, line_terminals
from simulation.fading import FadingProcess
from simulation.simulator import SimulationSettings
from utils.errors import ConfigError, DomainError

logger = logging.getLogger(__name__)

POWER_PATTERN = re.compile(r"^\s*([-+]?(?:\d+\.?\d*|\.\d+)(?:[eE][-+]?\d+)?)\s*(W|mW|dBm)\s*$")

SCENARIO_KEYS = (
    "name", "n_rbs", "subcarriers_per_rb", "symbols_per_subcarrier", "tti_duration",
    "serving_bs_pos", "interferer_bs_pos", "terminals",
    "tx_power_per_rb_signal", "tx_power_per_rb_interf", "noise_power_per_rb",
    "pfs_window", "mcs_policy", "efficiency", "rb_bandwidth_hz", "link_stats", "simulation",
)
SIMULATION_KEYS = ("scheduler", "ttis", "seeds", "master_seed", "fading", "rate_window",
                   "feedback", "feedback_delay")


def parse_power(value: Any, key: str) -> float:
    """Watts from a number or a 'W' / 'mW' / 'dBm' tagged string"""
    if isinstance(value, bool):
        raise ConfigError(f"expected a power, got {value!r}", key=key)
    if isinstance(value, (int, float)):
        return float(value)
    if isinstance(value, str):
        match = POWER_PATTERN.match(value)
        if match:
            number, unit = float(match.group(1)), match.group(2)
            if unit == "W":
                return number
            if unit == "mW":
                return number * 1e-3
            return dbm_to_watts(number)
    raise ConfigError(f"expected watts or a W/mW/dBm tagged value, got {value!r}", key=key)


def _number(cfg: Dict, key: str, default, cast=float, prefix: str = ""):
    value = cfg.get(key, default)
    try:
        return cast(value)
    except (TypeError, ValueError):
        raise ConfigError(f"expected a number, got {value!r}", key=prefix + key)


def _link(entry: Any, key: str) -> LinkStats:
    if not isinstance(entry, dict):
        raise ConfigError("each entry needs p_sig, p_intf and noise", key=key)
    missing = {"p_sig", "p_intf", "noise"} - set(entry)
    if missing:
        raise ConfigError(f"missing {sorted(missing)}", key=key)
    try:
        return LinkStats(parse_power(entry["p_sig"], f"{key}.p_sig"),
                         parse_power(entry["p_intf"], f"{key}.p_intf"),
                         parse_power(entry["noise"], f"{key}.noise"))
    except DomainError as e:
        raise ConfigError(str(e), key=key)


def _link_table(rows: Any) -> LinkTable:
    if not isinstance(rows, list) or not rows:
        raise ConfigError("expected a nonempty list with one entry per terminal", key="link_stats")
    parsed = []
    for j, row in enumerate(rows):
        entries = row if isinstance(row, list) else [row]
        parsed.append([_link(e, f"link_stats[{j}][{n}]") for n, e in enumerate(entries)])
    widths = {len(r) for r in parsed}
    if len(widths) != 1:
        raise ConfigError("every terminal needs the same number of RB entries", key="link_stats")
    return LinkTable.from_links(parsed)


def scenario_from_dict(cfg: Dict) -> Scenario:
    if not isinstance(cfg, dict):
        raise ConfigError("scenario file must hold a mapping", key="scenario")
    unknown = sorted(set(cfg) - set(SCENARIO_KEYS))
    if unknown:
        raise ConfigError(f"unknown key(s) {unknown}", key=unknown[0])

    settings = dict(
        name=str(cfg.get("name", "scenario")),
        n_rbs=_number(cfg, "n_rbs", 25, int),
        subcarriers_per_rb=_number(cfg, "subcarriers_per_rb", 12, int),
        symbols_per_subcarrier=_number(cfg, "symbols_per_subcarrier", 7, int),
        tti_duration=_number(cfg, "tti_duration", 1e-3),
        serving_bs_pos=_number(cfg, "serving_bs_pos", 0.0),
        interferer_bs_pos=_number(cfg, "interferer_bs_pos", 500.0),
        tx_power_per_rb_signal=parse_power(cfg.get("tx_power_per_rb_signal", 0.8), "tx_power_per_rb_signal"),
        tx_power_per_rb_interf=parse_power(cfg.get("tx_power_per_rb_interf", 0.8), "tx_power_per_rb_interf"),
        noise_power_per_rb=parse_power(cfg.get("noise_power_per_rb", "-112 dBm"), "noise_power_per_rb"),
        pfs_window=_number(cfg, "pfs_window", 100, int),
        mcs_policy=str(cfg.get("mcs_policy", "independent")),
        efficiency=SpectralEfficiency.from_config(cfg.get("efficiency")),
        rb_bandwidth_hz=_number(cfg, "rb_bandwidth_hz", 180e3),
    )
    if "link_stats" in cfg:
        settings["link_table"] = _link_table(cfg["link_stats"])
    else:
        positions = cfg.get("terminals")
        if not isinstance(positions, list) or not positions:
            raise ConfigError("expected a nonempty list of positions in meters", key="terminals")
        try:
            settings["terminals"] = line_terminals([float(p) for p in positions])
        except (TypeError, ValueError):
            raise ConfigError("terminal positions must be numbers", key="terminals")
    return Scenario(**settings)


def settings_from_dict(cfg: Optional[Dict], default_seed: Optional[int] = None) -> SimulationSettings:
    cfg = cfg or {}
    if not isinstance(cfg, dict):
        raise ConfigError("expected a mapping", key="simulation")
    unknown = sorted(set(cfg) - set(SIMULATION_KEYS))
    if unknown:
        raise ConfigError(f"unknown key(s) {unknown}", key=f"simulation.{unknown[0]}")
    defaults = SimulationSettings()
    feedback = cfg.get("feedback", "lte_cqi")
    return SimulationSettings(
        scheduler=str(cfg.get("scheduler", defaults.scheduler)),
        ttis=_number(cfg, "ttis", defaults.ttis, int, "simulation."),
        seeds=_number(cfg, "seeds", defaults.seeds, int, "simulation."),
        master_seed=_number(cfg, "master_seed", default_seed if default_seed is not None
                            else defaults.master_seed, int, "simulation."),
        fading=FadingProcess.from_config(cfg.get("fading")),
        rate_window=str(cfg.get("rate_window", defaults.rate_window)),
        feedback=SpectralEfficiency.from_config(feedback),
        feedback_delay=_number(cfg, "feedback_delay", 0, int, "simulation."),
    )


def scenario_to_dict(s: Scenario) -> Dict:
    out: Dict[str, Any] = {
        "name": s.name,
        "n_rbs": int(s.n_rbs),
        "subcarriers_per_rb": int(s.subcarriers_per_rb),
        "symbols_per_subcarrier": int(s.symbols_per_subcarrier),
        "tti_duration": float(s.tti_duration),
        "serving_bs_pos": float(s.serving_bs_pos),
        "interferer_bs_pos": float(s.interferer_bs_pos),
    }
    if s.link_table is None:
        out["terminals"] = [float(t.pos) for t in s.terminals]
    out.update({
        "tx_power_per_rb_signal": float(s.tx_power_per_rb_signal),
        "tx_power_per_rb_interf": float(s.tx_power_per_rb_interf),
        "noise_power_per_rb": float(s.noise_power_per_rb),
        "pfs_window": int(s.pfs_window),
        "mcs_policy": s.mcs_policy,
        "efficiency": s.efficiency.to_config(),
        "rb_bandwidth_hz": float(s.rb_bandwidth_hz),
    })
    if s.link_table is not None:
        table = s.link_table
        rows = []
        for j in range(table.n_terminals):
            entries = [{"p_sig": float(table.p_sig[j, n]), "p_intf": float(table.p_intf[j, n]),
                        "noise": float(table.noise[j, n])} for n in range(table.n_rbs)]
            rows.append(entries[0] if table.n_rbs == 1 else entries)
        out["link_stats"] = rows
    return out


def settings_to_dict(settings: SimulationSettings) -> Dict:
    return {
        "scheduler": settings.scheduler,
        "ttis": int(settings.ttis),
        "seeds": int(settings.seeds),
        "master_seed": int(settings.master_seed),
        "fading": settings.fading.to_config(),
        "rate_window": settings.rate_window,
        "feedback": settings.feedback.to_config(),
        "feedback_delay": int(settings.feedback_delay),
    }


def dump_scenario(s: Scenario, settings: Optional[SimulationSettings] = None) -> str:
    """Canonical YAML text"""
    data = scenario_to_dict(s)
    if settings is not None:
        data["simulation"] = settings_to_dict(settings)
    return yaml.safe_dump(data, sort_keys=False, default_flow_style=None, width=100)


def scenario_digest(s: Scenario) -> str:
    return hashlib.sha256(dump_scenario(s).encode("utf-8")).hexdigest()


def load_scenario(path: str, default_seed: Optional[int] = None) -> Tuple[Scenario, SimulationSettings]:
    """Scenario and simulator settings from a YAML file"""
    if not os.path.isfile(path):
        raise ConfigError(f"no such file '{path}'", key="scenario")
    with open(path, "r", encoding="utf-8") as fh:
        try:
            cfg = yaml.safe_load(fh)
        except yaml.YAMLError as e:
            raise ConfigError(f"not valid YAML ({e})", key="scenario")
    scenario = scenario_from_dict(cfg)
    settings = settings_from_dict(cfg.get("simulation"), default_seed)
    logger.info("Loaded scenario '%s' from %s: %d terminals, %d RBs",
                scenario.name, path, scenario.n_terminals, scenario.n_rbs)
    return scenario, settings


def save_scenario(s: Scenario, path: str, settings: Optional[SimulationSettings] = None):
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(dump_scenario(s, settings))


__all__ = [
    "parse_power", "scenario_from_dict", "settings_from_dict", "scenario_to_dict", "settings_to_dict",
    "dump_scenario", "scenario_digest", "load_scenario", "save_scenario",
]
