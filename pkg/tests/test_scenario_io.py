import pytest
import yaml

from channel_model.scenario import UNIFORM_WORST_RB, reference_lineup
from simulation.simulator import RATE_PFS, SimulationSettings
from utils.errors import ConfigError
from utils.scenario_io import (
    dump_scenario, load_scenario, parse_power, save_scenario, scenario_digest, scenario_from_dict,
    settings_from_dict,
)

from tests.conftest import REFERENCE_LINEUP, REPO_ROOT


def test_load_the_validation_lineup():
    s, settings = load_scenario(str(REFERENCE_LINEUP))
    assert s.n_terminals == 20
    assert s.n_rbs == 25
    assert s.pfs_window == 100
    assert [t.pos for t in s.terminals][:3] == [12.5, 25.0, 37.5]
    assert s.tx_power_per_rb_signal == 0.8
    assert settings.seeds == 30
    assert settings.ttis == 5000
    assert scenario_digest(s) == scenario_digest(reference_lineup())


def test_uniform_lineup_file():
    s, _ = load_scenario(str(REPO_ROOT / "data" / "scenarios" / "uniform_lineup.yaml"))
    assert s.mcs_policy == UNIFORM_WORST_RB


def test_canonical_dump_is_stable(tmp_path):
    s, settings = load_scenario(str(REFERENCE_LINEUP))
    text = dump_scenario(s, settings)
    path = tmp_path / "again.yaml"
    save_scenario(s, str(path), settings)
    again, again_settings = load_scenario(str(path))
    assert dump_scenario(again, again_settings) == text
    assert again_settings.seeds == settings.seeds
    assert again_settings.fading == settings.fading


@pytest.mark.parametrize("value, watts", [
    (0.8, 0.8),
    (2, 2.0),
    ("0.8 W", 0.8),
    ("800 mW", 0.8),
    ("30 dBm", 1.0),
    ("-112dBm", 10 ** (-14.2) * 1e-3),
])
def test_parse_power(value, watts):
    assert parse_power(value, "p") == pytest.approx(watts)


@pytest.mark.parametrize("value", ["loud", "3 kW", True, None, [1.0]])
def test_parse_power_rejects(value):
    with pytest.raises(ConfigError, match="tx_power"):
        parse_power(value, "tx_power")


def test_unknown_keys_are_named():
    with pytest.raises(ConfigError, match="n_rb"):
        scenario_from_dict({"n_rb": 5, "terminals": [10.0]})
    with pytest.raises(ConfigError, match="simulation.seed"):
        settings_from_dict({"seed": 3})


def test_missing_terminals():
    with pytest.raises(ConfigError, match="terminals"):
        scenario_from_dict({"n_rbs": 5})


def test_link_stats_table():
    cfg = {
        "n_rbs": 2,
        "link_stats": [
            {"p_sig": "1 mW", "p_intf": 0.0005, "noise": "-20 dBm"},
            [{"p_sig": 0.001, "p_intf": 0.0, "noise": 1e-5}, {"p_sig": 0.002, "p_intf": 0.0, "noise": 1e-5}],
        ],
    }
    # every row must have the same width
    with pytest.raises(ConfigError, match="link_stats"):
        scenario_from_dict(cfg)
    cfg["link_stats"][0] = [cfg["link_stats"][0], cfg["link_stats"][0]]
    s = scenario_from_dict(cfg)
    assert s.link_table.p_sig.shape == (2, 2)
    assert s.link_table.noise[0, 0] == pytest.approx(1e-5)
    again = scenario_from_dict(yaml.safe_load(dump_scenario(s)))
    assert dump_scenario(again) == dump_scenario(s)


def test_link_stats_zero_noise():
    cfg = {"n_rbs": 1, "link_stats": [{"p_sig": 1.0, "p_intf": 0.1, "noise": 0.0}]}
    with pytest.raises(ConfigError, match="link_stats"):
        scenario_from_dict(cfg)


def test_simulation_section():
    settings = settings_from_dict({"scheduler": RATE_PFS, "rate_window": "rb", "feedback": "shannon",
                                   "fading": "jakes", "feedback_delay": 2})
    assert settings.scheduler == RATE_PFS
    assert settings.fading.mode == "jakes"
    assert settings.feedback.kind == "shannon"
    assert settings_from_dict(None, default_seed=11).master_seed == 11
    assert settings_from_dict({}) == SimulationSettings()
    with pytest.raises(ConfigError, match="simulation.ttis"):
        settings_from_dict({"ttis": "long"})


def test_digest_ignores_the_simulation_section(tmp_path):
    s = reference_lineup(n_terminals=4)
    assert scenario_digest(s) == scenario_digest(reference_lineup(n_terminals=4))
    assert scenario_digest(s) != scenario_digest(reference_lineup(n_terminals=5))
    path = tmp_path / "s.yaml"
    save_scenario(s, str(path), SimulationSettings(seeds=3))
    loaded, settings = load_scenario(str(path))
    assert settings.seeds == 3
    assert scenario_digest(loaded) == scenario_digest(s)


def test_bad_files(tmp_path):
    with pytest.raises(ConfigError, match="no such file"):
        load_scenario(str(tmp_path / "missing.yaml"))
    broken = tmp_path / "broken.yaml"
    broken.write_text("n_rbs: [1, 2\n", encoding="utf-8")
    with pytest.raises(ConfigError, match="YAML"):
        load_scenario(str(broken))
