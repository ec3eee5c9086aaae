import numpy as np
import pytest
from scipy import special

from simulation.fading import (
    BLOCK_IID, JAKES, TAPPED_DELAY_LINE, FadingProcess, jakes_autocorrelation,
)
from utils.errors import ConfigError


def test_block_iid_gains_have_unit_mean(rng):
    gen = FadingProcess().generator(10, 10, 1e-3, rng)
    gs = np.stack([gen.next()[0] for _ in range(1000)])
    assert gs.shape == (1000, 10, 10)
    assert gs.mean() == pytest.approx(1.0, abs=0.01)
    # Rayleigh power gains are exponential: variance equals the squared mean
    assert gs.var() == pytest.approx(1.0, abs=0.06)


def test_jakes_autocorrelation_follows_bessel(rng):
    process = FadingProcess(mode=JAKES, oscillators=16, doppler_hz=5.5)
    h = process.generator(100, 25, 1e-3, rng).sample_complex(500)
    lags = [0, 10, 30, 60, 90]
    observed = jakes_autocorrelation(h, lags)
    expected = special.j0(2 * np.pi * 5.5 * np.array(lags) * 1e-3)
    np.testing.assert_allclose(observed, expected, atol=0.05)


def test_jakes_is_deterministic_in_the_generator(rng):
    process = FadingProcess(mode=JAKES)
    a = process.generator(2, 3, 1e-3, np.random.default_rng(5)).sample_complex(4)
    b = process.generator(2, 3, 1e-3, np.random.default_rng(5)).sample_complex(4)
    np.testing.assert_array_equal(a, b)


def test_tapped_delay_line_correlates_neighbouring_rbs(rng):
    taps = ((0.0, 0.5), (1e-6, 0.5))
    process = FadingProcess(frequency_correlation=TAPPED_DELAY_LINE, taps=taps)
    h = process.generator(50, 4, 1e-3, rng).sample_complex(400)
    power = np.mean(np.abs(h) ** 2, axis=(0, 1, 2))
    np.testing.assert_allclose(power, 1.0, atol=0.03)
    corr = np.mean(h[..., 0] * np.conj(h[..., 1]))
    expected = 0.5 + 0.5 * np.exp(2j * np.pi * 180e3 * 1e-6)
    assert abs(corr - expected) < 0.03


def test_mixing_matrix_preserves_power():
    process = FadingProcess(frequency_correlation=TAPPED_DELAY_LINE, taps=((0.0, 0.7), (2e-6, 0.3)))
    m = process.mixing_matrix(6)
    assert m.shape == (2, 6)
    np.testing.assert_allclose(np.sum(np.abs(m) ** 2, axis=0), 1.0)


def test_rb_spacing_sets_the_frequency_correlation(rng):
    process = FadingProcess(frequency_correlation=TAPPED_DELAY_LINE, taps=((0.0, 0.5), (1e-6, 0.5)))
    # 500 kHz apart the two taps arrive in antiphase: E[h0 h1*] = 0.5 + 0.5 e^{j pi}
    m = process.generator(1, 2, 1e-3, rng, rb_spacing_hz=5e5).mixing
    assert abs(np.vdot(m[:, 1], m[:, 0])) == pytest.approx(0.0, abs=1e-12)
    m = process.generator(1, 2, 1e-3, rng).mixing
    assert abs(np.vdot(m[:, 1], m[:, 0])) == pytest.approx(abs(np.cos(np.pi * 180e3 * 1e-6)), rel=1e-12)


@pytest.mark.parametrize("kwargs, key", [
    ({"mode": "rician"}, "fading.mode"),
    ({"frequency_correlation": "flat"}, "fading.frequency_correlation"),
    ({"mode": JAKES, "oscillators": 0}, "fading.oscillators"),
    ({"frequency_correlation": TAPPED_DELAY_LINE}, "fading.taps"),
    ({"frequency_correlation": TAPPED_DELAY_LINE, "taps": ((0.0, 0.5), (1e-6, 0.4))}, "fading.taps"),
])
def test_invalid_processes(kwargs, key):
    with pytest.raises(ConfigError, match=key):
        FadingProcess(**kwargs)


def test_config_round_trip():
    for process in (FadingProcess(), FadingProcess(mode=JAKES, oscillators=8, doppler_hz=10.0),
                    FadingProcess(frequency_correlation=TAPPED_DELAY_LINE, taps=((0.0, 0.6), (5e-7, 0.4)))):
        assert FadingProcess.from_config(process.to_config()) == process
    assert FadingProcess.from_config("jakes").mode == JAKES
    assert FadingProcess.from_config(None).mode == BLOCK_IID
    with pytest.raises(ConfigError):
        FadingProcess.from_config({"oscillators": "many"})
