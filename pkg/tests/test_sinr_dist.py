import math

import numpy as np
import pytest
from scipy import integrate, special, stats

from channel_model import sinr_dist
from channel_model.scenario import LinkStats
from channel_model.sinr_dist import ExponentialSinrDist, SinrDist
from utils.errors import DomainError
from utils.numerics import integrate_interval, integrate_semi_infinite

LINK_GRID = [
    LinkStats(ratio, 1.0, noise * ratio)
    for ratio in (0.1, 1.0, 10.0, 100.0)
    for noise in (1e-4, 1e-2, 1.0)
]


def test_pdf_at_zero():
    d = SinrDist(LinkStats(2.0, 1.0, 0.5))
    assert d.pdf(0.0) == pytest.approx(0.5 / 2.0 + 1.0 / 2.0)


def test_interference_free_limit_is_exponential():
    d = SinrDist(LinkStats(2.0, 0.0, 0.5))
    x = np.array([0.0, 0.3, 4.0, 25.0])
    np.testing.assert_allclose(d.pdf(x) * np.exp(0.5 * x / 2.0), 0.25, rtol=1e-14)
    assert d.mean == pytest.approx(4.0, rel=1e-8)


def test_cdf_limits_and_consistency():
    d = SinrDist(LinkStats(1.0, 1.0, 0.1))
    assert d.cdf(0.0) == 0.0
    assert d.cdf(1e6) == pytest.approx(1.0)
    assert d.cdf(2.0) - d.cdf(0.5) == pytest.approx(integrate_interval(d.pdf, 0.5, 2.0), abs=1e-8)


def test_cdf_matches_scipy_quadrature():
    d = SinrDist(LinkStats(1.0, 0.3, 0.05))
    expected, _ = integrate.quad(d.pdf, 0.0, 3.0)
    assert d.cdf(3.0) == pytest.approx(expected, abs=1e-9)


@pytest.mark.parametrize("link", LINK_GRID)
def test_normalization_and_scaled_unit_mean(link):
    d = SinrDist(link)
    knees = [1.0, d.tail_scale / d.mean]
    assert integrate_semi_infinite(d.pdf, points=[d.natural_scale, d.tail_scale]) == pytest.approx(1.0, abs=1e-6)
    assert integrate_semi_infinite(d.scaled_pdf, points=knees) == pytest.approx(1.0, abs=1e-6)
    scaled_mean = integrate_semi_infinite(lambda x: x * d.scaled_pdf(x), points=knees)
    assert scaled_mean == pytest.approx(1.0, abs=1e-6)


@pytest.mark.parametrize("link", [l for l in LINK_GRID if l.p_intf > 0])
def test_quadrature_mean_matches_exponential_integral(link):
    d = SinrDist(link)
    a, b, c = link.p_sig, link.p_intf, link.noise
    expected = (a / b) * math.exp(c / b) * special.exp1(c / b)
    assert d.mean == pytest.approx(expected, rel=1e-7)
    assert d.mean_closed_form() == pytest.approx(expected, rel=1e-10)


def test_printed_closed_form_is_an_antiderivative():
    d = SinrDist(LinkStats(1.0, 1.0, 0.1))
    assert d.printed_antiderivative(0.0) == pytest.approx(-d.mean, rel=1e-7)
    assert d.printed_antiderivative(1e9) == pytest.approx(0.0, abs=1e-12)
    x, h = 2.0, 1e-4
    slope = (d.printed_antiderivative(x + h) - d.printed_antiderivative(x - h)) / (2 * h)
    assert slope == pytest.approx(x * d.pdf(x), rel=1e-6)


def test_closed_form_report():
    report = SinrDist(LinkStats(1.0, 1.0, 0.1)).closed_form_report()
    assert report["closed_form_rel_error"] < 1e-7
    # the printed expression evaluated at x = 0 is off by a sign
    assert report["printed_rel_error"] == pytest.approx(2.0, rel=1e-6)

    free = SinrDist(LinkStats(1.0, 0.0, 0.1)).closed_form_report()
    assert free["quadrature_mean"] == pytest.approx(10.0, rel=1e-8)
    assert math.isnan(free["closed_form_mean"])


def test_closed_form_needs_interference():
    d = SinrDist(LinkStats(1.0, 0.0, 0.1))
    with pytest.raises(DomainError):
        d.mean_closed_form()
    with pytest.raises(DomainError):
        sinr_dist.mean(ExponentialSinrDist(LinkStats(1.0, 0.5, 0.1)), closed_form=True)


def test_scaled_identities():
    d = SinrDist(LinkStats(1.0, 0.2, 0.01))
    for x in (0.1, 1.0, 10.0):
        assert d.scaled_cdf(x) == d.cdf(d.mean * x)
        assert d.scaled_pdf(x) == pytest.approx(d.mean * d.pdf(d.mean * x), rel=1e-15)


def test_stochastic_dominance_in_signal_power():
    x = np.geomspace(1e-3, 1e3, 50)
    weak = SinrDist(LinkStats(1.0, 0.5, 0.1))
    strong = SinrDist(LinkStats(2.0, 0.5, 0.1))
    assert np.all(strong.cdf(x) < weak.cdf(x))


def test_negative_sinr_is_rejected():
    d = SinrDist(LinkStats(1.0, 1.0, 0.1))
    for fn in (d.pdf, d.cdf, d.scaled_pdf):
        with pytest.raises(DomainError):
            fn(-1.0)
    with pytest.raises(DomainError):
        d.pdf(np.array([1.0, np.nan]))


def test_monte_carlo_agreement(rng):
    d = SinrDist(LinkStats(1.0, 1.0, 0.1))
    samples = d.draw(rng, 1_000_000)
    assert stats.kstest(samples, d.cdf).statistic < 0.01


def test_exponential_law():
    link = LinkStats(1.0, 0.5, 0.25)
    d = ExponentialSinrDist(link)
    assert d.rate == pytest.approx(0.75)
    assert d.mean == pytest.approx(link.mean_power_sinr)
    assert integrate_semi_infinite(lambda x: x * d.pdf(x)) == pytest.approx(d.mean, abs=1e-8)
    assert d.cdf(2.0) == pytest.approx(1.0 - math.exp(-1.5))


def test_module_functions_delegate():
    d = SinrDist(LinkStats(1.0, 1.0, 0.1))
    assert sinr_dist.pdf(d, 0.5) == d.pdf(0.5)
    assert sinr_dist.cdf(d, 0.5) == d.cdf(0.5)
    assert sinr_dist.mean(d) == d.mean
    assert sinr_dist.mean(d, closed_form=True) == pytest.approx(d.mean, rel=1e-7)
    assert sinr_dist.scaled_cdf(d, 1.0) == d.scaled_cdf(1.0)
