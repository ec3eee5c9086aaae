import math

import numpy as np
import pytest
from scipy import special

from channel_model.mcs import SpectralEfficiency
from channel_model.scenario import LinkStats, build_link_stats
from channel_model.sinr_dist import ExponentialSinrDist, SinrDist
from pfs_model.pfs_analytic import (
    OPPORTUNISTIC, PFS, ScheduledSinr, ScheduledSinrModel, expected_rate_per_rb, expected_scheduled_sinr,
    opportunistic_mode, scheduled_sinr_cdf, scheduled_sinr_pdf, scheduling_probability, total_rate,
)
from utils.errors import DomainError, NonConvergence, NumericalError, SchedulingProbabilityUnderflow
from utils.numerics import integrate_semi_infinite


def laws(links):
    return [SinrDist(link) for link in links]


# =============================================================================
# Scheduling probability
# =============================================================================

def test_single_terminal_always_wins():
    assert scheduling_probability(laws([LinkStats(1.0, 1.0, 0.1)]), 0) == 1.0


@pytest.mark.parametrize("J", [2, 5, 20])
def test_identical_terminals_share_equally(J):
    links = laws([LinkStats(1.0, 1.0, 0.1)] * J)
    assert scheduling_probability(links, 0) == pytest.approx(1.0 / J, abs=1e-6)
    assert scheduling_probability(links, J - 1, mode=OPPORTUNISTIC) == pytest.approx(1.0 / J, abs=1e-6)


def test_asymmetric_pair_matches_argmax_sampling(mw_links, rng):
    links = laws(mw_links)
    p = [scheduling_probability(links, j) for j in range(2)]
    assert sum(p) == pytest.approx(1.0, abs=1e-6)

    draws = 400_000
    scaled = np.stack([d.draw(rng, draws) / d.mean for d in links])
    share = np.mean(np.argmax(scaled, axis=0) == 0)
    sigma = math.sqrt(p[0] * (1 - p[0]) / draws)
    assert abs(share - p[0]) < 4 * sigma


def test_opportunistic_pair_matches_argmax_sampling(mw_links, rng):
    links = laws(mw_links)
    result = opportunistic_mode(links, 0)
    draws = 400_000
    raw = np.stack([d.draw(rng, draws) for d in links])
    share = np.mean(np.argmax(raw, axis=0) == 0)
    sigma = math.sqrt(result.probability * (1 - result.probability) / draws)
    assert abs(share - result.probability) < 4 * sigma
    # the link with less interference wins more often on raw SINR
    assert result.probability < 0.5


def test_exponential_pair_closed_forms(exponential_links):
    links = laws(exponential_links)            # means 1 and 3
    assert scheduling_probability(links, 0) == pytest.approx(0.5, abs=1e-7)
    # P(X1 > X2) for rates 1 and 1/3
    assert scheduling_probability(links, 0, mode=OPPORTUNISTIC) == pytest.approx(0.25, abs=1e-7)


def test_joint_rescaling_leaves_probabilities_unchanged(mw_links):
    base = [scheduling_probability(laws(mw_links), j) for j in range(2)]
    rescaled = laws([mw_links[0].scaled(1e-9), mw_links[1]])
    assert [scheduling_probability(rescaled, j) for j in range(2)] == pytest.approx(base, abs=1e-6)


def test_bad_arguments():
    links = laws([LinkStats(1.0, 1.0, 0.1)] * 2)
    with pytest.raises(DomainError):
        ScheduledSinr(links, 2)
    with pytest.raises(DomainError):
        ScheduledSinr([], 0)
    with pytest.raises(DomainError):
        ScheduledSinr(links, 0, mode="round_robin")


# =============================================================================
# Scheduled-SINR law
# =============================================================================

def test_conditional_density_normalizes(mw_links):
    links = laws(mw_links)
    for j in range(2):
        cond = ScheduledSinr(links, j)
        mass = integrate_semi_infinite(cond.pdf, points=[cond.natural_scale, cond.law.tail_scale])
        assert mass == pytest.approx(1.0, abs=1e-5)


def test_max_of_two_exponentials():
    links = laws([LinkStats(1.0, 0.0, 1.0)] * 2)
    x = np.array([0.5, 1.0, 2.0])
    np.testing.assert_allclose(scheduled_sinr_pdf(links, 0, x), 2 * np.exp(-x) * (1 - np.exp(-x)), rtol=1e-7)
    np.testing.assert_allclose(scheduled_sinr_cdf(links, 0, x), (1 - np.exp(-x)) ** 2, atol=1e-4)
    assert expected_scheduled_sinr(links, 0) == pytest.approx(1.5, rel=1e-7)


def test_scheduled_sinr_scales_with_the_winner_mean(exponential_links):
    # under PFS both scaled SINRs are Exp(1), so E[X_j | win] = 1.5 E[X_j]
    assert expected_scheduled_sinr(laws(exponential_links), 1) == pytest.approx(4.5, rel=1e-7)


def test_cdf_is_monotone_and_bounded(mw_links):
    cond = ScheduledSinr(laws(mw_links), 1)
    x = np.concatenate([[0.0], np.geomspace(1e-4, 1e4, 200)])
    values = cond.cdf(x)
    assert values[0] == pytest.approx(0.0, abs=1e-9)
    assert values[-1] == pytest.approx(1.0, abs=1e-6)
    assert np.all(np.diff(values) >= 0)
    np.testing.assert_allclose(cond.ccdf(x), 1.0 - values)


def test_multi_user_diversity(mw_links):
    links = laws(mw_links * 3)
    for j in range(len(links)):
        assert expected_scheduled_sinr(links, j) > links[j].mean


def test_underflowed_probability():
    cond = ScheduledSinr(laws([LinkStats(1.0, 1.0, 0.1)] * 2), 0)
    cond.__dict__["probability"] = 0.0
    with pytest.raises(SchedulingProbabilityUnderflow):
        cond.pdf(1.0)
    assert cond.expected_efficiency(SpectralEfficiency.shannon()) == 0.0


def test_probability_far_outside_unit_interval_raises(monkeypatch):
    monkeypatch.setattr(ScheduledSinr, "integrate", lambda self, *args, **kwargs: 1.2)
    cond = ScheduledSinr(laws([LinkStats(1.0, 1.0, 0.1)] * 2), 1)
    with pytest.raises(NumericalError) as err:
        cond.probability
    assert err.value.terminal == 1


def test_probability_slightly_above_one_is_clipped_with_warning(monkeypatch, caplog):
    monkeypatch.setattr(ScheduledSinr, "integrate", lambda self, *args, **kwargs: 1.0 + 1e-9)
    cond = ScheduledSinr(laws([LinkStats(1.0, 1.0, 0.1)] * 2), 0)
    with caplog.at_level("WARNING", logger="pfs_model.pfs_analytic"):
        assert cond.probability == 1.0
    assert "clipped" in caplog.text


# =============================================================================
# Rates
# =============================================================================

def test_single_terminal_shannon_rate():
    # X ~ Exp(mean 10): E[log2(1 + X)] = e^{0.1} E1(0.1) / ln 2
    links = laws([LinkStats(10.0, 0.0, 1.0)])
    expected = 84e3 * math.exp(0.1) * special.exp1(0.1) / math.log(2.0)
    assert expected_rate_per_rb(links, 0, SpectralEfficiency.shannon(), 84e3) == pytest.approx(expected, rel=1e-7)


def test_constant_efficiency_rate_is_probability_times_value(mw_links):
    links = laws(mw_links)
    p = scheduling_probability(links, 0)
    rate = expected_rate_per_rb(links, 0, SpectralEfficiency.constant(2.0), 84e3)
    assert rate == pytest.approx(84e3 * 2.0 * p, rel=1e-12)


def test_model_over_lineup(small_lineup):
    model = ScheduledSinrModel.from_scenario(small_lineup)
    assert model.check_conservation() < 1e-4
    rates = model.total_rates()
    assert rates.shape == (5,)
    assert np.all(rates > 0)
    assert rates[0] > rates[-1]
    assert total_rate(model, 2) == pytest.approx(rates[2], rel=1e-12)


def test_rb_invariant_rate_is_n_times_per_rb(small_lineup):
    model = ScheduledSinrModel.from_scenario(small_lineup.with_changes(n_rbs=6))
    per_rb = model.rate_per_rb(3, 0)
    assert model.total_rate(3) == pytest.approx(6 * per_rb, rel=1e-12)
    assert len(model.representatives) == 1
    assert model.probabilities().shape == (5, 6)


def test_parallel_probabilities_match_serial(small_lineup):
    serial = ScheduledSinrModel.from_scenario(small_lineup).probabilities()
    threaded = ScheduledSinrModel.from_scenario(small_lineup).probabilities(n_jobs=2)
    np.testing.assert_array_equal(serial, threaded)


def test_ian_law_uses_exponential_links(small_lineup):
    model = ScheduledSinrModel.from_scenario(small_lineup, law="ian")
    assert all(isinstance(d, ExponentialSinrDist) for d in model.links(0))
    # exponential scaled SINRs are identically distributed under PFS
    np.testing.assert_allclose(model.probabilities()[:, 0], 0.2, atol=1e-6)


def test_numerical_errors_name_terminal_and_rb(small_lineup, monkeypatch):
    def fail(self, eff):
        raise NonConvergence("quadrature did not converge")

    monkeypatch.setattr(ScheduledSinr, "expected_efficiency", fail)
    model = ScheduledSinrModel.from_scenario(small_lineup)
    with pytest.raises(NonConvergence) as info:
        model.rate_per_rb(1, 0)
    assert (info.value.terminal, info.value.rb) == (1, 0)
    assert "terminal=1" in str(info.value)


def test_model_rejects_unknown_law(small_lineup):
    with pytest.raises(DomainError):
        ScheduledSinrModel(build_link_stats(small_lineup), law="rician")
    with pytest.raises(DomainError):
        ScheduledSinrModel(build_link_stats(small_lineup), mode="round_robin")


def test_opportunistic_mode_density():
    links = laws([LinkStats(1.0, 0.0, 1.0)] * 2)
    result = opportunistic_mode(links, 1, x=np.array([1.0]))
    assert result.probability == pytest.approx(0.5, abs=1e-8)
    assert result.density[0] == pytest.approx(2 * math.exp(-1) * (1 - math.exp(-1)), rel=1e-7)
    assert PFS != OPPORTUNISTIC
