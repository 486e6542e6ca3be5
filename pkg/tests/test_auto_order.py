import numpy as np
import pytest

from models.series import TimeSeries
from services.auto_order import css_fit, seasonal_strength, select_differences, stepwise_search
from tests.conftest import simulate_arma
from utils.exceptions import ModelSpecError, SeriesTooShortError


def test_white_noise_needs_no_differences():
    y = TimeSeries(values=np.random.default_rng(0).normal(size=200))
    assert select_differences(y) == (0, 0)


def test_random_walk_needs_one_difference():
    y = TimeSeries(values=np.cumsum(np.random.default_rng(1).normal(size=200)))
    assert select_differences(y) == (1, 0)


def test_strong_seasonality_gets_a_seasonal_difference():
    t = np.arange(120)
    values = 5 * np.sin(2 * np.pi * t / 12) + np.random.default_rng(2).normal(scale=0.3, size=t.size)
    y = TimeSeries(values=values, frequency=12)
    assert seasonal_strength(y, 12) > 0.9
    assert select_differences(y)[1] == 1


def test_select_differences_requires_three_seasons():
    with pytest.raises(SeriesTooShortError):
        select_differences(TimeSeries(values=np.zeros(36), frequency=12))


def test_css_white_noise_has_closed_form():
    values = np.random.default_rng(3).normal(1.5, 2.0, size=150)
    result = css_fit(TimeSeries(values=values))
    sigma2 = np.var(values)
    expected = -0.5 * values.size * (np.log(2 * np.pi * sigma2) + 1.0)
    assert result.converged
    assert result.loglik == pytest.approx(expected, rel=1e-6)
    assert result.theta["mu0"] == pytest.approx(values.mean(), abs=1e-4)
    assert result.bic == pytest.approx(2 * np.log(150) - 2 * result.loglik)


def test_css_recovers_ar_coefficient():
    y = TimeSeries(values=simulate_arma(500, phi=[0.7], seed=4))
    result = css_fit(y, (1, 0, 0))
    assert result.theta["ar[1]"] == pytest.approx(0.7, abs=0.08)


def test_css_rejects_overparameterized_models():
    with pytest.raises(ModelSpecError):
        css_fit(TimeSeries(values=np.random.default_rng(5).normal(size=6)), (2, 0, 2))


def test_stepwise_search_stops_at_a_local_optimum():
    y = TimeSeries(values=simulate_arma(300, phi=[0.6], seed=6))
    search = stepwise_search(y, d=0, D=0)
    best = search.best
    assert best.p >= 1
    for candidate in search.candidates:
        distance = abs(candidate.p - best.p) + abs(candidate.q - best.q)
        if distance == 1:
            assert candidate.bic >= best.bic
    bics = [c.bic for c in search.path]
    assert all(a > b for a, b in zip(bics, bics[1:]))


def test_stepwise_search_is_deterministic():
    y = TimeSeries(values=simulate_arma(150, phi=[0.4], theta=[0.3], seed=7))
    first = stepwise_search(y, d=0, D=0)
    second = stepwise_search(y, d=0, D=0)
    assert first.best == second.best
    assert [c.label(1) for c in first.candidates] == [c.label(1) for c in second.candidates]


def test_non_seasonal_search_never_proposes_seasonal_terms():
    y = TimeSeries(values=simulate_arma(120, phi=[0.5], seed=8))
    search = stepwise_search(y, d=0, D=0)
    assert all(c.P == 0 and c.Q == 0 for c in search.candidates)


def test_variance_rule_differences_persistent_stationary_ar():
    # Var(Δz) = 2(1-φ)·Var(z): con φ=0.6 la varianza cae un 20%
    y = TimeSeries(values=simulate_arma(300, phi=[0.6], seed=6))
    assert select_differences(y) == (1, 0)
