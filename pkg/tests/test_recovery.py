# tests/test_recovery.py - Réplicas sembradas: recuperación de parámetros, residuos y órdenes
#
# Todas son `slow`; pytest.ini las excluye de la ejecución por defecto.

import numpy as np
import pytest

from models.priors import make_prior
from models.schemas import SamplerConfig
from models.series import TimeSeries
from models.specs import make_garch, make_sarima
from services.auto_order import stepwise_search
from services.nuts_sampler import sample
from services.posterior import posterior_residuals
from tests.conftest import simulate_arma, simulate_garch
from utils.series_ops import acf

REPLICATES = 20
CONFIG = dict(chains=2, iter=1000)


def _covers(fit, truth):
    """Parámetros cuyo intervalo creíble del 90% contiene el valor verdadero"""
    flat = fit.draws.flat()
    hits = {}
    for name, value in truth.items():
        lo, hi = np.quantile(flat[:, fit.draws.names.index(name)], [0.05, 0.95])
        hits[name] = bool(lo <= value <= hi)
    return hits


def _coverage(fits_and_truth):
    counts = {}
    for fit, truth in fits_and_truth:
        for name, hit in _covers(fit, truth).items():
            counts[name] = counts.get(name, 0) + int(hit)
    return counts


@pytest.mark.slow
def test_sarima_arma11_parameters_are_recovered():
    truth = {"mu0": 0.0, "sigma0": 1.0, "ar[1]": 0.5, "ma[1]": -0.3}
    runs = []
    for replicate in range(REPLICATES):
        y = TimeSeries(values=simulate_arma(300, phi=[0.5], theta=[-0.3], seed=2000 + replicate))
        fit = sample(make_sarima((1, 0, 1)), y, SamplerConfig(seed=replicate, **CONFIG))
        runs.append((fit, truth))
    counts = _coverage(runs)
    assert all(count >= 15 for count in counts.values()), counts


@pytest.mark.slow
def test_garch11_parameters_are_recovered():
    # α y β con priori uniforme: la normal(0, 0.5) truncada por defecto encoge β hacia 0
    truth = {"mu0": 0.0, "sigma0": 0.1, "arch[1]": 0.2, "garch[1]": 0.6}
    spec = make_garch(1, 1)
    spec = spec.with_prior("arch", make_prior("uniform", 0, 1)).with_prior("garch", make_prior("uniform", 0, 1))
    runs = []
    for replicate in range(REPLICATES):
        y = TimeSeries(values=simulate_garch(300, omega=0.1, alpha=0.2, beta=0.6, seed=3000 + replicate))
        fit = sample(spec, y, SamplerConfig(seed=replicate, **CONFIG))
        runs.append((fit, truth))
    counts = _coverage(runs)
    assert all(count >= 15 for count in counts.values()), counts


@pytest.mark.slow
def test_median_residuals_of_a_well_specified_fit_are_white():
    n = 200
    band = 2.0 / np.sqrt(n)
    white = 0
    for replicate in range(REPLICATES):
        y = TimeSeries(values=simulate_arma(n, phi=[0.5], seed=4000 + replicate))
        fit = sample(make_sarima((1, 0, 0)), y, SamplerConfig(seed=replicate, **CONFIG))
        residuals = np.median(posterior_residuals(fit), axis=0)
        correlations = acf(TimeSeries(values=residuals), 10)[1:]
        # Bajo ruido blanco el número de retardos fuera de la banda es Binomial(10, 0.046); P(≤ 2) ≈ 0.99
        white += int(np.sum(np.abs(correlations) > band) <= 2)
    assert white >= 18


@pytest.mark.slow
def test_white_noise_selects_the_empty_model():
    empty = 0
    for replicate in range(REPLICATES):
        y = TimeSeries(values=np.random.default_rng(5000 + replicate).normal(size=240))
        search = stepwise_search(y)
        best = search.best
        empty += int((best.order, best.seasonal) == ((0, 0, 0), (0, 0, 0)))
        bics = [c.bic for c in search.path]
        assert all(a > b for a, b in zip(bics, bics[1:]))
    assert empty >= 16


@pytest.mark.slow
def test_seasonal_autoregression_is_detected():
    # (1 - 0.4B)(1 - 0.5B^12) = 1 - 0.4B - 0.5B^12 + 0.2B^13
    phi = np.zeros(13)
    phi[0], phi[11], phi[12] = 0.4, 0.5, -0.2
    found = 0
    for replicate in range(REPLICATES):
        y = TimeSeries(values=simulate_arma(600, phi=phi, seed=6000 + replicate, burn=300), frequency=12)
        search = stepwise_search(y)
        found += int(search.best.p >= 1 and search.best.P >= 1)
        bics = [c.bic for c in search.path]
        assert all(a > b for a, b in zip(bics, bics[1:]))
    assert found >= 16
