# tests/conftest.py - Datos simulados y ajustes compartidos por los tests

import os

import numpy as np
import pytest
from scipy import signal

from models.schemas import SamplerConfig
from models.series import TimeSeries
from models.specs import make_garch, make_sarima
from services.nuts_sampler import sample

DATA_DIR = os.path.join(os.path.dirname(os.path.dirname(os.path.abspath(__file__))), "data")


def simulate_arma(n, phi=(), theta=(), sigma=1.0, mu=0.0, seed=0, burn=100):
    """ARMA(p,q) con la convención z_t = μ + Σφ z_{t-i} + ε_t - Σθ ε_{t-j}"""
    rng = np.random.default_rng(seed)
    e = sigma * rng.standard_normal(n + burn)
    ma = np.r_[1.0, -np.asarray(theta, dtype=float)]
    ar = np.r_[1.0, -np.asarray(phi, dtype=float)]
    z = signal.lfilter(ma, ar, e) + mu / (1.0 - np.sum(phi))
    return z[burn:]


def simulate_garch(n, omega=0.1, alpha=0.2, beta=0.6, mu=0.0, seed=0, burn=200):
    rng = np.random.default_rng(seed)
    y = np.empty(n + burn)
    s2 = omega / (1.0 - alpha - beta)
    e_prev = 0.0
    for t in range(n + burn):
        s2 = omega + alpha * e_prev ** 2 + beta * s2
        e_prev = np.sqrt(s2) * rng.standard_normal()
        y[t] = mu + e_prev
    return y[burn:]


@pytest.fixture(scope="session")
def data_dir():
    return DATA_DIR


@pytest.fixture(scope="session")
def ar1_series():
    return TimeSeries(values=simulate_arma(120, phi=[0.6], seed=11))


@pytest.fixture(scope="session")
def ar1_fit(ar1_series):
    spec = make_sarima((1, 0, 0))
    cfg = SamplerConfig(chains=2, iter=600, seed=42)
    return sample(spec, ar1_series, cfg, name="ar1")


@pytest.fixture(scope="session")
def white_noise_fit():
    y = TimeSeries(values=np.random.default_rng(5).normal(2.0, 1.0, 120))
    cfg = SamplerConfig(chains=2, iter=600, seed=7)
    return sample(make_sarima((0, 0, 0)), y, cfg, name="wn")


@pytest.fixture(scope="session")
def garch_fit():
    y = TimeSeries(values=simulate_garch(200, seed=3))
    cfg = SamplerConfig(chains=2, iter=400, seed=9)
    return sample(make_garch(1, 1), y, cfg, name="garch")
