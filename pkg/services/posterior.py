# services/posterior.py - Valores ajustados, residuos y predicción a posteriori

import logging
from typing import Dict, Optional

import numpy as np
import pandas as pd

from config.settings import settings
from models.fit import FitResult, PredictiveDraws
from models.likelihood import expand_lag_polynomial, garch_variance
from models.series import TimeSeries
from utils.exceptions import ModelSpecError
from utils.series_ops import acf, difference_array, difference_polynomial, extend_regressors, pacf

logger = logging.getLogger(__name__)


def _family(fit: FitResult) -> str:
    family = getattr(fit.spec, "family", None)
    if family not in ("sarima", "garch"):
        raise ModelSpecError(f"{fit.spec.label()} no es un modelo de series temporales")
    return family


def _columns(fit: FitResult) -> Dict[str, np.ndarray]:
    """Parámetro -> vector de draws (orden por cadenas)"""
    flat = fit.draws.flat()
    return {name: flat[:, j] for j, name in enumerate(fit.draws.names)}


def _group(columns: Dict[str, np.ndarray], name: str, count: int) -> list:
    return [columns[f"{name}[{i}]"] for i in range(1, count + 1)]


def _differenced(fit: FitResult) -> np.ndarray:
    spec = fit.spec
    return difference_array(fit.y.values, spec.d, spec.D, spec.s)


def posterior_fit(fit: FitResult) -> np.ndarray:
    """
    Valores ajustados de cada draw

    Returns:
        (draws, n_eff): media condicional en la escala diferenciada (SARIMA)
        o desviación condicional σ_t (GARCH)
    """
    _family(fit)
    rows = []
    with np.errstate(all="ignore"):
        for u in fit.draws.flat_unconstrained():
            rows.append(fit.spec.log_posterior(fit.y, u).fitted)
    return np.array(rows)


def posterior_residuals(fit: FitResult) -> np.ndarray:
    """
    Residuos de cada draw: z_t - ẑ_t (SARIMA) o ε_t / σ_t estandarizados (GARCH)

    Returns:
        (draws, n_eff)
    """
    fitted = posterior_fit(fit)
    if fit.spec.family == "sarima":
        return _differenced(fit)[None, :] - fitted
    mu0 = _columns(fit)["mu0"]
    return (fit.y.values[None, :] - mu0[:, None]) / fitted


def _future_regressors(fit: FitResult, h: int, future_xreg) -> np.ndarray:
    """Regresores diferenciados de los h periodos futuros"""
    spec = fit.spec
    future = extend_regressors(spec.xreg, h, future_xreg)
    full = np.vstack([spec.xreg.values, future])
    return difference_array(full, spec.d, spec.D, spec.s)[-h:]


def _undifference_paths(z_future: np.ndarray, head: np.ndarray, d: int, D: int, s: int) -> np.ndarray:
    lost = head.size
    if lost == 0:
        return z_future
    n_draws, h = z_future.shape
    coefs = -difference_polynomial(d, D, s)[1:]
    out = np.empty((n_draws, lost + h))
    out[:, :lost] = head
    for t in range(h):
        k = lost + t
        out[:, k] = z_future[:, t] + out[:, k - lost:k][:, ::-1] @ coefs
    return out[:, lost:]


def _predict_sarima(fit: FitResult, h: int, rng: np.random.Generator, future_xreg) -> np.ndarray:
    spec = fit.spec
    cols = _columns(fit)
    n_draws = fit.draws.n_draws
    z = _differenced(fit)
    n_eff = z.size

    eps = z[None, :] - posterior_fit(fit)
    w = np.repeat(z[None, :], n_draws, axis=0)
    reg_future = np.zeros((n_draws, h))
    if spec.xreg is not None:
        b = np.column_stack(_group(cols, "breg", spec.n_reg))
        xd = difference_array(spec.xreg.values, spec.d, spec.D, spec.s)
        w = w - b @ xd.T
        reg_future = b @ _future_regressors(fit, h, future_xreg).T

    ar = expand_lag_polynomial(_group(cols, "ar", spec.p), _group(cols, "sar", spec.P), spec.s)
    ma = expand_lag_polynomial(_group(cols, "ma", spec.q), _group(cols, "sma", spec.Q), spec.s)
    pad = max(list(ar) + list(ma) + [0])

    w_hist = np.zeros((n_draws, pad + n_eff + h))
    e_hist = np.zeros_like(w_hist)
    w_hist[:, pad:pad + n_eff] = w
    e_hist[:, pad:pad + n_eff] = eps
    shocks = cols["sigma0"][:, None] * rng.standard_normal((n_draws, h))

    for t in range(h):
        k = pad + n_eff + t
        value = cols["mu0"] + shocks[:, t]
        for lag, a in ar.items():
            value = value + a * w_hist[:, k - lag]
        for lag, m in ma.items():
            value = value - m * e_hist[:, k - lag]
        w_hist[:, k] = value
        e_hist[:, k] = shocks[:, t]

    z_future = w_hist[:, pad + n_eff:] + reg_future
    head = fit.y.values[len(fit.y) - spec.lost:]
    return _undifference_paths(z_future, head, spec.d, spec.D, spec.s)


def _predict_garch(fit: FitResult, h: int, rng: np.random.Generator) -> np.ndarray:
    spec = fit.spec
    cols = _columns(fit)
    n_draws = fit.draws.n_draws
    n = len(fit.y)

    e2_hist = np.zeros((n_draws, n + h))
    s2_hist = np.zeros((n_draws, n + h))
    with np.errstate(all="ignore"):
        for row in range(n_draws):
            theta = {name: float(values[row]) for name, values in cols.items()}
            eps, sigma2 = garch_variance(spec, fit.y, theta)
            e2_hist[row, :n] = np.square(eps)
            s2_hist[row, :n] = sigma2

    if spec.student_t:
        v = cols["dfv"]
        shocks = rng.standard_t(np.repeat(v[:, None], h, axis=1)) * np.sqrt((v - 2.0) / v)[:, None]
    else:
        shocks = rng.standard_normal((n_draws, h))

    alphas = _group(cols, "arch", spec.s_arch)
    betas = _group(cols, "garch", spec.k_garch)
    out = np.empty((n_draws, h))
    for t in range(h):
        k = n + t
        s2 = cols["sigma0"].copy()
        for i, alpha in enumerate(alphas, start=1):
            s2 += alpha * e2_hist[:, k - i]
        for j, beta in enumerate(betas, start=1):
            s2 += beta * s2_hist[:, k - j]
        e = np.sqrt(s2) * shocks[:, t]
        s2_hist[:, k] = s2
        e2_hist[:, k] = e * e
        out[:, t] = cols["mu0"] + e
    return out


def posterior_predict(fit: FitResult, h: int, seed: Optional[int] = None,
                      future_xreg: Optional[np.ndarray] = None) -> PredictiveDraws:
    """
    Simula la distribución predictiva a h pasos

    Cada draw posterior genera una trayectoria con innovaciones nuevas; la
    parte diferenciada se reconstruye con las últimas d + D*s observaciones.

    Args:
        fit: Ajuste SARIMA o GARCH
        h: Horizonte (>= 1)
        seed: Semilla de las innovaciones (TSBAYES_DEFAULT_SEED por defecto)
        future_xreg: Filas futuras de los regresores externos (los de Fourier se extienden solos)

    Returns:
        PredictiveDraws (draws × h) en la escala original
    """
    if h < 1:
        raise ValueError("el horizonte debe ser >= 1")
    family = _family(fit)
    rng = np.random.default_rng(settings.DEFAULT_SEED if seed is None else seed)
    if family == "sarima":
        paths = _predict_sarima(fit, h, rng, future_xreg)
    else:
        paths = _predict_garch(fit, h, rng)
    logger.info(f"Predicción de {fit.spec.label()}: {paths.shape[0]} trayectorias a {h} pasos")
    return PredictiveDraws(draws=paths, start_index=fit.y.start_index + len(fit.y))


def forecast_table(pred: PredictiveDraws) -> pd.DataFrame:
    q5, q50, q95 = np.quantile(pred.draws, [0.05, 0.5, 0.95], axis=0, method="linear")
    return pd.DataFrame({
        "horizon": np.arange(1, pred.horizon + 1),
        "mean": pred.draws.mean(axis=0),
        "q5": q5,
        "q50": q50,
        "q95": q95,
    })


def quantile_table(matrix: np.ndarray, start_index: int = 1) -> pd.DataFrame:
    """Cuantiles 2.5/50/97.5 por índice temporal de una matriz (draws × tiempo)"""
    q_low, q_mid, q_high = np.quantile(matrix, [0.025, 0.5, 0.975], axis=0, method="linear")
    return pd.DataFrame({
        "t": np.arange(start_index, start_index + matrix.shape[1]),
        "q2.5": q_low,
        "q50": q_mid,
        "q97.5": q_high,
    })


def _effective_start(fit: FitResult) -> int:
    return fit.y.start_index + len(fit.y) - fit.n_effective


def fitted_quantiles(fit: FitResult) -> pd.DataFrame:
    return quantile_table(posterior_fit(fit), _effective_start(fit))


def residual_quantiles(fit: FitResult) -> pd.DataFrame:
    return quantile_table(posterior_residuals(fit), _effective_start(fit))


def residual_correlogram(fit: FitResult, max_lag: Optional[int] = None) -> pd.DataFrame:
    """
    acf y pacf de la mediana posterior de los residuos

    Args:
        max_lag: Retardo máximo (por defecto min(10·log10(n), n-1))
    """
    median = np.median(posterior_residuals(fit), axis=0)
    n = median.size
    if max_lag is None:
        max_lag = max(1, min(int(10 * np.log10(n)), n - 1))
    series = TimeSeries(values=median, frequency=fit.y.frequency)
    lags = np.arange(max_lag + 1)
    return pd.DataFrame({"lag": lags, "acf": acf(series, max_lag), "pacf": pacf(series, max_lag)})


def trace_data(fit: FitResult) -> pd.DataFrame:
    """Tabla larga (chain, iteration, parameter, value) con los datos de las trazas"""
    draws = fit.draws
    chains, iters, n_params = draws.draws.shape
    return pd.DataFrame({
        "chain": np.repeat(np.arange(1, chains + 1), iters * n_params),
        "iteration": np.tile(np.repeat(np.arange(1, iters + 1), n_params), chains),
        "parameter": np.tile(draws.names, chains * iters),
        "value": draws.draws.reshape(-1),
    })
