# services/diagnostics.py - R-hat en cadenas divididas, ESS de Geyer y tabla resumen

import logging
from typing import List

import numpy as np
import pandas as pd

from config.settings import settings
from models.fit import FitResult
from models.schemas import SummaryRow
from utils.reports import render_fit_summary

logger = logging.getLogger(__name__)

SUMMARY_COLUMNS = ["mean", "se", "2.5%", "97.5%", "ess", "Rhat"]


def _as_chains(chains) -> np.ndarray:
    arr = np.asarray(chains, dtype=float)
    if arr.ndim == 1:
        arr = arr[None, :]
    return arr


def split_chains(chains: np.ndarray) -> np.ndarray:
    """Divide cada cadena en dos mitades (se descarta el draw central si n es impar)"""
    half = chains.shape[1] // 2
    return np.vstack([chains[:, :half], chains[:, -half:]])


def split_rhat(chains) -> float:
    """
    R-hat clásico sobre cadenas divididas

    Args:
        chains: (cadenas, draws) o un único vector

    Returns:
        sqrt((W(n-1)/n + B/n) / W), NaN si hay menos de 4 draws o W = 0
    """
    chains = _as_chains(chains)
    if chains.shape[1] < 4 or not np.all(np.isfinite(chains)):
        return float("nan")
    split = split_chains(chains)
    n = split.shape[1]
    within = np.mean(np.var(split, axis=1, ddof=1))
    if within <= 0.0:
        logger.warning("R-hat no definido: varianza intra-cadena nula (cadenas constantes)")
        return float("nan")
    between = n * np.var(split.mean(axis=1), ddof=1)
    return float(np.sqrt((within * (n - 1) / n + between / n) / within))


def autocovariance(x: np.ndarray) -> np.ndarray:
    """Autocovarianza (denominador n) por FFT"""
    n = x.size
    centered = x - x.mean()
    size = 2 ** int(np.ceil(np.log2(2 * n)))
    spectrum = np.fft.rfft(centered, size)
    return np.fft.irfft(spectrum * np.conjugate(spectrum), size)[:n] / n


def ess_bulk(chains) -> float:
    """
    Tamaño efectivo de muestra con la secuencia monótona inicial de Geyer

    Se calcula sobre las cadenas divididas y sin normalización por rangos.
    Las autocorrelaciones negativas pueden dar ESS mayor que el número de draws.
    """
    chains = _as_chains(chains)
    if chains.shape[1] < 4 or not np.all(np.isfinite(chains)):
        return float("nan")
    split = split_chains(chains)
    m, n = split.shape
    acov = np.array([autocovariance(chain) for chain in split])
    mean_var = np.mean(acov[:, 0]) * n / (n - 1.0)
    var_plus = mean_var * (n - 1.0) / n
    if m > 1:
        var_plus += np.var(split.mean(axis=1), ddof=1)
    if var_plus <= 0.0:
        logger.warning("ESS no definido: cadenas constantes")
        return float("nan")

    rho = np.zeros(n)
    rho_even, rho_odd = 1.0, 1.0 - (mean_var - np.mean(acov[:, 1])) / var_plus
    rho[0], rho[1] = rho_even, rho_odd

    # Secuencia positiva inicial: sumas por pares
    t = 1
    while t < n - 2 and rho_even + rho_odd >= 0.0:
        rho_even = 1.0 - (mean_var - np.mean(acov[:, t + 1])) / var_plus
        rho_odd = 1.0 - (mean_var - np.mean(acov[:, t + 2])) / var_plus
        rho[t + 1] = rho_even
        if rho_even + rho_odd >= 0.0:
            rho[t + 2] = rho_odd
        t += 2
    max_t = t

    # Secuencia monótona inicial
    t = 1
    while t <= max_t - 2:
        if rho[t + 1] + rho[t + 2] > rho[t - 1] + rho[t]:
            rho[t + 1] = (rho[t - 1] + rho[t]) / 2.0
            rho[t + 2] = rho[t + 1]
        t += 2

    tau = -1.0 + 2.0 * np.sum(rho[:max_t]) + np.sum(rho[max_t + 1:max_t + 2])
    tau = max(tau, 1.0 / np.log10(m * n))
    return float(m * n / tau)


def summarize_draws(name: str, chains) -> SummaryRow:
    chains = _as_chains(chains)
    flat = chains.reshape(-1)
    ess = ess_bulk(chains)
    sd = float(np.std(flat, ddof=1)) if flat.size > 1 else float("nan")
    q2_5, q97_5 = np.quantile(flat, [0.025, 0.975], method="linear")
    return SummaryRow(
        name=name,
        mean=float(np.mean(flat)),
        se=sd / np.sqrt(ess) if np.isfinite(ess) and ess > 0 else float("nan"),
        q2_5=float(q2_5),
        q97_5=float(q97_5),
        ess=ess,
        rhat=split_rhat(chains),
    )


def summarize(fit: FitResult) -> List[SummaryRow]:
    """
    Una fila por parámetro en el orden del layout y una fila final "loglik"

    Returns:
        Lista de SummaryRow (mean, se = sd/sqrt(ESS), cuantiles 2.5/97.5, ess, Rhat)
    """
    draws = fit.draws
    rows = [summarize_draws(name, draws.chains_of(name)) for name in draws.names]
    loglik = draws.loglik().reshape(draws.n_chains, draws.n_iter)
    rows.append(summarize_draws("loglik", loglik))
    return rows


def summary_frame(rows: List[SummaryRow]) -> pd.DataFrame:
    frame = pd.DataFrame(
        [[r.mean, r.se, r.q2_5, r.q97_5, r.ess, r.rhat] for r in rows],
        index=[r.name for r in rows],
        columns=SUMMARY_COLUMNS,
    )
    frame.index.name = "parameter"
    return frame


def summary_table(rows: List[SummaryRow]) -> str:
    """Tabla de ancho fijo con el formato del resumen impreso"""
    frame = summary_frame(rows)
    frame.index.name = None
    formatters = {column: "{:.4f}".format for column in SUMMARY_COLUMNS}
    formatters["ess"] = "{:.3f}".format
    return frame.to_string(formatters=formatters)


def summary_text(fit: FitResult) -> str:
    """Resumen completo: cabecera del modelo, tabla y pie sobre NUTS"""
    return render_fit_summary(fit, summary_table(summarize(fit)))


def summary_csv(fit: FitResult, path: str):
    summary_frame(summarize(fit)).to_csv(path, float_format=settings.FLOAT_FORMAT)
