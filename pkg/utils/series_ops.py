# utils/series_ops.py - Diferenciación, términos de Fourier y autocorrelaciones

import logging
import os
from typing import Optional, Sequence, Union

import numpy as np
import pandas as pd

from models.series import RegressorMatrix, TimeSeries
from utils.exceptions import (
    FourierDomainError,
    MissingRegressorsError,
    SeriesDimensionError,
    SeriesParseError,
    UndefinedCorrelationError,
)

logger = logging.getLogger(__name__)


def difference_polynomial(d: int, D: int, s: int) -> np.ndarray:
    """
    Coeficientes de (1-B)^d (1-B^s)^D en potencias crecientes de B

    Returns:
        Vector de longitud d + D*s + 1 con coeficiente 1 en B^0
    """
    poly = np.array([1.0])
    seasonal = np.zeros(s + 1)
    seasonal[0], seasonal[s] = 1.0, -1.0
    for _ in range(D):
        poly = np.convolve(poly, seasonal)
    for _ in range(d):
        poly = np.convolve(poly, [1.0, -1.0])
    return poly


def difference_array(x: np.ndarray, d: int, D: int, s: int) -> np.ndarray:
    """Diferencia un arreglo a lo largo del eje 0: primero las estacionales y luego las ordinarias"""
    out = np.asarray(x, dtype=float)
    for _ in range(D):
        out = out[s:] - out[:-s]
    for _ in range(d):
        out = out[1:] - out[:-1]
    return out


def difference(y: TimeSeries, d: int, D: int, s: int) -> TimeSeries:
    """
    Aplica (1-B)^d (1-B^s)^D a la serie

    Args:
        y: Serie original
        d: Diferencias ordinarias
        D: Diferencias estacionales
        s: Periodo estacional

    Returns:
        Serie de longitud n - d - D*s
    """
    if d < 0 or D < 0 or s < 1:
        raise SeriesDimensionError(f"órdenes de diferenciación inválidos: d={d}, D={D}, s={s}")
    lost = d + D * s
    if lost >= len(y):
        raise SeriesDimensionError(
            f"no se puede diferenciar una serie de {len(y)} observaciones con d={d}, D={D}, s={s}"
        )
    return TimeSeries(
        values=difference_array(y.values, d, D, s),
        frequency=y.frequency,
        start_index=y.start_index + lost,
        name=y.name,
    )


def undifference(dy: TimeSeries, d: int, D: int, s: int, head: Sequence[float]) -> TimeSeries:
    """
    Inversa de `difference`: reconstruye la serie a partir de los valores iniciales

    Args:
        dy: Serie diferenciada
        head: Los d + D*s valores que preceden a dy en la escala original

    Returns:
        Serie completa (head seguido de los valores reconstruidos)
    """
    head = np.asarray(head, dtype=float)
    lost = d + D * s
    if head.size != lost:
        raise SeriesDimensionError(f"se esperaban {lost} valores iniciales, recibidos {head.size}")
    if lost == 0:
        return TimeSeries(values=dy.values, frequency=dy.frequency, start_index=dy.start_index, name=dy.name)

    # y_t = dy_t + sum_k c_k y_{t-k}, con c_k = -poly[k]
    coefs = -difference_polynomial(d, D, s)[1:]
    out = np.empty(lost + len(dy))
    out[:lost] = head
    for t, z in enumerate(dy.values, start=lost):
        out[t] = z + np.dot(coefs, out[t - lost:t][::-1])
    return TimeSeries(values=out, frequency=dy.frequency, start_index=dy.start_index - lost, name=dy.name)


def fourier_terms(n: int, s: int, K: int, start: int = 1) -> RegressorMatrix:
    """
    Regresores armónicos sin(2πkt/s), cos(2πkt/s) para k = 1..K

    Args:
        n: Número de filas
        s: Periodo estacional
        K: Número de pares seno/coseno
        start: Índice temporal de la primera fila (t = start..start+n-1)
    """
    if n < 1 or K < 1:
        raise FourierDomainError(f"n y K deben ser positivos (n={n}, K={K})")
    if 2 * K > s:
        raise FourierDomainError(f"2K = {2 * K} excede el periodo s = {s}")
    t = np.arange(start, start + n, dtype=float)
    columns, labels = [], []
    for k in range(1, K + 1):
        angle = 2.0 * np.pi * k * t / s
        columns.extend([np.sin(angle), np.cos(angle)])
        labels.extend([f"S{k}-{s}", f"C{k}-{s}"])
    return RegressorMatrix(
        values=np.column_stack(columns), labels=labels, fourier_period=s, fourier_k=K
    )


def extend_regressors(xreg: RegressorMatrix, h: int, future: Optional[np.ndarray] = None) -> np.ndarray:
    """
    Filas de regresores para los h periodos siguientes a la muestra

    Los términos de Fourier continúan el mismo índice temporal; cualquier
    otro regresor necesita las filas futuras explícitas.
    """
    if future is not None:
        future = np.asarray(future, dtype=float).reshape(-1, xreg.n_cols)
        if future.shape[0] < h:
            raise MissingRegressorsError(f"se necesitan {h} filas de regresores futuros, recibidas {future.shape[0]}")
        return future[:h]
    if xreg.is_fourier:
        return fourier_terms(h, xreg.fourier_period, xreg.fourier_k, start=xreg.n_rows + 1).values
    raise MissingRegressorsError("el modelo tiene regresores externos: indique sus valores futuros")


def _centered(y: TimeSeries) -> np.ndarray:
    x = y.values - y.values.mean()
    denom = np.dot(x, x)
    if denom <= 0.0 or not np.isfinite(denom):
        raise UndefinedCorrelationError("autocorrelación no definida para una serie constante")
    return x


def acf(y: TimeSeries, max_lag: int) -> np.ndarray:
    """
    Autocorrelación muestral (denominador n), lag 0..max_lag

    Returns:
        Vector de longitud max_lag + 1 con acf[0] = 1
    """
    if max_lag < 1 or max_lag >= len(y):
        raise SeriesDimensionError(f"max_lag debe estar en [1, {len(y) - 1}]")
    x = _centered(y)
    denom = np.dot(x, x)
    n = x.size
    return np.array([1.0] + [np.dot(x[:n - k], x[k:]) / denom for k in range(1, max_lag + 1)])


def pacf(y: TimeSeries, max_lag: int) -> np.ndarray:
    """
    Autocorrelación parcial por Durbin-Levinson, lag 0..max_lag
    """
    rho = acf(y, max_lag)
    out = np.ones(max_lag + 1)
    phi = np.zeros(max_lag + 1)
    v = 1.0
    for k in range(1, max_lag + 1):
        if k == 1:
            phi_kk = rho[1]
        else:
            phi_kk = (rho[k] - np.dot(phi[1:k], rho[k - 1:0:-1])) / v
        new_phi = phi.copy()
        new_phi[k] = phi_kk
        new_phi[1:k] = phi[1:k] - phi_kk * phi[k - 1:0:-1]
        phi = new_phi
        v *= 1.0 - phi_kk ** 2
        out[k] = phi_kk
    return out


def load_csv(path: str, column: Union[str, int] = 0, frequency: int = 1, header: bool = True) -> TimeSeries:
    """
    Lee una columna numérica de un CSV (UTF-8, separador decimal '.')

    Args:
        path: Ruta del archivo
        column: Nombre o índice de la columna
        frequency: Periodo estacional de la serie
        header: Si la primera fila es cabecera

    Returns:
        TimeSeries en el orden del archivo
    """
    if not os.path.exists(path):
        raise SeriesParseError(f"no existe el archivo de datos: {path}")
    try:
        frame = pd.read_csv(path, header=0 if header else None, dtype=str,
                            keep_default_na=False, encoding="utf-8")
    except pd.errors.EmptyDataError:
        raise SeriesParseError(f"el archivo {path} está vacío")

    if isinstance(column, str) and column.isdigit() and column not in frame.columns:
        column = int(column)
    if isinstance(column, int):
        if column < 0 or column >= frame.shape[1]:
            raise SeriesParseError(f"columna {column} fuera de rango en {path}")
        raw = frame.iloc[:, column]
    else:
        if column not in frame.columns:
            raise SeriesParseError(f"no existe la columna '{column}' en {path}")
        raw = frame[column]

    if raw.empty:
        raise SeriesParseError(f"el archivo {path} no contiene observaciones")

    values = pd.to_numeric(raw.str.strip(), errors="coerce").to_numpy(dtype=float)
    bad = np.flatnonzero(~np.isfinite(values))
    if bad.size:
        row = int(bad[0])
        raise SeriesParseError(f"valor no numérico o no finito en la fila {row}: '{raw.iloc[row]}'")

    logger.info(f"Serie cargada desde {path}: {values.size} observaciones (frecuencia {frequency})")
    return TimeSeries(values=values, frequency=frequency)
