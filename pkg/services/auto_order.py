# services/auto_order.py - Selección automática del orden SARIMA (búsqueda stepwise por BIC)

import logging
from typing import Dict, List, NamedTuple, Optional, Tuple

import numpy as np
from scipy import optimize

from models.fit import FitResult
from models.schemas import OrderCandidate, SamplerConfig
from models.series import RegressorMatrix, TimeSeries
from models.specs import make_sarima
from models.likelihood import sarima_components
from models.transforms import constrain
from services.nuts_sampler import sample
from utils import dual
from utils.exceptions import ModelSpecError, SeriesTooShortError
from utils.series_ops import difference_array

logger = logging.getLogger(__name__)

MAX_P, MAX_Q = 5, 5
MAX_SP, MAX_SQ = 2, 2
MAX_D = 2
SEASONAL_STRENGTH_THRESHOLD = 0.64
VARIANCE_REDUCTION = 0.10


class CssResult(NamedTuple):
    loglik: float
    bic: float
    converged: bool
    theta: Dict[str, float]


class SearchResult(NamedTuple):
    best: OrderCandidate
    candidates: List[OrderCandidate]
    path: List[OrderCandidate]
    s: int


def _moving_average_trend(x: np.ndarray, s: int) -> np.ndarray:
    """Tendencia por media móvil centrada (2×s si s es par); NaN en los extremos"""
    if s % 2 == 0:
        weights = np.r_[0.5, np.ones(s - 1), 0.5] / s
    else:
        weights = np.ones(s) / s
    half = weights.size // 2
    trend = np.full(x.size, np.nan)
    trend[half:x.size - half] = np.convolve(x, weights, mode="valid")
    return trend


def seasonal_strength(y: TimeSeries, s: int) -> float:
    """
    Fuerza estacional de una descomposición clásica

    Returns:
        max(0, 1 - Var(resto) / Var(resto + estacional)), en [0, 1]
    """
    x = y.values
    detrended = x - _moving_average_trend(x, s)
    phase = np.arange(x.size) % s
    means = np.array([np.nanmean(detrended[phase == k]) for k in range(s)])
    seasonal = (means - means.mean())[phase]
    ok = np.isfinite(detrended)
    remainder = detrended[ok] - seasonal[ok]
    total = np.var(remainder + seasonal[ok])
    if total <= 0.0:
        return 0.0
    return float(max(0.0, 1.0 - np.var(remainder) / total))


def select_differences(y: TimeSeries, s: Optional[int] = None) -> Tuple[int, int]:
    """
    Elige (d, D) por heurísticas de fuerza estacional y reducción de varianza

    D = 1 si la fuerza estacional supera 0.64; después se diferencia mientras
    la varianza de la serie diferenciada baje más de un 10% (d <= 2).

    Args:
        y: Serie observada
        s: Periodo estacional (por defecto la frecuencia de la serie)
    """
    s = s or y.frequency
    if len(y) <= 3 * s:
        raise SeriesTooShortError(f"la selección de diferencias necesita n > 3s ({len(y)} <= {3 * s})")

    D = 0
    if s > 1:
        strength = seasonal_strength(y, s)
        logger.debug(f"Fuerza estacional (s={s}): {strength:.4f}")
        if strength > SEASONAL_STRENGTH_THRESHOLD:
            D = 1

    current = difference_array(y.values, 0, D, s)
    d = 0
    while d < MAX_D and current.size > 2:
        candidate = np.diff(current)
        if np.var(candidate) < (1.0 - VARIANCE_REDUCTION) * np.var(current):
            current, d = candidate, d + 1
        else:
            break
    logger.info(f"Diferencias seleccionadas: d={d}, D={D}")
    return d, D


def css_fit(y: TimeSeries, order=(0, 0, 0), seasonal=(0, 0, 0), s: int = 1,
            xreg: Optional[RegressorMatrix] = None) -> CssResult:
    """
    Ajuste rápido por suma de cuadrados condicional (prioris planas)

    La recursión es la del modelo completo; σ se perfila como sqrt(SSE / n_eff)
    y el resto de parámetros se optimiza con BFGS desde cero en la escala no
    restringida.

    Returns:
        CssResult con loglik, BIC = k·ln(n_eff) - 2·loglik y estimaciones
    """
    spec = make_sarima(order, seasonal, s, xreg)
    n_eff = spec.n_effective(y)
    k = spec.n_params
    if n_eff <= k + 2:
        raise ModelSpecError(f"{spec.label()}: {n_eff} observaciones efectivas para {k} parámetros")
    sigma_index = [entry.name for entry in spec.layout].index("sigma0")
    free = np.array([i != sigma_index for i in range(k)])

    def full(v):
        u = np.zeros(k)
        u[free] = v
        return u

    def objective(v):
        u = dual.variables(full(v))
        with np.errstate(all="ignore"):
            theta, _ = constrain(spec, u)
            eps, _ = sarima_components(spec, y, theta)
            sse = dual.total(dual.square(eps))
        value = float(dual.value(sse))
        if not np.isfinite(value) or value <= 0.0:
            return np.inf, np.zeros(free.sum())
        grad = np.asarray(sse.tan, dtype=float).reshape(k)[free] if dual.is_dual(sse) else np.zeros(free.sum())
        # Log-verosimilitud perfilada cambiada de signo, sin constantes
        return 0.5 * n_eff * np.log(value), 0.5 * n_eff * grad / value

    result = optimize.minimize(objective, np.zeros(free.sum()), jac=True, method="BFGS")
    u_hat = full(result.x)
    theta, _ = constrain(spec, u_hat)
    eps, _ = sarima_components(spec, y, theta)
    sigma2 = float(np.mean(np.square(eps)))
    loglik = -0.5 * n_eff * (np.log(2.0 * np.pi * sigma2) + 1.0)
    # status 2: pérdida de precisión en el óptimo
    converged = bool(np.isfinite(loglik) and (result.success or result.status == 2))
    estimates = {name: float(dual.value(value)) for name, value in theta.items()}
    estimates["sigma0"] = float(np.sqrt(sigma2))
    bic = k * np.log(n_eff) - 2.0 * loglik
    return CssResult(loglik=float(loglik), bic=float(bic), converged=converged, theta=estimates)


def _candidate(y, p, d, q, P, D, Q, s, xreg) -> OrderCandidate:
    try:
        result = css_fit(y, (p, d, q), (P, D, Q), s, xreg)
        bic, converged = result.bic, result.converged
    except (ModelSpecError, np.linalg.LinAlgError, ValueError) as e:
        logger.debug(f"Candidato ({p},{d},{q})({P},{D},{Q}) descartado: {str(e)}")
        bic, converged = float("inf"), False
    if not converged:
        bic = float("inf")
    candidate = OrderCandidate(p=p, d=d, q=q, P=P, D=D, Q=Q, bic=bic, converged=converged)
    logger.info(f"Candidato {candidate.label(s)}: BIC={bic:.4f}")
    return candidate


def stepwise_search(y: TimeSeries, s: Optional[int] = None, xreg: Optional[RegressorMatrix] = None,
                    d: Optional[int] = None, D: Optional[int] = None) -> SearchResult:
    """
    Búsqueda stepwise por BIC sobre (p, q, P, Q) con (d, D) fijos

    Se parte del mejor de los modelos iniciales y se pasa al vecino (±1 en un
    orden) con menor BIC mientras mejore al actual. La búsqueda es determinista.

    Returns:
        SearchResult con el orden elegido, todos los candidatos evaluados y la
        secuencia de modelos aceptados
    """
    s = s or y.frequency
    if d is None or D is None:
        d_sel, D_sel = select_differences(y, s)
        d = d_sel if d is None else d
        D = D_sel if D is None else D
    seasonal = s > 1

    seeds = [(2, 2, 1, 1), (0, 0, 0, 0), (1, 0, 1, 0), (0, 1, 0, 1)]
    if not seasonal:
        seeds = [(p, q, 0, 0) for p, q, _, _ in seeds]

    evaluated: Dict[Tuple[int, int, int, int], OrderCandidate] = {}

    def evaluate(key):
        if key not in evaluated:
            p, q, P, Q = key
            evaluated[key] = _candidate(y, p, d, q, P, D, Q, s, xreg)
        return evaluated[key]

    for key in dict.fromkeys(seeds):
        evaluate(key)
    incumbent = min(evaluated.values(), key=lambda c: c.bic)
    path = [incumbent]

    while np.isfinite(incumbent.bic):
        caps = (MAX_P, MAX_Q, MAX_SP if seasonal else 0, MAX_SQ if seasonal else 0)
        current = (incumbent.p, incumbent.q, incumbent.P, incumbent.Q)
        neighbors = []
        for i in range(4):
            for step in (-1, 1):
                key = list(current)
                key[i] += step
                if 0 <= key[i] <= caps[i]:
                    neighbors.append(evaluate(tuple(key)))
        best = min(neighbors, key=lambda c: c.bic, default=incumbent)
        if best.bic >= incumbent.bic:
            break
        incumbent = best
        path.append(incumbent)

    if not np.isfinite(incumbent.bic):
        logger.warning(f"Ningún candidato convergió; se usa (0,{d},0)(0,{D},0)[{s}]")
        incumbent = OrderCandidate(p=0, d=d, q=0, P=0, D=D, Q=0, bic=float("inf"), converged=False)
        path = [incumbent]
    logger.info(f"Orden seleccionado: {incumbent.label(s)} (BIC={incumbent.bic:.4f}, {len(evaluated)} candidatos)")
    return SearchResult(best=incumbent, candidates=list(evaluated.values()), path=path, s=s)


def fit_order(y: TimeSeries, search: SearchResult, cfg: Optional[SamplerConfig] = None,
              xreg: Optional[RegressorMatrix] = None, name: str = "model") -> FitResult:
    """Ajuste bayesiano completo del orden elegido con las prioris por defecto"""
    spec = make_sarima(search.best.order, search.best.seasonal, search.s, xreg)
    return sample(spec, y, cfg, name)


def auto_sarima(y: TimeSeries, s: Optional[int] = None, cfg: Optional[SamplerConfig] = None,
                xreg: Optional[RegressorMatrix] = None, name: str = "model") -> FitResult:
    """
    Selección stepwise por BIC y ajuste NUTS del modelo ganador

    Args:
        y: Serie observada
        s: Periodo estacional (por defecto la frecuencia de la serie)
        cfg: Opciones del muestreador para el ajuste final
    """
    search = stepwise_search(y, s, xreg)
    return fit_order(y, search, cfg, xreg, name)
