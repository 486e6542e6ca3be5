# services/model_selection.py - Criterios de información, WAIC, PSIS-LOO y factores de Bayes

import logging
from typing import List, Optional, Sequence

import numpy as np
import pandas as pd
from scipy import special, stats

from config.settings import settings
from models.fit import FitResult
from models.schemas import BridgeResult, LooResult, WaicResult
from services.diagnostics import ess_bulk
from utils.exceptions import BridgeSamplingError, IncomparableModelsError, InformationCriterionError

logger = logging.getLogger(__name__)

PARETO_K_THRESHOLD = 0.7
WAIC_VARIANCE_THRESHOLD = 0.4
MIN_BRIDGE_DRAWS = 1000
BRIDGE_TOLERANCE = 1e-10
BRIDGE_MAX_ITER = 1000


# Criterios de información sobre la log-verosimilitud media a posteriori
def loglik(fit: FitResult) -> np.ndarray:
    """Log-verosimilitud total de cada draw (orden por cadenas)"""
    return fit.draws.loglik()


def aic_value(mean_loglik: float, k: int) -> float:
    return 2.0 * k - 2.0 * mean_loglik


def aicc_value(mean_loglik: float, k: int, n_eff: int) -> float:
    if n_eff <= k + 1:
        raise InformationCriterionError(f"AICc no definido: n_eff={n_eff} <= k+1={k + 1}")
    return aic_value(mean_loglik, k) + 2.0 * k * (k + 1) / (n_eff - k - 1)


def bic_value(mean_loglik: float, k: int, n_eff: int) -> float:
    return k * np.log(n_eff) - 2.0 * mean_loglik


def aic(fit: FitResult) -> float:
    return aic_value(float(np.mean(loglik(fit))), fit.n_params)


def aicc(fit: FitResult) -> float:
    return aicc_value(float(np.mean(loglik(fit))), fit.n_params, fit.n_effective)


def bic(fit: FitResult) -> float:
    return bic_value(float(np.mean(loglik(fit))), fit.n_params, fit.n_effective)


def _pointwise(source) -> np.ndarray:
    if isinstance(source, FitResult):
        return source.draws.pointwise_loglik
    return np.asarray(source, dtype=float)


def _se(values: np.ndarray) -> float:
    n = values.size
    if n < 2:
        return 0.0
    return float(np.sqrt(n * np.var(values, ddof=1)))


def waic(source) -> WaicResult:
    """
    WAIC a partir de la matriz (draws × observaciones) de log-verosimilitud puntual

    Args:
        source: FitResult o matriz de log-verosimilitud puntual
    """
    ll = _pointwise(source)
    n_draws = ll.shape[0]
    lpd = special.logsumexp(ll, axis=0) - np.log(n_draws)
    p_i = np.var(ll, axis=0, ddof=1) if n_draws > 1 else np.zeros(ll.shape[1])
    elpd_i = lpd - p_i
    n_high = int(np.sum(p_i > WAIC_VARIANCE_THRESHOLD))
    if n_high:
        logger.warning(
            f"WAIC poco fiable: {n_high} observaciones con varianza de log-verosimilitud > {WAIC_VARIANCE_THRESHOLD}"
        )
    elpd = float(np.sum(elpd_i))
    se = _se(elpd_i)
    return WaicResult(
        elpd_waic=elpd,
        se_elpd_waic=se,
        p_waic=float(np.sum(p_i)),
        se_p_waic=_se(p_i),
        waic=-2.0 * elpd,
        se_waic=2.0 * se,
        pointwise=elpd_i.tolist(),
    )


def gpd_fit(tail: np.ndarray):
    """
    Estimación bayesiana empírica (k, sigma) de la Pareto generalizada

    Args:
        tail: Excesos ordenados de forma creciente
    """
    prior_bs, prior_k = 3, 10
    n = tail.size
    m_est = 30 + int(n ** 0.5)
    b = 1.0 - np.sqrt(m_est / (np.arange(1, m_est + 1, dtype=float) - 0.5))
    b /= prior_bs * tail[int(n / 4 + 0.5) - 1]
    b += 1.0 / tail[-1]
    k = np.log1p(-b[:, None] * tail).mean(axis=1)
    len_scale = n * (np.log(-(b / k)) - k - 1.0)
    weights = 1.0 / np.exp(len_scale - len_scale[:, None]).sum(axis=1)
    keep = weights >= 10 * np.finfo(float).eps
    weights, b = weights[keep], b[keep]
    weights /= weights.sum()
    b_post = np.sum(b * weights)
    k_post = np.log1p(-b_post * tail).mean()
    sigma = -k_post / b_post
    # Encogimiento de k hacia 0.5
    k_post = (n * k_post + prior_k * 0.5) / (n + prior_k)
    return k_post, sigma


def gpd_quantile(probs: np.ndarray, k: float, sigma: float) -> np.ndarray:
    if sigma <= 0:
        return np.full_like(probs, np.nan)
    if abs(k) < np.finfo(float).eps:
        return -sigma * np.log1p(-probs)
    return sigma * np.expm1(-k * np.log1p(-probs)) / k


def psis_smooth(log_ratios: np.ndarray):
    """
    Suavizado de Pareto de un vector de log-ratios de importancia

    Returns:
        (log-pesos normalizados, k de Pareto)
    """
    x = np.array(log_ratios, dtype=float)
    if np.ptp(x) == 0.0:
        return np.full(x.size, -np.log(x.size)), -np.inf
    x -= np.max(x)
    n = x.size
    tail_len = int(np.ceil(min(0.2 * n, 3.0 * np.sqrt(n))))
    order = np.argsort(x)
    cutoff = max(x[order[-tail_len - 1]], np.log(np.finfo(float).tiny))
    tail_idx = np.flatnonzero(x > cutoff)
    k = np.inf
    if tail_idx.size > 4:
        tail_order = np.argsort(x[tail_idx])
        exp_cutoff = np.exp(cutoff)
        excess = np.exp(x[tail_idx][tail_order]) - exp_cutoff
        k, sigma = gpd_fit(excess)
        if np.isfinite(k):
            probs = np.arange(0.5, tail_idx.size) / tail_idx.size
            x[tail_idx[tail_order]] = np.log(gpd_quantile(probs, k, sigma) + exp_cutoff)
            # Truncado al mayor peso original
            x[x > 0] = 0.0
    x -= special.logsumexp(x)
    return x, float(k)


def psis_loo(source) -> LooResult:
    """
    Leave-one-out por muestreo de importancia con suavizado de Pareto

    Args:
        source: FitResult o matriz (draws × observaciones) de log-verosimilitud puntual
    """
    ll = _pointwise(source)
    n_draws, n_obs = ll.shape
    lpd = special.logsumexp(ll, axis=0) - np.log(n_draws)
    elpd_i = np.empty(n_obs)
    pareto_k = np.empty(n_obs)
    for i in range(n_obs):
        log_weights, pareto_k[i] = psis_smooth(-ll[:, i])
        elpd_i[i] = special.logsumexp(log_weights + ll[:, i])
    p_i = lpd - elpd_i

    bad = np.flatnonzero(pareto_k > PARETO_K_THRESHOLD)
    if bad.size:
        logger.warning(
            f"{bad.size} observaciones con k de Pareto > {PARETO_K_THRESHOLD} "
            f"(primeras: {bad[:10].tolist()}); la estimación LOO puede no ser fiable"
        )
    elpd = float(np.sum(elpd_i))
    se = _se(elpd_i)
    return LooResult(
        elpd_loo=elpd,
        se_elpd_loo=se,
        p_loo=float(np.sum(p_i)),
        se_p_loo=_se(p_i),
        looic=-2.0 * elpd,
        se_looic=2.0 * se,
        pareto_k=pareto_k.tolist(),
        pointwise=elpd_i.tolist(),
    )


def _compare_table(results, names, key: str, fields: Sequence[str]) -> pd.DataFrame:
    if len(results) < 2:
        raise IncomparableModelsError("se necesitan al menos dos modelos para comparar")
    names = list(names) if names is not None else [f"model{i + 1}" for i in range(len(results))]
    sizes = {len(r.pointwise) for r in results}
    if len(sizes) != 1:
        raise IncomparableModelsError(
            f"los modelos no tienen las mismas observaciones efectivas: {sorted(sizes)}"
        )

    ranking = sorted(range(len(results)), key=lambda i: getattr(results[i], key), reverse=True)
    best = np.asarray(results[ranking[0]].pointwise)
    rows = []
    for i in ranking:
        r = results[i]
        diff = np.asarray(r.pointwise) - best
        row = {"model": names[i], "elpd_diff": float(np.sum(diff)), "se_diff": _se(diff)}
        row.update({field: getattr(r, field) for field in fields})
        rows.append(row)
    return pd.DataFrame(rows).set_index("model")


def loo_compare(results: Sequence[LooResult], names: Optional[Sequence[str]] = None) -> pd.DataFrame:
    """
    Tabla de comparación ordenada por elpd_loo, el mejor modelo primero

    Returns:
        DataFrame con elpd_diff, se_diff y las columnas de cada LooResult
    """
    return _compare_table(results, names, "elpd_loo",
                          ("elpd_loo", "se_elpd_loo", "p_loo", "se_p_loo", "looic", "se_looic"))


def waic_compare(results: Sequence[WaicResult], names: Optional[Sequence[str]] = None) -> pd.DataFrame:
    """Misma tabla que loo_compare ordenada por elpd_waic"""
    return _compare_table(results, names, "elpd_waic",
                          ("elpd_waic", "se_elpd_waic", "p_waic", "se_p_waic", "waic", "se_waic"))


def criteria_table(fits: Sequence[FitResult], names: Optional[Sequence[str]] = None) -> pd.DataFrame:
    """AIC, AICc y BIC de cada ajuste, ordenados por BIC creciente"""
    names = list(names) if names is not None else [fit.name for fit in fits]
    rows = []
    for name, fit in zip(names, fits):
        try:
            corrected = aicc(fit)
        except InformationCriterionError as e:
            logger.warning(f"{name}: {str(e)}")
            corrected = float("nan")
        rows.append({
            "model": name,
            "loglik": float(np.mean(loglik(fit))),
            "k": fit.n_params,
            "n_eff": fit.n_effective,
            "aic": aic(fit),
            "aicc": corrected,
            "bic": bic(fit),
        })
    return pd.DataFrame(rows).set_index("model").sort_values("bic", kind="stable")


def _log_unnormalized(fit: FitResult, u: np.ndarray) -> np.ndarray:
    out = np.empty(u.shape[0])
    for d, point in enumerate(u):
        out[d] = float(fit.spec.log_posterior(fit.y, point).log_posterior)
    return out


def _relative_error(q11, q12, q21, q22, log_ml) -> float:
    """Error relativo aproximado del estimador (varianza de f1 y f2, autocorrelación vía ESS)"""
    n1, n2 = q11.size, q22.size
    log_s1, log_s2 = np.log(n1 / (n1 + n2)), np.log(n2 / (n1 + n2))
    log_p_post, log_p_prop = q11 - log_ml, q21 - log_ml
    f1 = np.exp(log_p_prop - np.logaddexp(log_s1 + log_p_prop, log_s2 + q22))
    f2 = np.exp(q12 - np.logaddexp(log_s1 + log_p_post, log_s2 + q12))
    ess_f2 = ess_bulk(f2)
    if not np.isfinite(ess_f2) or ess_f2 <= 0:
        ess_f2 = float(n1)
    term1 = np.var(f1, ddof=1) / np.mean(f1) ** 2 / n2
    term2 = np.var(f2, ddof=1) / np.mean(f2) ** 2 / ess_f2
    return float(np.sqrt(term1 + term2))


def bridge_log_marginal(fit: FitResult, seed: Optional[int] = None) -> BridgeResult:
    """
    Log-verosimilitud marginal por bridge sampling con la función puente óptima

    La primera mitad de los draws ajusta una propuesta normal multivariante en
    la escala no restringida; la segunda mitad entra en el estimador iterativo.

    Args:
        fit: Ajuste con al menos 1000 draws retenidos
        seed: Semilla de los draws de la propuesta (TSBAYES_BRIDGE_SEED por defecto)
    """
    u = fit.draws.flat_unconstrained()
    lp = fit.draws.log_posterior.reshape(-1)
    if u.shape[0] < MIN_BRIDGE_DRAWS:
        raise BridgeSamplingError(f"bridge sampling requiere al menos {MIN_BRIDGE_DRAWS} draws; hay {u.shape[0]}")

    half = u.shape[0] // 2
    fit_part, post_part, q11 = u[:half], u[half:], lp[half:]
    n_params = u.shape[1]
    mean = fit_part.mean(axis=0)
    cov = np.atleast_2d(np.cov(fit_part, rowvar=False))
    min_eig = float(np.min(np.linalg.eigvalsh(cov)))
    if min_eig < 1e-10:
        cov = cov + (1e-6 - min_eig) * np.eye(n_params)
    proposal = stats.multivariate_normal(mean=mean, cov=cov)

    rng = np.random.default_rng(settings.BRIDGE_SEED if seed is None else seed)
    n2 = post_part.shape[0]
    prop_draws = np.asarray(proposal.rvs(size=n2, random_state=rng), dtype=float).reshape(n2, n_params)
    q12 = np.atleast_1d(proposal.logpdf(post_part))
    q22 = np.atleast_1d(proposal.logpdf(prop_draws))
    with np.errstate(all="ignore"):
        q21 = _log_unnormalized(fit, prop_draws)
    q21 = np.where(np.isfinite(q21), q21, -np.inf)

    n1 = q11.size
    log_s1, log_s2 = np.log(n1 / (n1 + n2)), np.log(n2 / (n1 + n2))
    log_ml = float(np.median(q11 - q12))
    converged = False
    iteration = 0
    for iteration in range(1, BRIDGE_MAX_ITER + 1):
        logger.info(f"Iteration: {iteration}")
        previous = log_ml
        numerator = special.logsumexp(q21 - np.logaddexp(log_s1 + q21, log_s2 + q22 + log_ml)) - np.log(n2)
        denominator = special.logsumexp(q12 - np.logaddexp(log_s1 + q11, log_s2 + q12 + log_ml)) - np.log(n1)
        log_ml = float(numerator - denominator)
        if abs(np.expm1(log_ml - previous)) < BRIDGE_TOLERANCE:
            converged = True
            break

    if not converged:
        logger.warning(f"bridge sampling no convergió en {BRIDGE_MAX_ITER} iteraciones")
    return BridgeResult(
        log_marginal_likelihood=log_ml,
        iterations=iteration,
        relative_error=_relative_error(q11, q12, q21, q22, log_ml),
        converged=converged,
    )


def bayes_factor(fit1: FitResult, fit2: FitResult, log: bool = True, seed: Optional[int] = None) -> float:
    """
    Factor de Bayes de fit1 frente a fit2

    Returns:
        log BF = log ml1 - log ml2, o exp(log BF) acotado al mayor float si log=False
    """
    log_bf = (bridge_log_marginal(fit1, seed).log_marginal_likelihood
              - bridge_log_marginal(fit2, seed).log_marginal_likelihood)
    if log:
        return float(log_bf)
    return float(np.exp(min(log_bf, np.log(np.finfo(float).max))))


def bayes_factor_line(name1: str, name2: str, log_bf: float) -> str:
    return f"Estimated log Bayes factor in favor of {name1} over {name2}: {log_bf:.5f}"


def comparison_names(fits: List[FitResult]) -> List[str]:
    """Nombres únicos para las filas de las tablas de comparación"""
    names, seen = [], {}
    for fit in fits:
        base = fit.name
        seen[base] = seen.get(base, 0) + 1
        names.append(base if seen[base] == 1 else f"{base}.{seen[base]}")
    return names
