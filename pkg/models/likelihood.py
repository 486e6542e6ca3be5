# models/likelihood.py - Log-posterior de los modelos SARIMA y GARCH
#
# Todas las funciones aceptan floats/ndarrays o Duals (utils/dual.py): el mismo
# código evalúa la densidad y, sembrando duales, su gradiente.

import logging
from typing import Dict, List, NamedTuple, Tuple

import numpy as np

from models.priors import log_prior
from models.series import TimeSeries
from models.transforms import constrain
from utils import dual
from utils.series_ops import difference_array

logger = logging.getLogger(__name__)


class LogPosteriorResult(NamedTuple):
    log_posterior: object
    pointwise_loglik: np.ndarray
    fitted: np.ndarray
    log_prior: float
    log_jacobian: float


def expand_lag_polynomial(nonseasonal: List, seasonal: List, s: int) -> Dict[int, object]:
    """
    Expande (1 - Σ c_i B^i)(1 - Σ C_j B^{js}) = 1 - Σ_k a_k B^k

    Returns:
        Diccionario {retardo k: a_k}; retardos coincidentes se suman
    """
    out: Dict[int, object] = {}

    def add(lag, coef):
        out[lag] = out[lag] + coef if lag in out else coef

    for i, c in enumerate(nonseasonal, start=1):
        add(i, c)
    for j, C in enumerate(seasonal, start=1):
        add(j * s, C)
        for i, c in enumerate(nonseasonal, start=1):
            add(i + j * s, -(c * C))
    return out


def _group(theta: dict, name: str, count: int) -> list:
    return [theta[f"{name}[{i}]"] for i in range(1, count + 1)]


def normal_logpdf(x, scale):
    """Log-densidad N(0, scale) elemento a elemento"""
    return -0.5 * dual.LOG_2PI - dual.log(scale) - 0.5 * dual.square(x / scale)


def sarima_components(spec, y: TimeSeries, theta: dict) -> Tuple[object, object]:
    """
    Recursión ARMA condicional sobre la serie diferenciada

    Con w_t = z_t - X̃_t b (z diferenciada, X̃ regresores diferenciados):
        μ_t = μ0 + X̃_t b + Σ a_k w_{t-k} - Σ m_k ε_{t-k}
        ε_t = z_t - μ_t
    Los valores previos a la muestra de w y ε son cero.

    Returns:
        (ε, valores ajustados μ)
    """
    z = difference_array(y.values, spec.d, spec.D, spec.s)
    w = z
    if spec.xreg is not None:
        xd = difference_array(spec.xreg.values, spec.d, spec.D, spec.s)
        b = dual.stack(_group(theta, "breg", spec.n_reg))
        w = z - dual.matvec(xd, b)

    ar = expand_lag_polynomial(_group(theta, "ar", spec.p), _group(theta, "sar", spec.P), spec.s)
    ma = expand_lag_polynomial(_group(theta, "ma", spec.q), _group(theta, "sma", spec.Q), spec.s)

    innovation = w - theta["mu0"]
    for lag, a in ar.items():
        innovation = innovation - a * dual.shift(w, lag)
    eps = dual.recursive_filter(innovation, ma.keys(), list(ma.values()))
    fitted = z - eps
    return eps, fitted


def sarima_log_posterior(spec, y: TimeSeries, u) -> LogPosteriorResult:
    """
    Log-posterior no normalizada de un SARIMA en el espacio no restringido

    Args:
        spec: SarimaSpec
        y: Serie observada (sin diferenciar)
        u: Vector no restringido (ndarray, ParamVector o Dual)
    """
    with np.errstate(all="ignore"):
        theta, log_jacobian = constrain(spec, u)
        lp = log_prior(spec.priors, theta)
        eps, fitted = sarima_components(spec, y, theta)
        pointwise = normal_logpdf(eps, theta["sigma0"])
        total = dual.total(pointwise) + lp + log_jacobian
    return LogPosteriorResult(
        log_posterior=total,
        pointwise_loglik=np.asarray(dual.value(pointwise), dtype=float),
        fitted=np.asarray(dual.value(fitted), dtype=float),
        log_prior=float(dual.value(lp)),
        log_jacobian=float(dual.value(log_jacobian)),
    )


def garch_variance(spec, y: TimeSeries, theta: dict):
    """
    σ²_t = σ0 + Σ α_i ε²_{t-i} + Σ β_j σ²_{t-j}

    Los ε² y σ² previos a la muestra valen la varianza muestral de y.

    Returns:
        (ε, σ²)
    """
    v0 = float(np.var(y.values))
    eps = y.values - theta["mu0"]
    e2 = dual.square(eps)
    n = len(y)
    t = np.arange(n)

    drive = theta["sigma0"] + np.zeros(n)
    for i, alpha in enumerate(_group(theta, "arch", spec.s_arch), start=1):
        drive = drive + alpha * dual.shift(e2, i, fill=v0)
    betas = _group(theta, "garch", spec.k_garch)
    # Condiciones iniciales σ²_{t-j} = v0 para t < j
    for j, beta in enumerate(betas, start=1):
        drive = drive + beta * (v0 * (t < j))
    sigma2 = dual.recursive_filter(drive, range(1, len(betas) + 1), betas)
    return eps, sigma2


def garch_pointwise(spec, eps, sigma2, theta: dict):
    """Log-verosimilitud por observación: normal o t escalada con varianza σ²_t"""
    e2 = dual.square(eps)
    if not spec.student_t:
        return -0.5 * dual.LOG_2PI - 0.5 * dual.log(sigma2) - 0.5 * e2 / sigma2
    v = theta["dfv"]
    scale2 = sigma2 * ((v - 2.0) / v)
    const = dual.gammaln((v + 1.0) / 2.0) - dual.gammaln(v / 2.0) - 0.5 * dual.log(v * np.pi)
    return const - 0.5 * dual.log(scale2) - (v + 1.0) / 2.0 * dual.log1p(e2 / (scale2 * v))


def garch_log_posterior(spec, y: TimeSeries, u) -> LogPosteriorResult:
    """Log-posterior no normalizada de un GARCH; `fitted` son las desviaciones σ_t"""
    with np.errstate(all="ignore"):
        theta, log_jacobian = constrain(spec, u)
        lp = log_prior(spec.priors, theta)
        eps, sigma2 = garch_variance(spec, y, theta)
        pointwise = garch_pointwise(spec, eps, sigma2, theta)
        total = dual.total(pointwise) + lp + log_jacobian
        fitted = np.sqrt(np.asarray(dual.value(sigma2), dtype=float))
    return LogPosteriorResult(
        log_posterior=total,
        pointwise_loglik=np.asarray(dual.value(pointwise), dtype=float),
        fitted=fitted,
        log_prior=float(dual.value(lp)),
        log_jacobian=float(dual.value(log_jacobian)),
    )


def n_effective(spec, y: TimeSeries) -> int:
    """Observaciones condicionadas: n - d - D*s para SARIMA, n para GARCH"""
    return spec.n_effective(y)
