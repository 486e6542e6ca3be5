# models/targets.py - Densidades de prueba con la misma interfaz que los modelos
#
# Permiten verificar el muestreador y los criterios de selección contra
# resultados analíticos, sin pasar por un modelo de series temporales.

from typing import List, Optional

import numpy as np
from pydantic import BaseModel, ConfigDict, field_validator
from scipy import stats

from models.likelihood import LogPosteriorResult, normal_logpdf
from models.series import TimeSeries
from models.specs import ParamEntry
from utils import dual


def _names(prefix: str, count: int) -> List[str]:
    return [f"{prefix}[{i}]" for i in range(1, count + 1)]


class GaussianTarget(BaseModel):
    """Normal multivariante diagonal N(mean, diag(sd²)) en el espacio no restringido"""

    model_config = ConfigDict(arbitrary_types_allowed=True, frozen=True)

    family: str = "gaussian"
    mean: np.ndarray
    sd: np.ndarray
    priors: Optional[object] = None

    @field_validator("mean", "sd", mode="before")
    @classmethod
    def validate_vector(cls, v):
        arr = np.array(v, dtype=float).reshape(-1)
        arr.setflags(write=False)
        return arr

    @classmethod
    def standard(cls, dim: int = 1) -> "GaussianTarget":
        return cls(mean=np.zeros(dim), sd=np.ones(dim))

    @classmethod
    def ill_conditioned(cls, dim: int = 10, condition: float = 100.0) -> "GaussianTarget":
        """Varianzas repartidas en escala log entre 1 y `condition`"""
        return cls(mean=np.zeros(dim), sd=np.sqrt(np.geomspace(1.0, condition, dim)))

    @property
    def layout(self) -> List[ParamEntry]:
        return [ParamEntry(name, "real") for name in _names("x", self.mean.size)]

    def label(self) -> str:
        return f"Gaussian[{self.mean.size}]"

    def n_effective(self, y: TimeSeries) -> int:
        return int(self.mean.size)

    def check_series(self, y: TimeSeries):
        return None

    def log_posterior(self, y: TimeSeries, u) -> LogPosteriorResult:
        pointwise = normal_logpdf(u - self.mean, self.sd)
        return LogPosteriorResult(
            log_posterior=dual.total(pointwise),
            pointwise_loglik=np.asarray(dual.value(pointwise), dtype=float),
            fitted=np.asarray(self.mean, dtype=float),
            log_prior=0.0,
            log_jacobian=0.0,
        )

    def log_normalizer(self) -> float:
        """La densidad está normalizada"""
        return 0.0


class NormalMeanTarget(BaseModel):
    """
    Modelo conjugado y_i ~ N(μ, σ) con σ conocida y μ ~ N(m0, s0)

    Tiene verosimilitud marginal y validación cruzada exacta en forma cerrada.
    """

    model_config = ConfigDict(frozen=True)

    family: str = "normal_mean"
    sigma: float = 1.0
    prior_mean: float = 0.0
    prior_sd: float = 1.0
    priors: Optional[object] = None

    @property
    def layout(self) -> List[ParamEntry]:
        return [ParamEntry("mu", "real")]

    def label(self) -> str:
        return "NormalMean"

    def n_effective(self, y: TimeSeries) -> int:
        return len(y)

    def check_series(self, y: TimeSeries):
        return None

    def log_posterior(self, y: TimeSeries, u) -> LogPosteriorResult:
        mu = u[0]
        pointwise = normal_logpdf(y.values - mu, self.sigma)
        lp = normal_logpdf(mu - self.prior_mean, self.prior_sd)
        return LogPosteriorResult(
            log_posterior=dual.total(pointwise) + lp,
            pointwise_loglik=np.asarray(dual.value(pointwise), dtype=float),
            fitted=np.full(len(y), float(dual.value(mu))),
            log_prior=float(dual.value(lp)),
            log_jacobian=0.0,
        )

    def posterior(self, values: np.ndarray):
        """Media y desviación a posteriori de μ dados `values`"""
        precision = 1.0 / self.prior_sd ** 2 + values.size / self.sigma ** 2
        var = 1.0 / precision
        mean = var * (self.prior_mean / self.prior_sd ** 2 + values.sum() / self.sigma ** 2)
        return mean, np.sqrt(var)

    def log_marginal_likelihood(self, y: TimeSeries) -> float:
        """log p(y) con y ~ N(m0·1, σ²I + s0²·11ᵀ)"""
        n = len(y)
        cov = self.sigma ** 2 * np.eye(n) + self.prior_sd ** 2 * np.ones((n, n))
        return float(stats.multivariate_normal(np.full(n, self.prior_mean), cov).logpdf(y.values))

    def exact_loo(self, y: TimeSeries) -> np.ndarray:
        """log p(y_i | y_-i) para cada observación, por reajuste analítico"""
        out = np.empty(len(y))
        for i in range(len(y)):
            rest = np.delete(y.values, i)
            mean, sd = self.posterior(rest)
            out[i] = stats.norm.logpdf(y.values[i], mean, np.sqrt(self.sigma ** 2 + sd ** 2))
        return out
