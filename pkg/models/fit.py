# models/fit.py - Muestras a posteriori y objeto resultado del ajuste

from typing import List

import numpy as np
from pydantic import BaseModel, ConfigDict, model_validator

from models.schemas import SamplerConfig, SamplerReport
from models.series import TimeSeries
from utils.exceptions import UnknownParameterError


class DrawsMatrix(BaseModel):
    """
    Muestras posteriores tras el warmup

    Attributes:
        draws: (cadenas, iteraciones, P) en la escala restringida
        unconstrained: misma forma, en la escala del muestreador
        log_posterior: (cadenas, iteraciones), log-densidad no normalizada (lp__)
        pointwise_loglik: (cadenas·iteraciones, n_eff), orden por cadenas
        names: nombres de los parámetros en el orden del layout
    """

    model_config = ConfigDict(arbitrary_types_allowed=True)

    draws: np.ndarray
    unconstrained: np.ndarray
    log_posterior: np.ndarray
    pointwise_loglik: np.ndarray
    names: List[str]

    @model_validator(mode="after")
    def validate_shapes(self):
        if self.draws.ndim != 3 or self.draws.shape != self.unconstrained.shape:
            raise ValueError("draws y unconstrained deben tener forma (cadenas, iteraciones, P)")
        if self.draws.shape[2] != len(self.names):
            raise ValueError("el número de columnas no coincide con los nombres")
        if self.log_posterior.shape != self.draws.shape[:2]:
            raise ValueError("log_posterior debe tener forma (cadenas, iteraciones)")
        if self.pointwise_loglik.shape[0] != self.n_draws:
            raise ValueError("pointwise_loglik debe tener una fila por draw")
        return self

    @property
    def n_chains(self) -> int:
        return int(self.draws.shape[0])

    @property
    def n_iter(self) -> int:
        return int(self.draws.shape[1])

    @property
    def n_draws(self) -> int:
        return self.n_chains * self.n_iter

    def index(self, name: str) -> int:
        compact = name.replace(" ", "")
        if compact not in self.names:
            raise UnknownParameterError(f"el ajuste no tiene el parámetro '{name}'")
        return self.names.index(compact)

    def chains_of(self, name: str) -> np.ndarray:
        """(cadenas, iteraciones) de un parámetro"""
        return self.draws[:, :, self.index(name)]

    def flat(self) -> np.ndarray:
        """(cadenas·iteraciones, P) en orden por cadenas"""
        return self.draws.reshape(self.n_draws, -1)

    def flat_unconstrained(self) -> np.ndarray:
        return self.unconstrained.reshape(self.n_draws, -1)

    def loglik(self) -> np.ndarray:
        """Log-verosimilitud total de cada draw"""
        return self.pointwise_loglik.sum(axis=1)


class FitResult(BaseModel):
    """Modelo ajustado: especificación, datos, muestras e informe del muestreador"""

    model_config = ConfigDict(arbitrary_types_allowed=True)

    spec: object
    y: TimeSeries
    draws: DrawsMatrix
    report: SamplerReport
    config: SamplerConfig
    name: str = "model"

    @property
    def n_effective(self) -> int:
        return int(self.draws.pointwise_loglik.shape[1])

    @property
    def n_params(self) -> int:
        return len(self.draws.names)


def extract(fit: FitResult, name: str) -> np.ndarray:
    """
    Draws de un parámetro, concatenados por cadenas

    Args:
        fit: Ajuste
        name: Nombre del parámetro, p.ej. "ar[1]" o "sigma0"

    Returns:
        Vector de longitud cadenas × (iter - warmup)
    """
    return fit.draws.chains_of(name).reshape(-1)


class PredictiveDraws(BaseModel):
    """Simulaciones de la distribución predictiva en la escala original"""

    model_config = ConfigDict(arbitrary_types_allowed=True)

    draws: np.ndarray
    start_index: int = 1

    @model_validator(mode="after")
    def validate_draws(self):
        if self.draws.ndim != 2 or self.draws.shape[1] < 1:
            raise ValueError("draws debe tener forma (draws, horizonte) con horizonte >= 1")
        return self

    @property
    def horizon(self) -> int:
        return int(self.draws.shape[1])

    @property
    def n_draws(self) -> int:
        return int(self.draws.shape[0])
