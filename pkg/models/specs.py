# models/specs.py - Especificaciones de modelos SARIMA / regresión dinámica / GARCH

import logging
from typing import List, Literal, NamedTuple, Optional

from pydantic import BaseModel, ConfigDict, Field, ValidationError, model_validator

from models.priors import PriorSet, PriorSpec, default_priors, set_prior
from models.series import RegressorMatrix, TimeSeries
from utils.exceptions import ModelSpecError, SeriesDimensionError

logger = logging.getLogger(__name__)


class ParamEntry(NamedTuple):
    """Entrada del layout: nombre del parámetro y dominio de su transformación"""
    name: str
    domain: str


def _entries(group: str, count: int, domain: str) -> List[ParamEntry]:
    return [ParamEntry(f"{group}[{i}]", domain) for i in range(1, count + 1)]


class _ModelSpec(BaseModel):
    """Base común: layout, prioris y evaluación de la log-posterior"""

    model_config = ConfigDict(arbitrary_types_allowed=True, frozen=True)

    priors: Optional[PriorSet] = None

    @property
    def layout(self) -> List[ParamEntry]:
        raise NotImplementedError

    @property
    def n_params(self) -> int:
        return len(self.layout)

    @property
    def names(self) -> List[str]:
        return [entry.name for entry in self.layout]

    def fill_priors(self):
        if self.priors is None:
            object.__setattr__(self, "priors", default_priors(self))
        elif set(self.priors.names()) != set(self.names):
            raise ValueError("el PriorSet no cubre exactamente los parámetros del modelo")
        return self

    def with_prior(self, name: str, prior: PriorSpec):
        """Copia de la especificación con la priori de `name` (o de su grupo) sustituida"""
        return self.model_copy(update={"priors": set_prior(self.priors, name, prior)})


class SarimaSpec(_ModelSpec):
    """SARIMA(p,d,q)(P,D,Q)[s] con regresores opcionales y errores ARMA"""

    family: Literal["sarima"] = "sarima"
    p: int = Field(0, ge=0)
    d: int = Field(0, ge=0)
    q: int = Field(0, ge=0)
    P: int = Field(0, ge=0)
    D: int = Field(0, ge=0)
    Q: int = Field(0, ge=0)
    s: int = Field(1, ge=1)
    xreg: Optional[RegressorMatrix] = None

    @model_validator(mode="after")
    def validate_spec(self):
        return self.fill_priors()

    @property
    def n_reg(self) -> int:
        return self.xreg.n_cols if self.xreg is not None else 0

    @property
    def layout(self) -> List[ParamEntry]:
        return (
            [ParamEntry("mu0", "real"), ParamEntry("sigma0", "positive")]
            + _entries("ar", self.p, "pm1")
            + _entries("ma", self.q, "pm1")
            + _entries("sar", self.P, "pm1")
            + _entries("sma", self.Q, "pm1")
            + _entries("breg", self.n_reg, "real")
        )

    @property
    def lost(self) -> int:
        return self.d + self.D * self.s

    def label(self) -> str:
        base = f"Sarima({self.p},{self.d},{self.q})"
        seasonal = f"({self.P},{self.D},{self.Q})[{self.s}]"
        if self.xreg is None:
            return base + seasonal
        if self.P == self.D == self.Q == 0:
            return f"{base}.reg[{self.n_reg}]"
        return f"{base}{seasonal}.reg[{self.n_reg}]"

    def n_effective(self, y: TimeSeries) -> int:
        n_eff = len(y) - self.lost
        if n_eff < 1:
            raise SeriesDimensionError(
                f"la serie ({len(y)} observaciones) es demasiado corta para d={self.d}, D={self.D}, s={self.s}"
            )
        return n_eff

    def check_series(self, y: TimeSeries):
        """Comprueba la compatibilidad serie / especificación"""
        n_eff = self.n_effective(y)
        if self.xreg is not None and self.xreg.n_rows != len(y):
            raise ModelSpecError(
                f"los regresores tienen {self.xreg.n_rows} filas y la serie {len(y)} observaciones"
            )
        if n_eff < self.n_params:
            raise ModelSpecError(
                f"{self.label()}: {n_eff} observaciones efectivas para {self.n_params} parámetros"
            )

    def log_posterior(self, y: TimeSeries, u):
        from models.likelihood import sarima_log_posterior
        return sarima_log_posterior(self, y, u)


class GarchSpec(_ModelSpec):
    """GARCH(s,k) con media constante; ARCH(s) es el caso k = 0"""

    family: Literal["garch"] = "garch"
    s_arch: int = Field(1, ge=1)
    k_garch: int = Field(0, ge=0)
    innovation: Literal["normal", "student_t_unknown_df"] = "normal"

    @model_validator(mode="after")
    def validate_spec(self):
        return self.fill_priors()

    @property
    def student_t(self) -> bool:
        return self.innovation == "student_t_unknown_df"

    @property
    def layout(self) -> List[ParamEntry]:
        layout = (
            [ParamEntry("mu0", "real"), ParamEntry("sigma0", "positive")]
            + _entries("arch", self.s_arch, "unit")
            + _entries("garch", self.k_garch, "unit")
        )
        if self.student_t:
            layout.append(ParamEntry("dfv", "df"))
        return layout

    def label(self) -> str:
        return f"Garch({self.s_arch},{self.k_garch})" + (".t" if self.student_t else "")

    def n_effective(self, y: TimeSeries) -> int:
        return len(y)

    def check_series(self, y: TimeSeries):
        if len(y) < self.n_params:
            raise ModelSpecError(f"{self.label()}: {len(y)} observaciones para {self.n_params} parámetros")

    def log_posterior(self, y: TimeSeries, u):
        from models.likelihood import garch_log_posterior
        return garch_log_posterior(self, y, u)


def make_sarima(order=(0, 0, 0), seasonal=(0, 0, 0), s: int = 1, xreg: Optional[RegressorMatrix] = None,
                priors: Optional[PriorSet] = None) -> SarimaSpec:
    """
    Construye un SarimaSpec traduciendo los errores de validación

    Args:
        order: (p, d, q)
        seasonal: (P, D, Q)
        s: Periodo estacional
        xreg: Regresores opcionales
        priors: PriorSet; por defecto las prioris débilmente informativas
    """
    try:
        p, d, q = order
        P, D, Q = seasonal
        return SarimaSpec(p=p, d=d, q=q, P=P, D=D, Q=Q, s=s, xreg=xreg, priors=priors)
    except (ValidationError, ValueError, TypeError) as e:
        raise ModelSpecError(f"especificación SARIMA inválida: {str(e)}")


def make_garch(s_arch: int = 1, k_garch: int = 0, innovation: str = "normal",
               priors: Optional[PriorSet] = None) -> GarchSpec:
    """Construye un GarchSpec traduciendo los errores de validación"""
    try:
        return GarchSpec(s_arch=s_arch, k_garch=k_garch, innovation=innovation, priors=priors)
    except ValidationError as e:
        raise ModelSpecError(f"especificación GARCH inválida: {str(e)}")


def describe_model(spec, y: TimeSeries) -> str:
    """Bloque impreso del modelo: cabecera, observaciones y prioris agrupadas"""
    from utils.reports import render_model_print
    return render_model_print(spec, y)
