# models/schemas.py - Esquemas pydantic de configuración, informes y resultados

from typing import Dict, List, Literal, Optional, Tuple, Union

from pydantic import BaseModel, ConfigDict, Field, model_validator

from config.settings import settings


# Esquemas del muestreador
class SamplerConfig(BaseModel):
    """Opciones de NUTS; los valores por defecto son los de Stan"""

    chains: int = Field(4, ge=1)
    iter: int = Field(2000, ge=2)
    warmup: Optional[int] = Field(None, ge=1)
    adapt_delta: float = Field(0.8, gt=0.0, lt=1.0)
    max_treedepth: int = Field(10, ge=1)
    seed: int = Field(default_factory=lambda: settings.DEFAULT_SEED, ge=0)

    @model_validator(mode="after")
    def validate_warmup(self):
        if self.warmup is None:
            self.warmup = self.iter // 2
        if self.warmup >= self.iter:
            raise ValueError(f"warmup ({self.warmup}) debe ser menor que iter ({self.iter})")
        return self

    @property
    def n_samples(self) -> int:
        return self.iter - self.warmup


class SamplerReport(BaseModel):
    """Resumen del muestreo, una entrada por cadena"""

    divergences: List[int]
    treedepth_hits: List[int]
    step_size: List[float]
    metric: List[List[float]]
    accept_stat: List[float]
    sampler: str = "NUTS"

    @property
    def total_divergences(self) -> int:
        return int(sum(self.divergences))


# Esquemas de diagnóstico y selección
class SummaryRow(BaseModel):
    name: str
    mean: float
    se: float
    q2_5: float
    q97_5: float
    ess: float
    rhat: float


class LooResult(BaseModel):
    """Validación cruzada leave-one-out con muestreo por importancia suavizado (PSIS)"""

    elpd_loo: float
    se_elpd_loo: float
    p_loo: float
    se_p_loo: float
    looic: float
    se_looic: float
    pareto_k: List[float]
    pointwise: List[float]

    @property
    def n_obs(self) -> int:
        return len(self.pointwise)


class WaicResult(BaseModel):
    elpd_waic: float
    se_elpd_waic: float
    p_waic: float
    se_p_waic: float
    waic: float
    se_waic: float
    pointwise: List[float]


class BridgeResult(BaseModel):
    """Verosimilitud marginal estimada por bridge sampling"""

    log_marginal_likelihood: float
    iterations: int = Field(ge=1)
    relative_error: float
    converged: bool = True


class OrderCandidate(BaseModel):
    p: int = Field(ge=0)
    d: int = Field(ge=0)
    q: int = Field(ge=0)
    P: int = Field(ge=0)
    D: int = Field(ge=0)
    Q: int = Field(ge=0)
    bic: float
    converged: bool

    @property
    def order(self) -> Tuple[int, int, int]:
        return self.p, self.d, self.q

    @property
    def seasonal(self) -> Tuple[int, int, int]:
        return self.P, self.D, self.Q

    def label(self, s: int) -> str:
        return f"({self.p},{self.d},{self.q})({self.P},{self.D},{self.Q})[{s}]"


# Esquemas del archivo de configuración de la CLI
class DataBlock(BaseModel):
    model_config = ConfigDict(extra="forbid")

    path: str
    column: Union[int, str] = 0
    frequency: int = Field(1, ge=1)
    header: bool = True
    # Columnas del mismo CSV usadas como regresores explícitos
    xreg_columns: List[str] = []


class ModelBlock(BaseModel):
    model_config = ConfigDict(extra="forbid")

    family: Literal["sarima", "garch"] = "sarima"
    order: Tuple[int, int, int] = (0, 0, 0)
    seasonal: Tuple[int, int, int] = (0, 0, 0)
    fourier_k: Optional[int] = Field(None, ge=1)
    garch_order: Tuple[int, int] = (1, 1)
    innovation: Literal["normal", "student_t_unknown_df"] = "normal"


class SamplerBlock(BaseModel):
    model_config = ConfigDict(extra="forbid")

    chains: Optional[int] = None
    iter: Optional[int] = None
    warmup: Optional[int] = None
    adapt_delta: Optional[float] = None
    max_treedepth: Optional[int] = None
    seed: Optional[int] = None


class RunConfig(BaseModel):
    """Archivo JSON de ejecución: datos, modelo, prioris, muestreador y salida"""

    model_config = ConfigDict(extra="forbid")

    data: DataBlock
    model: ModelBlock = ModelBlock()
    # nombre de parámetro o grupo -> "familia(p1, p2[, p3])"
    priors: Dict[str, str] = {}
    sampler: SamplerBlock = SamplerBlock()
    output: str = "fit"

    def sampler_config(self, **overrides) -> SamplerConfig:
        """SamplerConfig con los valores del archivo y las opciones de la CLI encima"""
        values = {k: v for k, v in self.sampler.model_dump().items() if v is not None}
        values.update({k: v for k, v in overrides.items() if v is not None})
        return SamplerConfig(**values)
