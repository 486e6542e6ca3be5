# models/priors.py - Distribuciones a priori, densidades y asignación por defecto

import logging
import re
from functools import lru_cache
from typing import Dict, List, Literal, Optional, Tuple

import numpy as np
from pydantic import BaseModel, ConfigDict, ValidationError, model_validator
from scipy import special, stats

from utils import dual
from utils.exceptions import InvalidPriorError, PriorDomainError, UnknownParameterError

logger = logging.getLogger(__name__)

Family = Literal[
    "normal", "student_t", "cauchy", "gamma", "inverse_gamma", "uniform", "beta",
    "beta_on_pm1", "half_normal", "half_t", "half_cauchy", "chi_square", "exponential",
]
Domain = Literal["real", "positive", "unit", "pm1", "df"]

# Número de parámetros y soporte natural de cada familia
FAMILY_ARITY = {
    "normal": 2, "student_t": 3, "cauchy": 2, "gamma": 2, "inverse_gamma": 2, "uniform": 2,
    "beta": 2, "beta_on_pm1": 2, "half_normal": 2, "half_t": 3, "half_cauchy": 2,
    "chi_square": 1, "exponential": 1,
}
NATURAL_DOMAIN = {
    "normal": "real", "student_t": "real", "cauchy": "real", "uniform": "real",
    "gamma": "positive", "inverse_gamma": "positive", "half_normal": "positive",
    "half_t": "positive", "half_cauchy": "positive", "chi_square": "positive",
    "exponential": "positive", "beta": "unit", "beta_on_pm1": "pm1",
}
# Familias admitidas en cada dominio de parámetro
DOMAIN_FAMILIES = {
    "real": ("normal", "student_t", "cauchy", "uniform"),
    "positive": ("gamma", "inverse_gamma", "half_normal", "half_t", "half_cauchy", "chi_square", "exponential"),
    "pm1": ("uniform", "normal", "beta_on_pm1"),
    "unit": ("uniform", "normal", "beta"),
}
DOMAIN_FAMILIES["df"] = DOMAIN_FAMILIES["positive"]
DOMAIN_BOUNDS = {
    "real": (-np.inf, np.inf), "positive": (0.0, np.inf), "unit": (0.0, 1.0), "pm1": (-1.0, 1.0), "df": (2.0, np.inf),
}

# Dominio del transformado (models/transforms.py) -> dominio de la priori
PARAM_TO_PRIOR_DOMAIN = {"real": "real", "positive": "positive", "pm1": "pm1", "unit": "unit", "df": "df"}

# Formato impreso: etiqueta, nombres de parámetros, separador
_PRINT_FORMAT = {
    "normal": ("normal", ("mu", "sd"), " , "),
    "student_t": ("t", ("loc", "scl", "df"), " ,"),
    "cauchy": ("cauchy", ("loc", "scl"), " ,"),
    "gamma": ("gamma", ("shape", "rate"), " ,"),
    "inverse_gamma": ("inv_gamma", ("shape", "scale"), " ,"),
    "uniform": ("uniform", ("lower", "upper"), " , "),
    "beta": ("beta", ("form1", "form2"), " , "),
    "beta_on_pm1": ("beta", ("form1", "form2"), " , "),
    "half_normal": ("half_normal", ("loc", "scl"), " ,"),
    "half_t": ("half_t", ("loc", "scl", "df"), " ,"),
    "half_cauchy": ("half_cauchy", ("loc", "scl"), " ,"),
    "chi_square": ("chi_square", ("df",), " ,"),
    "exponential": ("exponential", ("rate",), " ,"),
}

_ALIASES = {
    "t": "student_t", "student": "student_t", "student_t": "student_t", "normal": "normal",
    "cauchy": "cauchy", "gamma": "gamma", "inv_gamma": "inverse_gamma", "ig": "inverse_gamma",
    "inverse_gamma": "inverse_gamma", "uniform": "uniform", "beta": "beta", "beta_on_pm1": "beta_on_pm1",
    "half_normal": "half_normal", "half_t": "half_t", "half_cauchy": "half_cauchy",
    "chi_square": "chi_square", "chisq": "chi_square", "exponential": "exponential", "exp": "exponential",
}

_PRIOR_RE = re.compile(r"^\s*([A-Za-z_]+)\s*\(([^)]*)\)\s*$")
_LINE_RE = re.compile(r"^\s*([A-Za-z_]+(?:\[\s*\d+\s*\])?)\s*~\s*(.+)$")


class PriorSpec(BaseModel):
    """Distribución a priori univariante sobre un dominio"""

    model_config = ConfigDict(frozen=True)

    family: Family
    params: Tuple[float, ...]
    domain: Optional[Domain] = None

    @model_validator(mode="after")
    def validate_prior(self):
        family, params = self.family, self.params
        if self.domain is None:
            object.__setattr__(self, "domain", NATURAL_DOMAIN[family])
        if len(params) != FAMILY_ARITY[family]:
            raise ValueError(f"{family} requiere {FAMILY_ARITY[family]} parámetros, recibidos {len(params)}")
        if not all(np.isfinite(params)):
            raise ValueError(f"parámetros no finitos en {family}")
        if family not in DOMAIN_FAMILIES[self.domain]:
            raise ValueError(f"la familia {family} no tiene soporte en el dominio {self.domain}")

        if family in ("normal", "cauchy", "half_normal", "half_cauchy") and params[1] <= 0:
            raise ValueError(f"{family}: la escala debe ser positiva")
        if family in ("student_t", "half_t") and (params[1] <= 0 or params[2] <= 0):
            raise ValueError(f"{family}: escala y grados de libertad deben ser positivos")
        if family in ("gamma", "inverse_gamma", "beta", "beta_on_pm1") and min(params) <= 0:
            raise ValueError(f"{family}: los parámetros de forma deben ser positivos")
        if family in ("chi_square", "exponential") and params[0] <= 0:
            raise ValueError(f"{family}: el parámetro debe ser positivo")
        if family.startswith("half_") and params[0] < 0:
            raise ValueError(f"{family}: la localización debe ser no negativa")
        if family == "uniform":
            lower, upper = params
            lo, hi = DOMAIN_BOUNDS[self.domain]
            if not lower < upper:
                raise ValueError("uniform: se requiere lower < upper")
            if lower < lo or upper > hi:
                raise ValueError(f"uniform({lower:g}, {upper:g}) excede el dominio {self.domain}")
        return self


def make_prior(family: str, *params: float, domain: Optional[str] = None) -> PriorSpec:
    """Construye un PriorSpec traduciendo los errores de validación"""
    family = _ALIASES.get(family, family)
    try:
        return PriorSpec(family=family, params=tuple(float(p) for p in params), domain=domain)
    except ValidationError as e:
        raise InvalidPriorError(f"priori inválida {family}{tuple(params)}: {e.errors()[0]['msg']}")


@lru_cache(maxsize=256)
def _truncation_log_mass(mu: float, sd: float, domain: str) -> float:
    lo, hi = DOMAIN_BOUNDS[domain]
    if np.isinf(lo) and np.isinf(hi):
        return 0.0
    return float(np.log(stats.norm.cdf((hi - mu) / sd) - stats.norm.cdf((lo - mu) / sd)))


@lru_cache(maxsize=256)
def _df_log_mass(family: str, params: Tuple[float, ...]) -> float:
    """log P(X > 2) de una familia positiva; los grados de libertad viven en (2, ∞)"""
    lo = DOMAIN_BOUNDS["df"][0]
    a = params
    if family == "gamma":
        return float(stats.gamma.logsf(lo, a[0], scale=1.0 / a[1]))
    if family == "inverse_gamma":
        return float(stats.invgamma.logsf(lo, a[0], scale=a[1]))
    if family == "half_normal":
        return float(stats.halfnorm.logsf(lo, a[0], a[1]))
    if family == "half_cauchy":
        return float(stats.halfcauchy.logsf(lo, a[0], a[1]))
    if family == "half_t":
        return 0.0 if a[0] >= lo else float(np.log(2.0) + stats.t.logsf(lo, a[2], a[0], a[1]))
    if family == "chi_square":
        return float(stats.chi2.logsf(lo, a[0]))
    return float(stats.expon.logsf(lo, scale=1.0 / a[0]))


def _in_support(p: PriorSpec, x: float) -> bool:
    if p.domain == "df" and not x > DOMAIN_BOUNDS["df"][0]:
        return False
    if p.family == "uniform":
        return p.params[0] <= x <= p.params[1]
    if p.family.startswith("half_"):
        return x >= p.params[0]
    lo, hi = DOMAIN_BOUNDS[p.domain]
    if p.domain == "real":
        return np.isfinite(x)
    return lo < x < hi


def _normal(x, mu, sd):
    return -0.5 * dual.LOG_2PI - np.log(sd) - 0.5 * dual.square((x - mu) / sd)


def _student_t(x, loc, scl, df):
    const = special.gammaln((df + 1) / 2) - special.gammaln(df / 2) - 0.5 * np.log(df * np.pi) - np.log(scl)
    return const - (df + 1) / 2 * dual.log1p(dual.square((x - loc) / scl) / df)


def _cauchy(x, loc, scl):
    return -np.log(np.pi * scl) - dual.log1p(dual.square((x - loc) / scl))


def _beta(x, a, b):
    return (a - 1) * dual.log(x) + (b - 1) * dual.log1p(-x) - special.betaln(a, b)


def log_density(p: PriorSpec, x):
    """
    Log-densidad de la priori en x (float o Dual)

    En el dominio df la densidad se renormaliza sobre (2, ∞).

    Returns:
        Valor finito dentro del soporte y -inf fuera de él
    """
    if not _in_support(p, float(dual.value(x))):
        return -np.inf
    if p.domain == "df":
        return _natural_log_density(p, x) - _df_log_mass(p.family, p.params)
    return _natural_log_density(p, x)


def _natural_log_density(p: PriorSpec, x):
    f, a = p.family, p.params
    if f == "normal":
        return _normal(x, a[0], a[1]) - _truncation_log_mass(a[0], a[1], p.domain)
    if f == "student_t":
        return _student_t(x, *a)
    if f == "cauchy":
        return _cauchy(x, *a)
    if f == "gamma":
        shape, rate = a
        return shape * np.log(rate) - special.gammaln(shape) + (shape - 1) * dual.log(x) - rate * x
    if f == "inverse_gamma":
        shape, scale = a
        return shape * np.log(scale) - special.gammaln(shape) - (shape + 1) * dual.log(x) - scale / x
    if f == "uniform":
        return -np.log(a[1] - a[0])
    if f == "beta":
        return _beta(x, *a)
    if f == "beta_on_pm1":
        return _beta((x + 1.0) / 2.0, *a) - dual.LOG_2
    if f == "half_normal":
        return dual.LOG_2 + _normal(x, *a)
    if f == "half_t":
        return dual.LOG_2 + _student_t(x, *a)
    if f == "half_cauchy":
        return dual.LOG_2 + _cauchy(x, *a)
    if f == "chi_square":
        k = a[0]
        return (k / 2 - 1) * dual.log(x) - x / 2 - (k / 2) * dual.LOG_2 - special.gammaln(k / 2)
    # exponential
    return np.log(a[0]) - a[0] * x


class PriorSet(BaseModel):
    """Prioris de un modelo: una por parámetro, en el orden del layout"""

    model_config = ConfigDict(frozen=True)

    priors: Dict[str, PriorSpec]
    domains: Dict[str, str]

    @model_validator(mode="after")
    def validate_domains(self):
        if set(self.priors) != set(self.domains):
            raise ValueError("cada parámetro debe tener exactamente una priori")
        for name, p in self.priors.items():
            expected = PARAM_TO_PRIOR_DOMAIN[self.domains[name]]
            if p.domain != expected:
                raise ValueError(f"la priori de {name} tiene dominio {p.domain}, se esperaba {expected}")
        return self

    def __getitem__(self, name: str) -> PriorSpec:
        return self.priors[name]

    def __contains__(self, name: str) -> bool:
        return name in self.priors

    def names(self) -> List[str]:
        return list(self.priors)

    def members(self, name: str) -> List[str]:
        """Parámetros que designa `name`: él mismo o todo el grupo (ar -> ar[1], ar[2]...)"""
        if name in self.priors:
            return [name]
        compact = name.replace(" ", "")
        if compact in self.priors:
            return [compact]
        return [n for n in self.priors if n.startswith(compact + "[")]


def _default_for(name: str) -> PriorSpec:
    group = name.split("[")[0]
    if group in ("mu0", "breg"):
        return make_prior("student_t", 0, 2.5, 6)
    if group == "sigma0":
        return make_prior("half_t", 0, 1, 7)
    if group in ("ar", "ma", "sar", "sma"):
        return make_prior("normal", 0, 0.5, domain="pm1")
    if group in ("arch", "garch"):
        return make_prior("normal", 0, 0.5, domain="unit")
    if group == "dfv":
        return make_prior("gamma", 2, 0.1, domain="df")
    raise UnknownParameterError(f"parámetro sin priori por defecto: {name}")


def default_priors(model) -> PriorSet:
    """
    Prioris débilmente informativas por defecto

    Args:
        model: Especificación con atributo `layout` (lista de (nombre, dominio))
    """
    priors = {entry.name: _default_for(entry.name) for entry in model.layout}
    domains = {entry.name: entry.domain for entry in model.layout}
    return PriorSet(priors=priors, domains=domains)


def adapt_to_domain(p: PriorSpec, name: str, param_domain: str) -> PriorSpec:
    """Ajusta la priori al dominio del parámetro o la rechaza"""
    target = PARAM_TO_PRIOR_DOMAIN[param_domain]
    if p.domain == target:
        return p
    if p.family in ("normal", "uniform") and target in ("pm1", "unit"):
        return make_prior(p.family, *p.params, domain=target)
    if p.family == "beta" and target == "pm1":
        return make_prior("beta_on_pm1", *p.params)
    if p.domain == "positive" and target == "df":
        return make_prior(p.family, *p.params, domain="df")
    allowed = ", ".join(DOMAIN_FAMILIES[target])
    raise PriorDomainError(f"{p.family} no es válida para {name} (dominio {target}); familias admitidas: {allowed}")


def set_prior(ps: PriorSet, name: str, p: PriorSpec) -> PriorSet:
    """
    Asigna una priori a un parámetro o a todo un grupo

    Returns:
        Nuevo PriorSet; el original no se modifica
    """
    targets = ps.members(name)
    if not targets:
        raise UnknownParameterError(f"el modelo no tiene el parámetro '{name}'")
    priors = dict(ps.priors)
    for target in targets:
        priors[target] = adapt_to_domain(p, target, ps.domains[target])
        logger.debug(f"Priori actualizada: {format_prior(target, priors[target])}")
    return PriorSet(priors=priors, domains=dict(ps.domains))


def get_prior(ps: PriorSet, name: str) -> str:
    """Líneas impresas de la priori de un parámetro o de un grupo"""
    targets = ps.members(name)
    if not targets:
        raise UnknownParameterError(f"el modelo no tiene el parámetro '{name}'")
    return "\n".join(format_prior(t, ps[t]) for t in targets)


def parameters(model) -> List[str]:
    """Nombres de los parámetros del modelo en el orden del layout"""
    return [entry.name for entry in model.layout]


def distributions(model, name: str) -> List[str]:
    """Familias a priori admitidas para un parámetro del modelo"""
    for entry in model.layout:
        if entry.name == name or entry.name.split("[")[0] == name:
            target = PARAM_TO_PRIOR_DOMAIN[entry.domain]
            return ["beta" if f == "beta_on_pm1" else f for f in DOMAIN_FAMILIES[target]]
    raise UnknownParameterError(f"el modelo no tiene el parámetro '{name}'")


def _fmt(v: float) -> str:
    return f"{v:g}"


def display_name(name: str) -> str:
    """ar[1] -> ar[ 1 ]"""
    return re.sub(r"\[(\d+)\]", r"[ \1 ]", name)


def format_prior(name: str, p: PriorSpec) -> str:
    """Formato impreso: `ar[ 1 ] ~ normal (mu = 0 , sd = 0.5 )`"""
    label, keys, sep = _PRINT_FORMAT[p.family]
    body = sep.join(f"{k} = {_fmt(v)}" for k, v in zip(keys, p.params))
    return f"{display_name(name)} ~ {label} ({body} )"


def prior_to_text(p: PriorSpec) -> str:
    """Sintaxis textual reutilizable por parse_prior: family(p1, p2)"""
    return f"{p.family}({', '.join(repr(float(v)) for v in p.params)})"


def parse_prior(text: str) -> PriorSpec:
    """Interpreta `family(p1, p2[, p3])`"""
    match = _PRIOR_RE.match(text)
    if not match:
        raise InvalidPriorError(f"sintaxis de priori inválida: '{text}'")
    family = _ALIASES.get(match.group(1).lower())
    if family is None:
        raise InvalidPriorError(f"familia a priori desconocida: '{match.group(1)}'")
    try:
        params = [float(v) for v in match.group(2).split(",") if v.strip()]
    except ValueError:
        raise InvalidPriorError(f"parámetros no numéricos en '{text}'")
    return make_prior(family, *params)


def parse_prior_line(line: str) -> Tuple[str, PriorSpec]:
    """Interpreta `name ~ family(p1, p2[, p3])`"""
    match = _LINE_RE.match(line)
    if not match:
        raise InvalidPriorError(f"línea de priori inválida: '{line}'")
    return match.group(1).replace(" ", ""), parse_prior(match.group(2))


def log_prior(ps: PriorSet, theta: dict):
    """Suma de log-densidades a priori sobre los valores restringidos"""
    total = 0.0
    for name, p in ps.priors.items():
        total = total + log_density(p, theta[name])
    return total
