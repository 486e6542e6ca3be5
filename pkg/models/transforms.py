# models/transforms.py - Transformaciones entre el espacio restringido y el no restringido

from typing import Dict, List, Tuple

import numpy as np
from pydantic import BaseModel, ConfigDict, field_validator, model_validator
from scipy import special

from models.specs import ParamEntry
from utils import dual


class ParamVector(BaseModel):
    """Vector plano de parámetros no restringidos con su layout"""

    model_config = ConfigDict(arbitrary_types_allowed=True, frozen=True)

    unconstrained: np.ndarray
    layout: List[ParamEntry]

    @field_validator("unconstrained", mode="before")
    @classmethod
    def validate_unconstrained(cls, v):
        arr = np.array(v, dtype=float).reshape(-1)
        arr.setflags(write=False)
        return arr

    @model_validator(mode="after")
    def validate_length(self):
        if self.unconstrained.size != len(self.layout):
            raise ValueError(f"el vector tiene {self.unconstrained.size} valores y el layout {len(self.layout)}")
        return self


def constrain_value(domain: str, u):
    """
    Lleva u al dominio del parámetro

    Returns:
        (valor restringido, log|jacobiano|)
    """
    if domain == "real":
        return u, 0.0
    if domain == "positive":
        return dual.exp(u), u
    if domain == "pm1":
        # ln(1 - tanh²u) escrito de forma estable
        return dual.tanh(u), 2.0 * (dual.LOG_2 - u - dual.softplus(-2.0 * u))
    if domain == "unit":
        return dual.expit(u), -dual.softplus(-u) - dual.softplus(u)
    if domain == "df":
        return 2.0 + dual.exp(u), u
    raise ValueError(f"dominio desconocido: {domain}")


def unconstrain_value(domain: str, x):
    x = np.asarray(x, dtype=float)
    if domain == "real":
        return x
    if domain == "positive":
        return np.log(x)
    if domain == "pm1":
        return np.arctanh(x)
    if domain == "unit":
        return special.logit(x)
    if domain == "df":
        return np.log(x - 2.0)
    raise ValueError(f"dominio desconocido: {domain}")


def _values(u):
    if isinstance(u, ParamVector):
        return u.unconstrained
    return u


def constrain(spec, u) -> Tuple[Dict[str, object], object]:
    """
    Transforma el vector no restringido al espacio de los parámetros

    Args:
        spec: Especificación (o cualquier objeto con `layout`)
        u: ParamVector, ndarray o Dual de longitud P

    Returns:
        (diccionario nombre -> valor, log-jacobiano total)
    """
    u = _values(u)
    theta, log_jacobian = {}, 0.0
    for i, entry in enumerate(spec.layout):
        theta[entry.name], lj = constrain_value(entry.domain, u[i])
        log_jacobian = log_jacobian + lj
    return theta, log_jacobian


def unconstrain(spec, theta: Dict[str, float]) -> ParamVector:
    """Inversa de constrain"""
    values = [float(unconstrain_value(entry.domain, theta[entry.name])) for entry in spec.layout]
    return ParamVector(unconstrained=values, layout=spec.layout)


def constrain_matrix(layout: List[ParamEntry], u: np.ndarray) -> np.ndarray:
    """Aplica constrain columna a columna a una matriz (..., P) de draws"""
    u = np.asarray(u, dtype=float)
    out = np.empty_like(u)
    for i, entry in enumerate(layout):
        out[..., i] = constrain_value(entry.domain, u[..., i])[0]
    return out


def unconstrain_matrix(layout: List[ParamEntry], x: np.ndarray) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    out = np.empty_like(x)
    for i, entry in enumerate(layout):
        out[..., i] = unconstrain_value(entry.domain, x[..., i])
    return out
