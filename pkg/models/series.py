# models/series.py - Contenedores de series temporales y regresores

from typing import List, Optional

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator


def _frozen_array(values, ndim: int) -> np.ndarray:
    arr = np.array(values, dtype=float)
    if arr.ndim != ndim:
        raise ValueError(f"se esperaba un arreglo de {ndim} dimensión(es), recibido {arr.ndim}")
    arr.setflags(write=False)
    return arr


class TimeSeries(BaseModel):
    """Serie univariante observada con su frecuencia estacional"""

    model_config = ConfigDict(arbitrary_types_allowed=True, frozen=True)

    values: np.ndarray
    frequency: int = Field(1, ge=1)
    start_index: int = 1
    name: str = "y"

    @field_validator("values", mode="before")
    @classmethod
    def validate_values(cls, v):
        """Convierte a vector de solo lectura y exige valores finitos"""
        arr = _frozen_array(v, 1)
        if arr.size < 1:
            raise ValueError("la serie debe tener al menos una observación")
        if not np.all(np.isfinite(arr)):
            bad = int(np.flatnonzero(~np.isfinite(arr))[0])
            raise ValueError(f"valor no finito en la posición {bad}")
        return arr

    def __len__(self) -> int:
        return int(self.values.size)


class RegressorMatrix(BaseModel):
    """Matriz de regresores X_t, una fila por observación"""

    model_config = ConfigDict(arbitrary_types_allowed=True, frozen=True)

    values: np.ndarray
    labels: List[str] = []
    # Si los regresores son términos de Fourier se pueden extender al futuro
    fourier_period: Optional[int] = None
    fourier_k: Optional[int] = None

    @field_validator("values", mode="before")
    @classmethod
    def validate_values(cls, v):
        arr = _frozen_array(v, 2)
        if not np.all(np.isfinite(arr)):
            raise ValueError("la matriz de regresores contiene valores no finitos")
        return arr

    @model_validator(mode="after")
    def validate_labels(self):
        if not self.labels:
            object.__setattr__(self, "labels", [f"x{i + 1}" for i in range(self.n_cols)])
        if len(self.labels) != self.n_cols:
            raise ValueError("el número de etiquetas no coincide con las columnas")
        return self

    @property
    def n_rows(self) -> int:
        return int(self.values.shape[0])

    @property
    def n_cols(self) -> int:
        return int(self.values.shape[1])

    @property
    def is_fourier(self) -> bool:
        return self.fourier_period is not None and self.fourier_k is not None
