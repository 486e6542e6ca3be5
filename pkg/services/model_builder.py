# services/model_builder.py - Construcción del modelo y la serie a partir del archivo de ejecución

import json
import logging
import os
from typing import Optional, Tuple

import numpy as np
from pydantic import ValidationError

from models.priors import parse_prior
from models.schemas import RunConfig, SamplerConfig
from models.series import RegressorMatrix, TimeSeries
from models.specs import make_garch, make_sarima
from utils.exceptions import ConfigError
from utils.series_ops import fourier_terms, load_csv

logger = logging.getLogger(__name__)


def load_run_config(path: str) -> RunConfig:
    """
    Lee y valida el JSON de ejecución

    Raises:
        ConfigError: archivo ausente, JSON inválido o campos no válidos
    """
    if not os.path.exists(path):
        raise ConfigError(f"no existe el archivo de configuración: {path}")
    try:
        with open(path, encoding="utf-8") as f:
            raw = json.load(f)
        return RunConfig(**raw)
    except json.JSONDecodeError as e:
        raise ConfigError(f"JSON inválido en {path}: {str(e)}")
    except ValidationError as e:
        first = e.errors()[0]
        location = ".".join(str(p) for p in first["loc"])
        raise ConfigError(f"configuración inválida en {path}: {location}: {first['msg']}")


def _data_path(cfg: RunConfig, base_dir: str) -> str:
    path = cfg.data.path
    return path if os.path.isabs(path) else os.path.join(base_dir, path)


def load_series(cfg: RunConfig, base_dir: str = ".") -> Tuple[TimeSeries, Optional[RegressorMatrix]]:
    """Serie y regresores explícitos declarados en el bloque data"""
    data = cfg.data
    path = _data_path(cfg, base_dir)
    y = load_csv(path, data.column, data.frequency, data.header)
    if isinstance(data.column, str) and not data.column.isdigit():
        y = y.model_copy(update={"name": data.column})
    if not data.xreg_columns:
        return y, None
    columns = [load_csv(path, c, data.frequency, data.header).values for c in data.xreg_columns]
    return y, RegressorMatrix(values=np.column_stack(columns), labels=list(data.xreg_columns))


def build_model(cfg: RunConfig, base_dir: str = "."):
    """
    Especificación del modelo con las prioris del archivo aplicadas

    Args:
        cfg: Configuración validada
        base_dir: Directorio respecto al que se resuelven rutas relativas

    Returns:
        (spec, serie)
    """
    y, xreg = load_series(cfg, base_dir)
    model = cfg.model
    if model.family == "garch":
        if xreg is not None or model.fourier_k is not None:
            raise ConfigError("los modelos GARCH no admiten regresores")
        spec = make_garch(model.garch_order[0], model.garch_order[1], model.innovation)
    else:
        if model.fourier_k is not None:
            if xreg is not None:
                raise ConfigError("no se pueden combinar regresores explícitos y términos de Fourier")
            xreg = fourier_terms(len(y), cfg.data.frequency, model.fourier_k)
        spec = make_sarima(model.order, model.seasonal, cfg.data.frequency, xreg)

    for name, text in cfg.priors.items():
        spec = spec.with_prior(name, parse_prior(text))
    spec.check_series(y)
    logger.info(f"Modelo {spec.label()} sobre {len(y)} observaciones")
    return spec, y


def make_sampler_config(cfg: Optional[RunConfig] = None, **overrides) -> SamplerConfig:
    """SamplerConfig del archivo (si lo hay) con las opciones de la CLI encima"""
    try:
        if cfg is not None:
            return cfg.sampler_config(**overrides)
        return SamplerConfig(**{k: v for k, v in overrides.items() if v is not None})
    except ValidationError as e:
        raise ConfigError(f"opciones del muestreador inválidas: {e.errors()[0]['msg']}")
