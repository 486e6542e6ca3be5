# commands/forecast.py - Subcomando forecast: distribución predictiva de un ajuste guardado

import logging
import os

import click
import numpy as np
import pandas as pd

from commands import guarded
from config.settings import settings
from services import artifacts
from services.posterior import forecast_table, posterior_predict
from utils.exceptions import SeriesParseError

logger = logging.getLogger(__name__)

FORECAST_FILE = "forecast.csv"
PREDICTIVE_DRAWS_FILE = "predictive_draws.csv"


def _read_future(path: str) -> np.ndarray:
    if not os.path.exists(path):
        raise SeriesParseError(f"no existe el archivo de regresores futuros: {path}")
    frame = pd.read_csv(path, float_precision="round_trip")
    values = frame.apply(pd.to_numeric, errors="coerce").to_numpy(dtype=float)
    if not np.all(np.isfinite(values)):
        raise SeriesParseError(f"valores no numéricos en {path}")
    return values


@click.command("forecast")
@click.argument("fit_dir", type=click.Path(file_okay=False))
@click.option("--horizon", type=click.IntRange(min=1), required=True, help="Pasos a predecir")
@click.option("--out", default="forecast", show_default=True, help="Directorio de salida")
@click.option("--future", type=click.Path(dir_okay=False), default=None,
              help="CSV con las filas futuras de los regresores externos")
@click.option("--seed", type=click.IntRange(min=0), default=None, help="Semilla de las innovaciones")
@click.option("--draws", "dump_draws", is_flag=True, help="Guarda también todas las trayectorias")
@guarded
def forecast_command(fit_dir, horizon, out, future, seed, dump_draws):
    """Simula HORIZON pasos de la predictiva del ajuste en FIT_DIR"""
    fit = artifacts.read_fit(fit_dir)
    future_xreg = _read_future(future) if future else None
    pred = posterior_predict(fit, horizon, seed=seed, future_xreg=future_xreg)

    os.makedirs(out, exist_ok=True)
    table = forecast_table(pred)
    table.to_csv(os.path.join(out, FORECAST_FILE), index=False, float_format=settings.FLOAT_FORMAT,
                 lineterminator="\n")
    if dump_draws:
        columns = [f"h{i}" for i in range(1, pred.horizon + 1)]
        pd.DataFrame(pred.draws, columns=columns).to_csv(
            os.path.join(out, PREDICTIVE_DRAWS_FILE), index=False, float_format=settings.FLOAT_FORMAT,
            lineterminator="\n",
        )
    logger.info(f"Predicción guardada en {out}")
    click.echo(table.to_string(index=False, float_format="{:.4f}".format))
