# commands/fit.py - Subcomando fit: ajuste NUTS de un modelo declarado en un JSON

import logging
import os

import click

from commands import guarded, sampler_options, sampler_overrides
from services import artifacts, diagnostics
from services.model_builder import build_model, load_run_config, make_sampler_config
from services.nuts_sampler import sample

logger = logging.getLogger(__name__)


def fit_name(out_dir: str) -> str:
    """Nombre del ajuste en las comparaciones: el del directorio de salida"""
    return os.path.basename(os.path.normpath(out_dir)) or "model"


@click.command("fit")
@click.argument("config_path", type=click.Path(dir_okay=False))
@sampler_options
@click.option("--out", default=None, help="Directorio de salida (por defecto el campo output del JSON)")
@guarded
def fit_command(config_path, seed, chains, iterations, warmup, adapt_delta, out):
    """Ajusta el modelo de CONFIG_PATH y escribe el directorio del ajuste"""
    cfg = load_run_config(config_path)
    spec, y = build_model(cfg, os.path.dirname(os.path.abspath(config_path)))
    sampler_cfg = make_sampler_config(cfg, **sampler_overrides(seed, chains, iterations, warmup, adapt_delta))
    out = out or cfg.output

    fit = sample(spec, y, sampler_cfg, name=fit_name(out))
    artifacts.write_fit(fit, out)
    click.echo(diagnostics.summary_text(fit), nl=False)
