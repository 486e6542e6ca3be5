# commands/__init__.py - Opciones compartidas y traducción de errores a códigos de salida

import functools
import logging

import click

from utils.exceptions import SamplerInitError, TsBayesError

logger = logging.getLogger(__name__)


class UserError(click.ClickException):
    """Error de configuración o de datos (código de salida 2)"""

    exit_code = 2


class SamplerFailure(click.ClickException):
    """El muestreador no pudo inicializarse (código de salida 3)"""

    exit_code = 3


def guarded(command):
    """Traduce los errores del motor a excepciones de click con su código de salida"""
    @functools.wraps(command)
    def wrapper(*args, **kwargs):
        try:
            return command(*args, **kwargs)
        except SamplerInitError as e:
            logger.error(f"Fallo del muestreador: {str(e)}")
            raise SamplerFailure(str(e))
        except TsBayesError as e:
            logger.error(f"{type(e).__name__}: {str(e)}")
            raise UserError(str(e))
    return wrapper


def sampler_options(command):
    """--seed, --chains, --iter, --warmup y --adapt-delta"""
    options = [
        click.option("--seed", type=click.IntRange(min=0), default=None, help="Semilla del muestreador"),
        click.option("--chains", type=click.IntRange(min=1), default=None, help="Número de cadenas"),
        click.option("--iter", "iterations", type=click.IntRange(min=2), default=None,
                     help="Iteraciones por cadena (warmup incluido)"),
        click.option("--warmup", type=click.IntRange(min=1), default=None, help="Iteraciones de warmup"),
        click.option("--adapt-delta", type=click.FloatRange(0.0, 1.0, min_open=True, max_open=True),
                     default=None, help="Aceptación objetivo de la adaptación"),
    ]
    for option in reversed(options):
        command = option(command)
    return command


def sampler_overrides(seed, chains, iterations, warmup, adapt_delta) -> dict:
    return {"seed": seed, "chains": chains, "iter": iterations, "warmup": warmup, "adapt_delta": adapt_delta}
