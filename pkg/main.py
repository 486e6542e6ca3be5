# main.py - Punto de entrada de la línea de comandos de tsbayes

import logging

import click
from dotenv import load_dotenv

load_dotenv()

from config.settings import settings

# Importar los subcomandos
from commands.auto import auto_command
from commands.compare import compare_command
from commands.fit import fit_command
from commands.forecast import forecast_command


def configure_logging(level: str):
    logging.basicConfig(
        level=getattr(logging, level, logging.INFO),
        format='%(asctime)s - %(name)s - %(levelname)s - %(message)s',
        handlers=[
            logging.StreamHandler()
        ]
    )


logger = logging.getLogger(__name__)


@click.group()
@click.option("--log-level", default=None, help="Nivel de logging (por defecto TSBAYES_LOG_LEVEL)")
def cli(log_level):
    """Modelos bayesianos de series temporales: SARIMA, regresión dinámica y GARCH con NUTS"""
    configure_logging((log_level or settings.LOG_LEVEL).upper())


cli.add_command(fit_command)
cli.add_command(auto_command)
cli.add_command(forecast_command)
cli.add_command(compare_command)


if __name__ == "__main__":
    cli()
