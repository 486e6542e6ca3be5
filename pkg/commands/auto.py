# commands/auto.py - Subcomando auto: selección stepwise del orden y ajuste del ganador

import logging

import click

from commands import guarded, sampler_options, sampler_overrides
from commands.fit import fit_name
from services import artifacts, diagnostics
from services.auto_order import fit_order, stepwise_search
from services.model_builder import make_sampler_config
from utils.series_ops import load_csv

logger = logging.getLogger(__name__)


@click.command("auto")
@click.argument("data_path", type=click.Path(dir_okay=False))
@click.option("--column", default="0", show_default=True, help="Nombre o índice de la columna")
@click.option("--frequency", type=click.IntRange(min=1), default=1, show_default=True, help="Periodo estacional")
@click.option("--header/--no-header", default=True, show_default=True)
@click.option("--criterion", type=click.Choice(["bic"]), default="bic", show_default=True,
              help="Criterio de la búsqueda")
@click.option("--trace", is_flag=True, help="Imprime el registro de candidatos en CSV")
@sampler_options
@click.option("--out", default="auto_fit", show_default=True, help="Directorio de salida")
@guarded
def auto_command(data_path, column, frequency, header, criterion, trace, seed, chains, iterations, warmup,
                 adapt_delta, out):
    """Busca el orden SARIMA de DATA_PATH por BIC y ajusta el modelo elegido"""
    y = load_csv(data_path, column, frequency, header)
    if not column.isdigit():
        y = y.model_copy(update={"name": column})
    sampler_cfg = make_sampler_config(**sampler_overrides(seed, chains, iterations, warmup, adapt_delta))

    logger.info(f"Búsqueda stepwise con criterio {criterion.upper()}")
    search = stepwise_search(y, frequency)
    if trace:
        click.echo(artifacts.search_trace_frame(search).to_csv(index=False, lineterminator="\n"), nl=False)
    fit = fit_order(y, search, sampler_cfg, name=fit_name(out))
    artifacts.write_fit(fit, out, search=search)
    click.echo(diagnostics.summary_text(fit), nl=False)
