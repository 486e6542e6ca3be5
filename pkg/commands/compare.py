# commands/compare.py - Subcomando compare: LOO, WAIC, criterios de información o factor de Bayes

import logging

import click

from commands import guarded
from config.settings import settings
from services import artifacts, model_selection

logger = logging.getLogger(__name__)


@click.command("compare")
@click.argument("fit_dirs", nargs=-1, required=True, type=click.Path(file_okay=False))
@click.option("--method", type=click.Choice(["loo", "waic", "bic", "bf"]), default="loo", show_default=True)
@click.option("--seed", type=click.IntRange(min=0), default=None, help="Semilla del bridge sampling")
@click.option("--out", default=None, type=click.Path(dir_okay=False), help="CSV con la tabla de comparación")
@guarded
def compare_command(fit_dirs, method, seed, out):
    """Compara los ajustes guardados en FIT_DIRS"""
    if method == "bf" and len(fit_dirs) != 2:
        raise click.UsageError("--method bf compara exactamente dos ajustes")
    if method in ("loo", "waic") and len(fit_dirs) < 2:
        raise click.UsageError(f"--method {method} necesita al menos dos ajustes")

    fits = [artifacts.read_fit(path) for path in fit_dirs]
    names = model_selection.comparison_names(fits)

    if method == "bf":
        log_bf = model_selection.bayes_factor(fits[0], fits[1], log=True, seed=seed)
        click.echo(model_selection.bayes_factor_line(names[0], names[1], log_bf))
        return

    if method == "loo":
        table = model_selection.loo_compare([model_selection.psis_loo(f) for f in fits], names)
    elif method == "waic":
        table = model_selection.waic_compare([model_selection.waic(f) for f in fits], names)
    else:
        table = model_selection.criteria_table(fits, names)

    if out:
        table.to_csv(out, float_format=settings.FLOAT_FORMAT, lineterminator="\n")
    table.index.name = None
    click.echo(table.to_string(float_format="{:.1f}".format))
