# utils/reports.py - Bloques de texto impresos (modelo y resumen del ajuste) con Jinja2

import logging
from functools import lru_cache
from typing import List, NamedTuple, Optional

from jinja2 import Environment, FileSystemLoader

from config.settings import settings
from models.priors import format_prior

logger = logging.getLogger(__name__)

# Prefijo del parámetro -> título de la sección impresa
_SECTION_TITLES = [
    (("mu0",), "Intercept"),
    (("sigma0",), "Scale Parameter"),
    (("ar", "ma"), None),
    (("sar", "sma"), "Seasonal Parameters"),
    (("breg",), "Regression Parameters"),
    (("arch", "garch"), "GARCH Parameters"),
    (("dfv",), "Degrees of freedom"),
]


class PriorSection(NamedTuple):
    title: Optional[str]
    lines: List[str]


@lru_cache(maxsize=4)
def _environment(templates_dir: str) -> Environment:
    return Environment(
        loader=FileSystemLoader(templates_dir),
        trim_blocks=True,
        lstrip_blocks=True,
        keep_trailing_newline=True,
        autoescape=False,
    )


def render(template: str, **context) -> str:
    """Renderiza una plantilla de TSBAYES_TEMPLATES_DIR"""
    return _environment(settings.TEMPLATES_DIR).get_template(template).render(**context)


def prior_sections(spec) -> List[PriorSection]:
    """Prioris agrupadas por secciones, en el orden del layout"""
    priors = getattr(spec, "priors", None)
    if priors is None:
        return []
    sections = []
    for prefixes, title in _SECTION_TITLES:
        lines = [
            format_prior(entry.name, priors[entry.name])
            for entry in spec.layout
            if entry.name.split("[")[0] in prefixes
        ]
        if lines:
            sections.append(PriorSection(title, lines))
    return sections


def _header_context(spec, y) -> dict:
    return {
        "series_name": y.name,
        "label": spec.label(),
        "n_obs": len(y),
        "d": getattr(spec, "d", 0),
        "D": getattr(spec, "D", 0),
        "n_eff": spec.n_effective(y),
    }


def render_model_print(spec, y) -> str:
    """
    Bloque impreso del modelo

    Returns:
        Texto con cabecera `y ~ Sarima(...)`, observaciones y prioris
    """
    return render("model_print.txt.j2", sections=prior_sections(spec), **_header_context(spec, y))


def render_fit_summary(fit, table: str) -> str:
    """Resumen del ajuste: cabecera del modelo, tabla de parámetros y pie"""
    return render(
        "fit_summary.txt.j2",
        table=table,
        sampler=fit.report.sampler,
        divergences=fit.report.total_divergences,
        **_header_context(fit.spec, fit.y),
    )
