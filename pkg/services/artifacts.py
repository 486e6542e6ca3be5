# services/artifacts.py - Persistencia del directorio de un ajuste (CSV/JSON)

import json
import logging
import os
from typing import Optional

import numpy as np
import pandas as pd

from config.settings import settings
from models.fit import DrawsMatrix, FitResult
from models.priors import parse_prior, prior_to_text
from models.schemas import SamplerConfig, SamplerReport
from models.series import RegressorMatrix, TimeSeries
from models.specs import make_garch, make_sarima
from models.transforms import unconstrain_matrix
from services import diagnostics, posterior
from utils.exceptions import ConfigError, TsBayesError
from utils.series_ops import fourier_terms

logger = logging.getLogger(__name__)

MODEL_FILE = "model.json"
SERIES_FILE = "series.csv"
XREG_FILE = "xreg.csv"
DRAWS_FILE = "draws.csv"
POINTWISE_FILE = "pointwise_loglik.csv"
REPORT_FILE = "report.json"
SUMMARY_TXT = "summary.txt"
SUMMARY_CSV = "summary.csv"
FITTED_FILE = "fitted_quantiles.csv"
RESIDUAL_FILE = "residual_quantiles.csv"
PLOT_SERIES_FILE = "plot_series.csv"
PLOT_ACF_FILE = "plot_residual_acf.csv"
PLOT_TRACE_FILE = "plot_trace.csv"
SEARCH_TRACE_FILE = "search_trace.csv"


def _to_csv(frame: pd.DataFrame, path: str, index: bool = False):
    frame.to_csv(path, index=index, float_format=settings.FLOAT_FORMAT, lineterminator="\n")


def model_document(fit: FitResult) -> dict:
    """Descripción JSON del modelo: especificación, prioris en sintaxis textual y metadatos de la serie"""
    spec = fit.spec
    doc = {
        "name": fit.name,
        "family": spec.family,
        "label": spec.label(),
        "priors": {name: prior_to_text(spec.priors[name]) for name in spec.priors.names()},
        "series": {"name": fit.y.name, "frequency": fit.y.frequency, "start_index": fit.y.start_index},
    }
    if spec.family == "sarima":
        doc.update(order=[spec.p, spec.d, spec.q], seasonal=[spec.P, spec.D, spec.Q], s=spec.s)
        if spec.xreg is None:
            doc["xreg"] = None
        elif spec.xreg.is_fourier:
            doc["xreg"] = {"kind": "fourier", "period": spec.xreg.fourier_period, "k": spec.xreg.fourier_k}
        else:
            doc["xreg"] = {"kind": "explicit", "labels": list(spec.xreg.labels)}
    else:
        doc.update(s_arch=spec.s_arch, k_garch=spec.k_garch, innovation=spec.innovation)
    return doc


def draws_frame(fit: FitResult) -> pd.DataFrame:
    """draws.csv: chain, iter, parámetros restringidos y lp__"""
    draws = fit.draws
    chains, iters, _ = draws.draws.shape
    frame = pd.DataFrame(draws.flat(), columns=draws.names)
    frame.insert(0, "iter", np.tile(np.arange(1, iters + 1), chains))
    frame.insert(0, "chain", np.repeat(np.arange(1, chains + 1), iters))
    frame["lp__"] = draws.log_posterior.reshape(-1)
    return frame


def write_fit(fit: FitResult, out_dir: str, search=None) -> str:
    """
    Escribe el directorio completo de un ajuste

    Args:
        fit: Ajuste
        out_dir: Directorio de salida (se crea si no existe)
        search: SearchResult opcional de la selección automática (search_trace.csv)

    Returns:
        Ruta del directorio
    """
    os.makedirs(out_dir, exist_ok=True)

    with open(os.path.join(out_dir, MODEL_FILE), "w", encoding="utf-8") as f:
        json.dump(model_document(fit), f, indent=2)
    _to_csv(pd.DataFrame({fit.y.name: fit.y.values}), os.path.join(out_dir, SERIES_FILE))
    xreg = getattr(fit.spec, "xreg", None)
    if xreg is not None and not xreg.is_fourier:
        _to_csv(pd.DataFrame(xreg.values, columns=xreg.labels), os.path.join(out_dir, XREG_FILE))

    _to_csv(draws_frame(fit), os.path.join(out_dir, DRAWS_FILE))
    pointwise = fit.draws.pointwise_loglik
    _to_csv(pd.DataFrame(pointwise, columns=[f"obs_{i}" for i in range(1, pointwise.shape[1] + 1)]),
            os.path.join(out_dir, POINTWISE_FILE))
    with open(os.path.join(out_dir, REPORT_FILE), "w", encoding="utf-8") as f:
        json.dump({"report": fit.report.model_dump(), "config": fit.config.model_dump()}, f, indent=2)

    with open(os.path.join(out_dir, SUMMARY_TXT), "w", encoding="utf-8") as f:
        f.write(diagnostics.summary_text(fit))
    diagnostics.summary_csv(fit, os.path.join(out_dir, SUMMARY_CSV))

    _to_csv(posterior.fitted_quantiles(fit), os.path.join(out_dir, FITTED_FILE))
    _to_csv(posterior.residual_quantiles(fit), os.path.join(out_dir, RESIDUAL_FILE))
    _to_csv(pd.DataFrame({"t": fit.y.start_index + np.arange(len(fit.y)), "value": fit.y.values}),
            os.path.join(out_dir, PLOT_SERIES_FILE))
    try:
        _to_csv(posterior.residual_correlogram(fit), os.path.join(out_dir, PLOT_ACF_FILE))
    except TsBayesError as e:
        logger.warning(f"No se pudo calcular el correlograma de residuos: {str(e)}")
    _to_csv(posterior.trace_data(fit), os.path.join(out_dir, PLOT_TRACE_FILE))

    if search is not None:
        write_search_trace(search, os.path.join(out_dir, SEARCH_TRACE_FILE))
    logger.info(f"Ajuste {fit.name} guardado en {out_dir}")
    return out_dir


def search_trace_frame(search) -> pd.DataFrame:
    accepted = {(c.p, c.q, c.P, c.Q) for c in search.path}
    return pd.DataFrame([
        {
            "order": c.label(search.s),
            "p": c.p, "d": c.d, "q": c.q, "P": c.P, "D": c.D, "Q": c.Q,
            "bic": c.bic,
            "converged": c.converged,
            "accepted": (c.p, c.q, c.P, c.Q) in accepted,
        }
        for c in search.candidates
    ])


def write_search_trace(search, path: str):
    _to_csv(search_trace_frame(search), path)


def _read_json(path: str) -> dict:
    if not os.path.exists(path):
        raise ConfigError(f"no es un directorio de ajuste (falta {os.path.basename(path)}): {os.path.dirname(path)}")
    with open(path, encoding="utf-8") as f:
        return json.load(f)


def _rebuild_spec(doc: dict, fit_dir: str, n: int):
    if doc["family"] == "garch":
        spec = make_garch(doc["s_arch"], doc["k_garch"], doc["innovation"])
    else:
        xreg: Optional[RegressorMatrix] = None
        info = doc.get("xreg")
        if info and info["kind"] == "fourier":
            xreg = fourier_terms(n, info["period"], info["k"])
        elif info:
            frame = pd.read_csv(os.path.join(fit_dir, XREG_FILE), float_precision="round_trip")
            xreg = RegressorMatrix(values=frame.to_numpy(dtype=float), labels=list(frame.columns))
        spec = make_sarima(tuple(doc["order"]), tuple(doc["seasonal"]), doc["s"], xreg)
    for name, text in doc["priors"].items():
        spec = spec.with_prior(name, parse_prior(text))
    return spec


def read_fit(fit_dir: str) -> FitResult:
    """
    Reconstruye un FitResult a partir de un directorio escrito por write_fit

    Raises:
        ConfigError: si el directorio no contiene un ajuste
    """
    doc = _read_json(os.path.join(fit_dir, MODEL_FILE))
    saved = _read_json(os.path.join(fit_dir, REPORT_FILE))
    meta = doc["series"]
    series = pd.read_csv(os.path.join(fit_dir, SERIES_FILE), float_precision="round_trip")
    y = TimeSeries(values=series.iloc[:, 0].to_numpy(dtype=float), frequency=meta["frequency"],
                   start_index=meta["start_index"], name=meta["name"])
    spec = _rebuild_spec(doc, fit_dir, len(y))

    frame = pd.read_csv(os.path.join(fit_dir, DRAWS_FILE), float_precision="round_trip")
    names = [entry.name for entry in spec.layout]
    chains = int(frame["chain"].max())
    iters = int(frame["iter"].max())
    constrained = frame[names].to_numpy(dtype=float).reshape(chains, iters, len(names))
    draws = DrawsMatrix(
        draws=constrained,
        unconstrained=unconstrain_matrix(spec.layout, constrained),
        log_posterior=frame["lp__"].to_numpy(dtype=float).reshape(chains, iters),
        pointwise_loglik=pd.read_csv(os.path.join(fit_dir, POINTWISE_FILE),
                                     float_precision="round_trip").to_numpy(dtype=float),
        names=names,
    )
    logger.info(f"Ajuste {doc['name']} leído de {fit_dir}: {draws.n_draws} draws")
    return FitResult(
        spec=spec,
        y=y,
        draws=draws,
        report=SamplerReport(**saved["report"]),
        config=SamplerConfig(**saved["config"]),
        name=doc["name"],
    )
