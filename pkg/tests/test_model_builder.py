import json
import os

import numpy as np
import pytest

from services.model_builder import build_model, load_run_config, make_sampler_config
from utils.exceptions import ConfigError, UnknownParameterError


def _write_config(tmp_path, data_dir, **blocks):
    cfg = {"data": {"path": os.path.join(data_dir, "ar1_sample.csv"), "column": "y"}}
    cfg.update(blocks)
    path = tmp_path / "config.json"
    path.write_text(json.dumps(cfg), encoding="utf-8")
    return str(path)


def test_bundled_config_builds_an_ar1(data_dir):
    path = os.path.join(data_dir, "ar1_config.json")
    cfg = load_run_config(path)
    spec, y = build_model(cfg, data_dir)
    assert spec.label() == "Sarima(1,0,0)(0,0,0)[1]"
    assert len(y) == 120 and y.name == "y"
    assert make_sampler_config(cfg).chains == 2


def test_cli_overrides_take_precedence(data_dir):
    cfg = load_run_config(os.path.join(data_dir, "ar1_config.json"))
    sampler = make_sampler_config(cfg, iter=300, seed=None)
    assert sampler.iter == 300 and sampler.warmup == 150 and sampler.seed == 1234


def test_fourier_terms_from_the_model_block(tmp_path, data_dir):
    path = _write_config(tmp_path, data_dir, model={"order": [1, 0, 0], "fourier_k": 2},
                         data={"path": os.path.join(data_dir, "ar1_sample.csv"), "column": "y", "frequency": 12})
    spec, _ = build_model(load_run_config(path))
    assert spec.label() == "Sarima(1,0,0).reg[4]"


def test_unknown_prior_name_is_rejected(tmp_path, data_dir):
    path = _write_config(tmp_path, data_dir, priors={"ma": "normal(0, 1)"})
    with pytest.raises(UnknownParameterError):
        build_model(load_run_config(path))


def test_malformed_and_invalid_configs(tmp_path):
    bad_json = tmp_path / "bad.json"
    bad_json.write_text("{not json", encoding="utf-8")
    with pytest.raises(ConfigError):
        load_run_config(str(bad_json))
    unknown_key = tmp_path / "extra.json"
    unknown_key.write_text(json.dumps({"data": {"path": "x.csv"}, "colour": 1}), encoding="utf-8")
    with pytest.raises(ConfigError):
        load_run_config(str(unknown_key))
    with pytest.raises(ConfigError):
        load_run_config(str(tmp_path / "missing.json"))


def test_garch_rejects_regressors(tmp_path, data_dir):
    path = _write_config(tmp_path, data_dir, model={"family": "garch", "fourier_k": 1})
    with pytest.raises(ConfigError):
        build_model(load_run_config(path))


def test_invalid_sampler_options():
    with pytest.raises(ConfigError):
        make_sampler_config(iter=10, warmup=20)
    assert np.isclose(make_sampler_config(adapt_delta=0.95).adapt_delta, 0.95)
