import json
import os

import pytest
from click.testing import CliRunner

from main import cli

SAMPLER = ["--chains", "1", "--iter", "300", "--seed", "5"]


@pytest.fixture
def runner():
    return CliRunner(mix_stderr=False)


@pytest.fixture
def config_path(tmp_path, data_dir):
    with open(os.path.join(data_dir, "ar1_config.json"), encoding="utf-8") as f:
        cfg = json.load(f)
    cfg["data"]["path"] = os.path.join(data_dir, "ar1_sample.csv")
    path = tmp_path / "ar1.json"
    path.write_text(json.dumps(cfg), encoding="utf-8")
    return str(path)


def _fit(runner, config_path, out, *extra):
    return runner.invoke(cli, ["fit", config_path, *SAMPLER, *extra, "--out", out])


def test_fit_writes_directory_and_prints_summary(runner, config_path, tmp_path):
    out = str(tmp_path / "ar1")
    result = _fit(runner, config_path, out)
    assert result.exit_code == 0, result.output
    assert result.output.startswith("y ~ Sarima(1,0,0)(0,0,0)[1]")
    assert "Rhat" in result.output
    assert os.path.exists(os.path.join(out, "draws.csv"))


def test_same_seed_gives_byte_identical_draws(runner, config_path, tmp_path):
    first, second = str(tmp_path / "a"), str(tmp_path / "b")
    assert _fit(runner, config_path, first).exit_code == 0
    assert _fit(runner, config_path, second).exit_code == 0
    with open(os.path.join(first, "draws.csv"), "rb") as a, open(os.path.join(second, "draws.csv"), "rb") as b:
        assert a.read() == b.read()


def test_unknown_prior_exits_with_code_2(runner, tmp_path, data_dir):
    path = tmp_path / "bad.json"
    path.write_text(json.dumps({
        "data": {"path": os.path.join(data_dir, "ar1_sample.csv"), "column": "y"},
        "model": {"order": [1, 0, 0]},
        "priors": {"theta": "normal(0, 1)"},
    }), encoding="utf-8")
    result = runner.invoke(cli, ["fit", str(path), "--out", str(tmp_path / "never")])
    assert result.exit_code == 2
    assert not os.path.exists(tmp_path / "never")


def test_missing_data_file_exits_with_code_2(runner, tmp_path):
    path = tmp_path / "missing.json"
    path.write_text(json.dumps({"data": {"path": "nowhere.csv"}}), encoding="utf-8")
    assert runner.invoke(cli, ["fit", str(path)]).exit_code == 2


def test_forecast_and_compare_from_saved_fits(runner, config_path, tmp_path):
    fit_dir = str(tmp_path / "ar1")
    assert _fit(runner, config_path, fit_dir).exit_code == 0

    forecast_dir = str(tmp_path / "forecast")
    result = runner.invoke(cli, ["forecast", fit_dir, "--horizon", "4", "--out", forecast_dir, "--draws"])
    assert result.exit_code == 0, result.output
    assert os.path.exists(os.path.join(forecast_dir, "forecast.csv"))
    assert os.path.exists(os.path.join(forecast_dir, "predictive_draws.csv"))

    result = runner.invoke(cli, ["compare", fit_dir, fit_dir, "--method", "loo"])
    assert result.exit_code == 0, result.output
    assert "elpd_diff" in result.output
    assert "ar1.2" in result.output


def test_bayes_factor_needs_exactly_two_fits(runner, config_path, tmp_path):
    fit_dir = str(tmp_path / "ar1")
    assert _fit(runner, config_path, fit_dir).exit_code == 0
    result = runner.invoke(cli, ["compare", fit_dir, fit_dir, fit_dir, "--method", "bf"])
    assert result.exit_code == 2


def test_compare_rejects_non_fit_directories(runner, tmp_path):
    result = runner.invoke(cli, ["compare", str(tmp_path), str(tmp_path)])
    assert result.exit_code == 2


def test_auto_selects_and_fits(runner, data_dir, tmp_path):
    out = str(tmp_path / "auto")
    result = runner.invoke(cli, ["auto", os.path.join(data_dir, "ar1_sample.csv"), "--column", "y", "--trace",
                                 *SAMPLER, "--out", out])
    assert result.exit_code == 0, result.output
    assert result.output.startswith("order,p,d,q,P,D,Q,bic,converged,accepted")
    assert os.path.exists(os.path.join(out, "search_trace.csv"))
