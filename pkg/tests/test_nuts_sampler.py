import numpy as np
import pytest
from scipy import stats

from models.fit import extract
from models.likelihood import LogPosteriorResult
from models.schemas import SamplerConfig
from models.series import TimeSeries
from models.specs import ParamEntry, make_sarima
from models.targets import GaussianTarget
from services.autodiff import value_and_grad
from services.diagnostics import ess_bulk, split_rhat
from services.nuts_sampler import DualAveraging, WindowedMetric, fit_from_draws, kinetic_energy, leapfrog, sample
from utils.exceptions import SamplerInitError

DUMMY = TimeSeries(values=[0.0])


class _NowhereFinite:
    """Densidad sin ningún punto con log-densidad finita"""

    layout = [ParamEntry("x[1]", "real")]

    def label(self):
        return "NowhereFinite"

    def check_series(self, y):
        return None

    def log_posterior(self, y, u):
        return LogPosteriorResult(-np.inf, np.zeros(1), np.zeros(1), 0.0, 0.0)


def test_standard_normal_moments():
    fit = sample(GaussianTarget.standard(2), DUMMY, SamplerConfig(chains=2, iter=2000, seed=3))
    flat = fit.draws.flat()
    assert flat.shape == (2000, 2)
    np.testing.assert_allclose(flat.mean(axis=0), 0.0, atol=0.15)
    np.testing.assert_allclose(flat.std(axis=0), 1.0, atol=0.15)
    assert fit.report.total_divergences == 0


def test_same_seed_gives_identical_draws():
    cfg = SamplerConfig(chains=2, iter=200, seed=21)
    a = sample(GaussianTarget.standard(3), DUMMY, cfg)
    b = sample(GaussianTarget.standard(3), DUMMY, cfg)
    np.testing.assert_array_equal(a.draws.draws, b.draws.draws)


def test_different_seeds_give_different_draws():
    a = sample(GaussianTarget.standard(1), DUMMY, SamplerConfig(chains=1, iter=100, seed=1))
    b = sample(GaussianTarget.standard(1), DUMMY, SamplerConfig(chains=1, iter=100, seed=2))
    assert not np.array_equal(a.draws.draws, b.draws.draws)


def test_draws_are_stored_on_the_constrained_scale(ar1_fit):
    assert np.all(extract(ar1_fit, "sigma0") > 0)
    assert np.all(np.abs(extract(ar1_fit, "ar[1]")) < 1)
    np.testing.assert_allclose(np.exp(ar1_fit.draws.unconstrained[..., 1]), ar1_fit.draws.draws[..., 1])


def test_ar1_posterior_recovers_coefficient(ar1_fit):
    assert np.mean(extract(ar1_fit, "ar[1]")) == pytest.approx(0.6, abs=0.2)
    assert ar1_fit.draws.pointwise_loglik.shape == (600, 120)


def test_fit_from_draws_recomputes_loglik():
    y = TimeSeries(values=np.random.default_rng(0).normal(size=30))
    spec = make_sarima((0, 0, 0))
    draws = np.column_stack([np.zeros(50), np.ones(50)])
    fit = fit_from_draws(spec, y, draws)
    assert fit.draws.n_chains == 1 and fit.draws.n_iter == 50
    expected = spec.log_posterior(y, np.zeros(2)).pointwise_loglik
    np.testing.assert_allclose(fit.draws.pointwise_loglik[0], expected)
    assert fit.report.sampler == "external"


def test_dual_averaging_shrinks_step_when_acceptance_is_low():
    adaptation = DualAveraging(1.0, 0.8)
    for _ in range(50):
        epsilon = adaptation.update(0.1)
    assert epsilon < 1.0
    assert adaptation.final_epsilon() < 1.0


def test_dual_averaging_grows_step_when_acceptance_is_high():
    adaptation = DualAveraging(0.1, 0.8)
    for _ in range(50):
        adaptation.update(1.0)
    assert adaptation.final_epsilon() > 0.1


def test_windowed_metric_estimates_variances():
    metric = WindowedMetric(2, 1000)
    rng = np.random.default_rng(0)
    for _ in range(1000):
        metric.learn(rng.normal(scale=[1.0, 3.0]))
    assert metric.inv_metric[1] > 4 * metric.inv_metric[0]


def test_nowhere_finite_density_fails_to_initialize():
    with pytest.raises(SamplerInitError):
        sample(_NowhereFinite(), DUMMY, SamplerConfig(chains=1, iter=10, seed=0))


def test_warmup_must_be_shorter_than_iter():
    with pytest.raises(ValueError):
        SamplerConfig(iter=100, warmup=100)


def _trajectory(fn, theta, r, epsilon, inv_metric, steps):
    L, grad = fn(theta)
    path = [(theta, r, L)]
    for _ in range(steps):
        theta, r, L, grad = leapfrog(fn, theta, grad, r, epsilon, inv_metric)
        path.append((theta, r, L))
    return path


def test_leapfrog_is_reversible():
    target = GaussianTarget.ill_conditioned(5, 10.0)
    fn = value_and_grad(target, DUMMY)
    rng = np.random.default_rng(0)
    theta0, r0 = rng.normal(size=5), rng.normal(size=5)
    inv_metric = np.full(5, 0.5)
    theta1, r1, _ = _trajectory(fn, theta0, r0, 0.2, inv_metric, 25)[-1]
    theta2, r2, _ = _trajectory(fn, theta1, -r1, 0.2, inv_metric, 25)[-1]
    np.testing.assert_allclose(theta2, theta0, atol=1e-8)
    np.testing.assert_allclose(-r2, r0, atol=1e-8)


def test_small_steps_conserve_energy():
    target = GaussianTarget.ill_conditioned(5, 10.0)
    fn = value_and_grad(target, DUMMY)
    rng = np.random.default_rng(1)
    inv_metric = np.ones(5)
    r0 = rng.normal(size=5)
    path = _trajectory(fn, rng.normal(size=5), r0, 0.05, inv_metric, 200)
    energies = np.array([-L + kinetic_energy(r, inv_metric) for _, r, L in path])
    assert np.max(np.abs(energies - energies[0])) < 0.1


def test_draws_follow_the_target_distribution():
    fit = sample(GaussianTarget(mean=[1.0], sd=[2.0]), DUMMY, SamplerConfig(chains=2, iter=4000, seed=11))
    draws = fit.draws.flat()[:, 0]
    assert draws.size == 4000
    assert stats.kstest(draws, "norm", args=(1.0, 2.0)).statistic < 0.05


@pytest.mark.slow
def test_ill_conditioned_gaussian_is_calibrated():
    target = GaussianTarget.ill_conditioned(10, 100.0)
    fit = sample(target, DUMMY, SamplerConfig(chains=4, iter=4000, seed=5))
    assert fit.draws.draws.shape == (4, 2000, 10)
    assert fit.report.total_divergences == 0
    for i in range(10):
        chains = fit.draws.draws[..., i]
        ess = ess_bulk(chains)
        mcse = chains.std(ddof=1) / np.sqrt(ess)
        assert abs(chains.mean()) < 3 * mcse
        assert split_rhat(chains) < 1.01
        assert ess > 400
        assert stats.kstest(chains.reshape(-1) / target.sd[i], "norm").statistic < 0.05
    var = fit.draws.flat().var(axis=0)
    np.testing.assert_allclose(var / target.sd ** 2, 1.0, atol=0.2)


@pytest.mark.slow
def test_credible_interval_calibration():
    from tests.conftest import simulate_arma
    hits = 0
    for replicate in range(100):
        y = TimeSeries(values=simulate_arma(100, phi=[0.5], seed=1000 + replicate))
        fit = sample(make_sarima((1, 0, 0)), y, SamplerConfig(chains=2, iter=1000, seed=replicate))
        lo, hi = np.quantile(extract(fit, "ar[1]"), [0.05, 0.95])
        hits += lo <= 0.5 <= hi
    assert 80 <= hits <= 98
