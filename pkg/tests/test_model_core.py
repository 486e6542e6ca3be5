import numpy as np
import pytest
from scipy import stats

from models.likelihood import expand_lag_polynomial, garch_pointwise, garch_variance, n_effective
from models.series import RegressorMatrix, TimeSeries
from models.specs import describe_model, make_garch, make_sarima
from models.transforms import ParamVector, constrain, constrain_value, unconstrain
from utils.exceptions import ModelSpecError, SeriesDimensionError
from utils.series_ops import fourier_terms


def _u(spec, **theta):
    """Punto no restringido a partir de valores restringidos (el resto a 0)"""
    values = {entry.name: 0.0 for entry in spec.layout}
    base, _ = constrain(spec, np.zeros(spec.n_params))
    values.update({k: float(v) for k, v in base.items()})
    values.update(theta)
    return unconstrain(spec, values).unconstrained


def test_labels():
    assert make_sarima((1, 1, 1), (1, 1, 1), 12).label() == "Sarima(1,1,1)(1,1,1)[12]"
    x = fourier_terms(50, 12, 2)
    assert make_sarima((1, 1, 1), s=12, xreg=x).label() == "Sarima(1,1,1).reg[4]"
    assert make_sarima((1, 0, 0), (1, 0, 0), 12, x).label() == "Sarima(1,0,0)(1,0,0)[12].reg[4]"
    assert make_garch(1, 1, "student_t_unknown_df").label() == "Garch(1,1).t"


def test_layout_order_and_count():
    spec = make_sarima((2, 0, 1), (1, 0, 1), 4, RegressorMatrix(values=np.ones((30, 2))))
    assert spec.names == ["mu0", "sigma0", "ar[1]", "ar[2]", "ma[1]", "sar[1]", "sma[1]", "breg[1]", "breg[2]"]
    assert make_garch(2, 1, "student_t_unknown_df").n_params == 6


def test_invalid_orders_raise_model_spec_error():
    with pytest.raises(ModelSpecError):
        make_sarima((-1, 0, 0))
    with pytest.raises(ModelSpecError):
        make_garch(0, 1)


def test_effective_observations():
    y = TimeSeries(values=np.zeros(373), frequency=12)
    assert n_effective(make_sarima((0, 1, 0), (0, 1, 0), 12), y) == 360
    assert n_effective(make_sarima((0, 1, 0), s=12), y) == 372
    assert n_effective(make_garch(1, 1), TimeSeries(values=np.zeros(100))) == 100
    with pytest.raises(SeriesDimensionError):
        n_effective(make_sarima((0, 1, 0), (0, 1, 0), 12), TimeSeries(values=np.zeros(10)))


def test_check_series_rejects_mismatched_regressors():
    spec = make_sarima((1, 0, 0), xreg=RegressorMatrix(values=np.ones((5, 1))))
    with pytest.raises(ModelSpecError):
        spec.check_series(TimeSeries(values=np.zeros(20)))


def test_transform_reference_points():
    value, logjac = constrain_value("pm1", 0.0)
    assert value == 0.0
    assert logjac == pytest.approx(0.0, abs=1e-15)
    value, logjac = constrain_value("positive", 0.0)
    assert (value, logjac) == (1.0, 0.0)
    value, _ = constrain_value("df", 0.0)
    assert value == 3.0


def test_transform_round_trip():
    spec = make_garch(2, 1, "student_t_unknown_df")
    rng = np.random.default_rng(0)
    for _ in range(100):
        u = rng.normal(scale=2.0, size=spec.n_params)
        theta, _ = constrain(spec, u)
        np.testing.assert_allclose(unconstrain(spec, theta).unconstrained, u, atol=1e-10)


def test_param_vector_checks_length():
    spec = make_sarima((1, 0, 0))
    with pytest.raises(ValueError):
        ParamVector(unconstrained=[0.0], layout=spec.layout)


def test_seasonal_polynomial_expansion():
    poly = expand_lag_polynomial([0.5], [0.3], 4)
    assert poly[1] == 0.5
    assert poly[4] == 0.3
    assert poly[5] == pytest.approx(-0.15)


def test_iid_model_is_normal_loglik():
    y = TimeSeries(values=[0.3, -1.2, 0.8, 2.0])
    spec = make_sarima((0, 0, 0))
    result = spec.log_posterior(y, _u(spec, mu0=0.5, sigma0=1.5))
    np.testing.assert_allclose(result.pointwise_loglik, stats.norm.logpdf(y.values, 0.5, 1.5))


def test_ar1_matches_hand_recursion():
    y = np.array([0.1, -0.2, 0.3, 0.0, 0.1])
    spec = make_sarima((1, 0, 0))
    result = spec.log_posterior(TimeSeries(values=y), _u(spec, mu0=0.0, sigma0=1.0, **{"ar[1]": 0.5}))
    mean = np.r_[0.0, 0.5 * y[:-1]]
    np.testing.assert_allclose(result.pointwise_loglik, stats.norm.logpdf(y, mean, 1.0))
    np.testing.assert_allclose(result.fitted, mean)


def test_arma11_matches_hand_recursion():
    y = np.array([0.4, -0.1, 0.7, 0.2, -0.5, 0.3])
    phi, theta, mu = 0.4, -0.3, 0.1
    spec = make_sarima((1, 0, 1))
    result = spec.log_posterior(TimeSeries(values=y),
                                _u(spec, mu0=mu, sigma0=0.8, **{"ar[1]": phi, "ma[1]": theta}))
    eps = np.zeros(y.size)
    for t in range(y.size):
        mean = mu + (phi * y[t - 1] - theta * eps[t - 1] if t > 0 else 0.0)
        eps[t] = y[t] - mean
    np.testing.assert_allclose(result.pointwise_loglik, stats.norm.logpdf(eps, 0.0, 0.8))


def test_seasonal_ar_equals_expanded_recursion():
    rng = np.random.default_rng(4)
    y = rng.normal(size=40)
    spec = make_sarima((1, 0, 0), (1, 0, 0), 4)
    phi, sphi = 0.5, 0.3
    result = spec.log_posterior(TimeSeries(values=y, frequency=4),
                                _u(spec, mu0=0.0, sigma0=1.0, **{"ar[1]": phi, "sar[1]": sphi}))
    mean = np.zeros(y.size)
    for t in range(y.size):
        for lag, coef in ((1, phi), (4, sphi), (5, -phi * sphi)):
            if t - lag >= 0:
                mean[t] += coef * y[t - lag]
    np.testing.assert_allclose(result.fitted, mean, atol=1e-12)


def test_deterministic_series_has_zero_residuals():
    z = np.zeros(30)
    z[0] = 0.2
    for t in range(1, z.size):
        z[t] = 0.2 + 0.5 * z[t - 1]
    spec = make_sarima((1, 0, 0))
    result = spec.log_posterior(TimeSeries(values=z), _u(spec, mu0=0.2, sigma0=1.0, **{"ar[1]": 0.5}))
    np.testing.assert_allclose(result.fitted, z, atol=1e-12)


def test_log_posterior_decomposes():
    rng = np.random.default_rng(8)
    spec = make_sarima((1, 1, 1), (1, 0, 0), 4, fourier_terms(60, 4, 1))
    y = TimeSeries(values=np.cumsum(rng.normal(size=60)), frequency=4)
    result = spec.log_posterior(y, rng.normal(size=spec.n_params))
    total = result.pointwise_loglik.sum() + result.log_prior + result.log_jacobian
    assert float(result.log_posterior) == pytest.approx(total, abs=1e-10)
    assert result.pointwise_loglik.size == 59


def test_garch_without_dynamics_is_iid_normal():
    y = TimeSeries(values=[0.3, -0.4, 1.1, 0.2, -0.9])
    spec = make_garch(1, 1)
    u = _u(spec, mu0=0.1, sigma0=0.5, **{"arch[1]": 1e-12, "garch[1]": 1e-12})
    result = spec.log_posterior(y, u)
    np.testing.assert_allclose(result.pointwise_loglik, stats.norm.logpdf(y.values, 0.1, np.sqrt(0.5)), atol=1e-9)


def test_garch11_matches_hand_recursion():
    y = np.array([0.3, -0.4, 1.1, 0.2, -0.9])
    spec = make_garch(1, 1)
    theta = {"mu0": 0.05, "sigma0": 0.2, "arch[1]": 0.3, "garch[1]": 0.5}
    eps, sigma2 = garch_variance(spec, TimeSeries(values=y), theta)
    v0 = np.var(y)
    e_prev, s_prev = v0, v0
    expected = []
    for t in range(y.size):
        s = 0.2 + 0.3 * e_prev + 0.5 * s_prev
        expected.append(s)
        e_prev, s_prev = (y[t] - 0.05) ** 2, s
    np.testing.assert_allclose(sigma2, expected)
    assert np.all(sigma2 >= 0.2)


def test_student_t_approaches_normal_for_large_df():
    y = TimeSeries(values=[0.3, -0.4, 1.1, 0.2, -0.9])
    normal = make_garch(1, 1)
    student = make_garch(1, 1, "student_t_unknown_df")
    theta = {"mu0": 0.0, "sigma0": 0.3, "arch[1]": 0.2, "garch[1]": 0.4}
    ll_normal = normal.log_posterior(y, _u(normal, **theta)).pointwise_loglik
    ll_student = student.log_posterior(y, _u(student, dfv=1e6, **theta)).pointwise_loglik
    np.testing.assert_allclose(ll_student, ll_normal, atol=1e-4)


@pytest.mark.parametrize("v", [2.5, 5.0, 30.0])
def test_student_t_is_a_normal_scale_mixture(v):
    # x | λ ~ N(0, s²λ) con λ ~ IG(v/2, v/2) y s = σ·√((v-2)/v)
    spec = make_garch(1, 1, "student_t_unknown_df")
    eps = np.array([0.0, 0.4, -1.3, 3.0])
    sigma2 = np.array([0.5, 1.0, 2.0, 0.8])
    density = np.exp(garch_pointwise(spec, eps, sigma2, {"dfv": v}))
    lam = stats.invgamma.rvs(v / 2, scale=v / 2, size=100_000, random_state=np.random.default_rng(9))
    scale2 = sigma2 * (v - 2) / v
    mixture = stats.norm.pdf(eps[:, None], 0.0, np.sqrt(scale2[:, None] * lam[None, :]))
    mc_mean = mixture.mean(axis=1)
    mc_se = mixture.std(axis=1, ddof=1) / np.sqrt(lam.size)
    assert np.all(np.abs(density - mc_mean) < 3 * mc_se)


def test_garch_variance_never_drops_below_the_constant():
    rng = np.random.default_rng(10)
    spec = make_garch(2, 2)
    for _ in range(20):
        y = TimeSeries(values=rng.standard_t(4, size=60))
        theta = {"mu0": rng.normal(), "sigma0": rng.gamma(1.0), "arch[1]": rng.uniform(), "arch[2]": rng.uniform(),
                 "garch[1]": rng.uniform(), "garch[2]": rng.uniform()}
        _, sigma2 = garch_variance(spec, y, theta)
        assert np.all(sigma2 >= theta["sigma0"])


def test_describe_model_block():
    y = TimeSeries(values=np.zeros(373), frequency=12)
    text = describe_model(make_sarima((1, 1, 1), (1, 1, 1), 12), y)
    lines = text.splitlines()
    assert lines[0] == "y ~ Sarima(1,1,1)(1,1,1)[12]"
    assert "Current observations: 360" in lines
    assert "mu0 ~ t (loc = 0 ,scl = 2.5 ,df = 6 )" in lines
    assert "ar[ 1 ] ~ normal (mu = 0 , sd = 0.5 )" in lines
    assert "Seasonal Parameters:" in lines
