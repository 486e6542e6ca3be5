import numpy as np
import pytest
from scipy import special

from models.series import TimeSeries
from models.specs import make_garch, make_sarima
from models.targets import GaussianTarget
from services.autodiff import finite_diff_check, grad_log_posterior, value_and_grad
from tests.conftest import simulate_arma, simulate_garch
from utils import dual
from utils.series_ops import fourier_terms


def test_dual_arithmetic_matches_calculus():
    x = dual.variables([0.7, 1.3])
    a, b = x[0], x[1]
    f = a * b + a / b - dual.exp(a) + b ** 3
    np.testing.assert_allclose(f.tan, [1.3 + 1 / 1.3 - np.exp(0.7), 0.7 - 0.7 / 1.3 ** 2 + 3 * 1.3 ** 2])


def test_dual_unary_functions():
    x = dual.variables([0.4])[0]
    assert dual.tanh(x).tan[0] == pytest.approx(1 - np.tanh(0.4) ** 2)
    assert dual.expit(x).tan[0] == pytest.approx(special.expit(0.4) * (1 - special.expit(0.4)))
    assert dual.softplus(x).tan[0] == pytest.approx(special.expit(0.4))
    assert dual.gammaln(x).tan[0] == pytest.approx(special.digamma(0.4))
    assert dual.log1p(x).tan[0] == pytest.approx(1 / 1.4)


def test_ndarray_defers_to_dual():
    x = dual.variables([2.0])[0]
    out = np.array([1.0, 2.0]) - x
    assert isinstance(out, dual.Dual)
    np.testing.assert_allclose(out.tan[:, 0], [-1.0, -1.0])


def test_recursive_filter_tangents():
    c = dual.variables([0.5])[0]
    x = np.array([1.0, 0.0, 0.0])
    y = dual.recursive_filter(x, [1], [c])
    np.testing.assert_allclose(y.val, [1.0, 0.5, 0.25])
    # d(c^t)/dc = t c^(t-1)
    np.testing.assert_allclose(y.tan[:, 0], [0.0, 1.0, 1.0])


def test_shift_fills_presample_values():
    np.testing.assert_allclose(dual.shift(np.array([1.0, 2.0, 3.0]), 2, fill=9.0), [9.0, 9.0, 1.0])


def test_quadratic_target_gradient_is_exact():
    target = GaussianTarget(mean=[1.0, -2.0], sd=[1.0, 3.0])
    u = np.array([0.5, 0.5])
    result = grad_log_posterior(target, TimeSeries(values=[0.0]), u)
    np.testing.assert_allclose(result.gradient, -(u - target.mean) / target.sd ** 2)
    assert finite_diff_check(target, TimeSeries(values=[0.0]), u) < 1e-6


def test_gradient_matches_finite_differences_for_seasonal_regression():
    n = 72
    y = TimeSeries(values=np.cumsum(simulate_arma(n, phi=[0.3], seed=2)), frequency=12)
    spec = make_sarima((2, 1, 1), (1, 1, 1), 12, fourier_terms(n, 12, 1))
    rng = np.random.default_rng(1)
    errors = [finite_diff_check(spec, y, rng.normal(scale=0.3, size=spec.n_params), h=1e-2, levels=2)
              for _ in range(50)]
    assert max(errors) < 1e-6


def test_gradient_matches_finite_differences_for_student_t_garch():
    y = TimeSeries(values=simulate_garch(80, seed=4))
    spec = make_garch(2, 1, "student_t_unknown_df")
    rng = np.random.default_rng(2)
    errors = [finite_diff_check(spec, y, rng.normal(scale=0.5, size=spec.n_params), h=1e-2, levels=2)
              for _ in range(50)]
    assert max(errors) < 1e-6


def test_extrapolation_removes_truncation_error():
    y = TimeSeries(values=simulate_garch(80, seed=4))
    spec = make_garch(1, 1)
    u = np.array([0.1, -1.0, -1.2, 0.3])
    plain = finite_diff_check(spec, y, u, h=1e-2)
    assert plain > 1e-7
    assert finite_diff_check(spec, y, u, h=1e-2, levels=2) < plain / 100
    with pytest.raises(ValueError):
        finite_diff_check(spec, y, u, levels=-1)


def test_value_and_grad_agrees_with_plain_evaluation():
    y = TimeSeries(values=simulate_arma(50, phi=[0.5], theta=[0.2], seed=6))
    spec = make_sarima((1, 0, 1))
    u = np.array([0.1, -0.2, 0.3, -0.1])
    value, grad = value_and_grad(spec, y)(u)
    assert value == pytest.approx(float(spec.log_posterior(y, u).log_posterior))
    assert grad.shape == (4,)


def test_finite_diff_check_rejects_non_positive_step():
    with pytest.raises(ValueError):
        finite_diff_check(GaussianTarget.standard(1), TimeSeries(values=[0.0]), [0.0], h=0.0)
