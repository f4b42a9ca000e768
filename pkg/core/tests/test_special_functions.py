import math

import mpmath
import pytest

from core.exceptions import NonConvergence
from core.services.special_functions import log_q_function, q_function, upper_incomplete_gamma

mpmath.mp.dps = 50


def reference_q(x):
    return mpmath.erfc(mpmath.mpf(x) / mpmath.sqrt(2)) / 2


@pytest.mark.parametrize('x', [-5.0, -1.0, 0.0, 0.5, 3.0, 8.0, 20.0])
def test_q_function_matches_erfc_reference(x):
    assert q_function(x) == pytest.approx(float(reference_q(x)), rel=1e-13)


def test_q_function_limits_and_arrays():
    assert q_function(0.0) == 0.5
    assert q_function(-math.inf) == 1.0
    assert q_function(math.inf) == 0.0
    values = q_function([0.0, 1.0, 2.0])
    assert values.shape == (3,)
    assert values[0] > values[1] > values[2]


@pytest.mark.parametrize('x', [1.0, 10.0, 40.0, 100.0])
def test_log_q_function_deep_tail(x):
    assert log_q_function(x) == pytest.approx(float(mpmath.log(reference_q(x))), rel=1e-12)


@pytest.mark.parametrize('a', [-0.5, -10.5, -100.5, -1000.5])
@pytest.mark.parametrize('x', [0.1, 1.0, 10.0, 100.0])
def test_upper_incomplete_gamma_negative_parameter(a, x):
    log_value, sign = upper_incomplete_gamma(a, x)
    reference = mpmath.log(mpmath.gammainc(a, x, mpmath.inf))
    assert sign == 1
    # a log difference of 1e-8 is a relative error of 1e-8 on Γ(a, x)
    assert abs(log_value - float(reference)) <= 1e-8


@pytest.mark.parametrize('a, x', [(0.5, 0.2), (2.5, 1.0), (7.0, 3.0), (3.0, 12.0)])
def test_upper_incomplete_gamma_positive_parameter(a, x):
    log_value, _ = upper_incomplete_gamma(a, x)
    reference = mpmath.log(mpmath.gammainc(a, x, mpmath.inf))
    assert log_value == pytest.approx(float(reference), rel=1e-10, abs=1e-10)


def test_upper_incomplete_gamma_rejects_bad_arguments():
    with pytest.raises(ValueError):
        upper_incomplete_gamma(-0.5, 0.0)
    with pytest.raises(ValueError):
        upper_incomplete_gamma(math.nan, 1.0)


def test_upper_incomplete_gamma_reports_exhausted_budget():
    with pytest.raises(NonConvergence) as excinfo:
        upper_incomplete_gamma(-0.5, 2.0, max_iter=2)
    assert excinfo.value.budget == 2


@pytest.mark.parametrize('a', [-0.5, -0.9])
@pytest.mark.parametrize('x', [1e-4, 1e-6])
def test_upper_incomplete_gamma_small_argument(a, x):
    log_value, sign = upper_incomplete_gamma(a, x)
    reference = mpmath.log(mpmath.gammainc(a, x, mpmath.inf))
    assert sign == 1
    assert abs(log_value - float(reference)) <= 1e-10 * max(1.0, abs(float(reference)))


@pytest.mark.parametrize('a, x', [(0.0, 0.5), (-3.0, 0.2), (-250.5, 0.01), (-1000.5, 0.3)])
def test_upper_incomplete_gamma_downward_recurrence(a, x):
    log_value, _ = upper_incomplete_gamma(a, x)
    reference = mpmath.log(mpmath.gammainc(a, x, mpmath.inf))
    assert log_value == pytest.approx(float(reference), rel=1e-10)


def test_upper_incomplete_gamma_closed_forms():
    assert upper_incomplete_gamma(1.0, 0.7)[0] == pytest.approx(-0.7, rel=1e-13)
    assert math.exp(upper_incomplete_gamma(0.0, 1.0)[0]) == pytest.approx(0.21938393439552, rel=1e-10)
