import math

import numpy as np
import pytest
from scipy.special import eval_jacobi

from grassharm.jacobi import jacobi_derivative, jacobi_eval, jacobi_taylor_at_one
from grassharm.lattice import ParameterError


def series_jacobi(n, a, b, x):
    """Explicit sum: sum_s C(n+a, n-s) C(n+b, s) ((x-1)/2)^s ((x+1)/2)^(n-s)."""
    def binom(top, k):
        return math.gamma(top + 1) / (math.gamma(k + 1) * math.gamma(top - k + 1))

    return sum(binom(n + a, n - s) * binom(n + b, s) * ((x - 1) / 2) ** s * ((x + 1) / 2) ** (n - s) for s in range(n + 1))


def test_degree_zero_and_one():
    x = np.linspace(-1, 1, 7)
    assert np.all(jacobi_eval(0, 1.5, 2.0, x) == 1)
    np.testing.assert_allclose(jacobi_eval(1, 0, 0, x), x, atol=0)


@pytest.mark.parametrize("n", range(8))
@pytest.mark.parametrize("a,b", [(0, 0), (1, 0), (2, 3), (0.5, -0.5), (3, 1)])
def test_against_series(n, a, b):
    for x in np.linspace(-1, 1, 9):
        assert jacobi_eval(n, a, b, x) == pytest.approx(series_jacobi(n, a, b, x), rel=1e-12, abs=1e-12)


def test_value_at_one():
    assert jacobi_eval(2, 0, 0, 1.0) == pytest.approx(1.0)
    for n in range(12):
        for a in range(4):
            assert jacobi_eval(n, a, 2, 1.0) == pytest.approx(math.comb(n + a, n), rel=1e-13)


def test_against_scipy_high_degree():
    x = np.linspace(-1, 1, 101)
    for n in (50, 150, 300):
        np.testing.assert_allclose(jacobi_eval(n, 1, 3, x), eval_jacobi(n, 1, 3, x), rtol=1e-9, atol=1e-12)


def test_derivative_finite_difference():
    h = 1e-5
    for n in (3, 7):
        for order in (1, 2):
            x = 0.3
            if order == 1:
                fd = (jacobi_eval(n, 1, 2, x + h) - jacobi_eval(n, 1, 2, x - h)) / (2 * h)
            else:
                h2 = 1e-3
                fd = (jacobi_eval(n, 1, 2, x + h2) - 2 * jacobi_eval(n, 1, 2, x) + jacobi_eval(n, 1, 2, x - h2)) / h2**2
            assert jacobi_derivative(n, 1, 2, x, order) == pytest.approx(fd, rel=1e-5)
    assert jacobi_derivative(2, 0, 0, 0.4, 3) == 0


def test_exact_taylor_coefficients_match_float():
    for n in range(8):
        for order in range(4):
            exact = jacobi_taylor_at_one(n, 2, 1, order)
            approx = jacobi_derivative(n, 2, 1, 1.0, order) / math.factorial(order)
            assert float(exact) == pytest.approx(approx, rel=1e-12, abs=1e-12)


def test_rejects_bad_parameters():
    with pytest.raises(ParameterError):
        jacobi_eval(-1, 0, 0, 0.5)
    with pytest.raises(ParameterError):
        jacobi_eval(2, -1, 0, 0.5)
