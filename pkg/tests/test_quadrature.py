import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.integrate import quad

from fockdyn.quadrature import QuadratureError, adaptive_gauss


@pytest.mark.parametrize(
    "func,a,b",
    [
        (np.exp, 0.0, 1.0),
        (lambda x: np.sqrt(x), 0.0, 4.0),
        (lambda x: x**40 * np.exp(-(x**2)), 0.0, 15.0),
        (lambda x: np.cos(30 * x) ** 2, -1.0, 2.0),
    ],
)
def test_against_scipy(func, a, b):
    value, err, panels = adaptive_gauss(func, a, b, rel_tol=1e-12)
    ref = quad(func, a, b, epsabs=0, epsrel=1e-13, limit=500)[0]
    assert value == pytest.approx(ref, rel=1e-11)
    assert err <= 1e-12 * abs(value) and panels >= 16


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 30), st.floats(0.2, 3.0))
def test_polynomial_weight_moments(k, c):
    # int_0^inf x^k e^{-c x} dx = k! / c^{k+1}; the tail past 200 / c is negligible
    value, _, _ = adaptive_gauss(lambda x: x**k * np.exp(-c * x), 0.0, 200.0 / c, rel_tol=1e-12)
    assert value == pytest.approx(math.factorial(k) / c ** (k + 1), rel=1e-10)


def test_budget_exhaustion():
    with pytest.raises(QuadratureError):
        adaptive_gauss(lambda x: np.abs(x - 1 / 3) ** -0.5, 0.0, 1.0, rel_tol=1e-14, max_subdivisions=1)
    with pytest.raises(QuadratureError):
        adaptive_gauss(lambda x: np.sin(200 * x) + 2, 0.0, 10.0, rel_tol=1e-13, max_subdivisions=0)


def test_zero_integrand():
    value, err, _ = adaptive_gauss(np.zeros_like, 0.0, 1.0)
    assert value == 0.0 and err == 0.0
