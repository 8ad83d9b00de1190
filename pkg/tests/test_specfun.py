import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy.integrate import quad

from spacelike.specfun import (bessel_i, bessel_ie, hermite, hermite_all, laguerre, log_bessel_i,
                               log_factorial)


def test_hermite_small_degrees():
    assert hermite(0, 3.7) == 1.0
    assert hermite(3, 0.5) == pytest.approx(-5.0, abs=1e-14)
    x = np.linspace(-2, 2, 9)
    np.testing.assert_allclose(hermite(1, x), 2 * x)


@given(st.integers(1, 30), st.floats(-5, 5))
def test_hermite_recurrence_and_parity(n, x):
    lhs = hermite(n + 1, x)
    rhs = 2 * x * hermite(n, x) - 2 * n * hermite(n - 1, x)
    assert lhs == pytest.approx(rhs, rel=1e-12, abs=1e-12 * max(1.0, abs(hermite(n + 1, x))))
    assert hermite(n, -x) == pytest.approx((-1) ** n * hermite(n, x), rel=1e-13, abs=1e-300)


def test_hermite_all_matches_single():
    x = np.linspace(-3, 3, 7)
    table = hermite_all(6, x)
    for n in range(7):
        np.testing.assert_allclose(table[n], hermite(n, x), rtol=1e-14)


def test_hermite_orthogonality_by_quad():
    for n in range(11):
        for m in range(n, 11):
            val = quad(lambda x: np.exp(-x * x) * hermite(n, x) * hermite(m, x), -np.inf, np.inf,
                       epsabs=0, epsrel=1e-12, limit=200)[0]
            norm = math.sqrt(math.pi) * 2.0 ** n * math.factorial(n)
            expected = norm if n == m else 0.0
            assert abs(val - expected) <= 1e-8 * math.sqrt(norm * math.sqrt(math.pi) * 2.0 ** m * math.factorial(m))


@pytest.mark.parametrize("q", [0.3, 0.6])
def test_mehler_identity(q):
    rng = np.random.default_rng(0)
    for x, y in rng.uniform(-2, 2, size=(5, 2)):
        series = sum(np.exp(-x * x) * hermite(k, x) * hermite(k, y) * q ** k
                     / (math.sqrt(math.pi) * 2.0 ** k * math.factorial(k)) for k in range(61))
        closed = np.exp(-(x - q * y) ** 2 / (1 - q * q)) / math.sqrt(math.pi * (1 - q * q))
        assert series == pytest.approx(closed, abs=1e-8)


@pytest.mark.parametrize("n", range(1, 9))
def test_hermite_antiderivative(n):
    for x in (-1.3, 0.0, 0.7, 2.1):
        val = quad(lambda y: np.exp(-y * y) * hermite(n, y), x, np.inf, epsabs=1e-13)[0]
        assert val == pytest.approx(np.exp(-x * x) * hermite(n - 1, x), abs=1e-8)


def test_laguerre_examples():
    assert laguerre(0, 4, 1.3) == 1.0
    assert laguerre(1, 2, 0.5) == pytest.approx(2.5)
    assert laguerre(2, 0, 2.0) == pytest.approx(-1.0)


@pytest.mark.parametrize("p", range(6))
def test_laguerre_orthogonality(p):
    for k in range(11):
        for l in range(k, 11):
            val = quad(lambda x: x ** p * np.exp(-x) * laguerre(k, p, x) * laguerre(l, p, x),
                       0, np.inf, epsabs=0, epsrel=1e-12, limit=200)[0]
            nk = math.exp(log_factorial(k + p) - log_factorial(k))
            nl = math.exp(log_factorial(l + p) - log_factorial(l))
            expected = nk if k == l else 0.0
            assert abs(val - expected) <= 1e-8 * math.sqrt(nk * nl)


def test_bessel_examples():
    assert bessel_i(0, 0.0) == 1.0
    assert bessel_i(1, 0.0) == 0.0
    assert bessel_i(1, 1.0) == pytest.approx(0.5651591039924851, rel=1e-12)


@given(st.integers(-20, 20), st.floats(0, 50))
def test_bessel_symmetric_in_order(n, x):
    assert bessel_i(n, x) == bessel_i(-n, x)


@settings(max_examples=50)
@given(st.integers(0, 15), st.floats(1e-3, 600))
def test_bessel_scaled_against_scipy(n, x):
    from scipy.special import ive
    assert bessel_ie(n, x) == pytest.approx(ive(n, x), rel=1e-12, abs=1e-300)
    if x < 500:
        assert log_bessel_i(n, x) == pytest.approx(math.log(bessel_i(n, x)), rel=1e-12)


def test_bessel_overflow_is_signalled():
    with pytest.raises(OverflowError):
        bessel_i(0, 1000.0)


def test_bessel_rejects_negative_argument():
    with pytest.raises(ValueError):
        bessel_i(0, -1.0)


def test_log_factorial():
    assert log_factorial(0) == 0.0
    assert log_factorial(1) == 0.0
    assert log_factorial(10) == pytest.approx(sum(math.log(k) for k in range(1, 11)), rel=1e-12)
    assert log_factorial(500) == pytest.approx(math.lgamma(501), rel=1e-12)
