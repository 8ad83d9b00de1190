import math
import warnings

import numpy as np
import pytest
from hypothesis import given, strategies as st

from spacelike import contour as ct


def test_circle_residues():
    unit = ct.CircleContour(0.0, 1.0)
    assert ct.integrate_circle(lambda z: 1 / z, unit) == pytest.approx(1.0, abs=1e-14)
    assert abs(ct.integrate_circle(lambda z: z, ct.CircleContour(0.3 + 0.2j, 2.0))) < 1e-14
    small = ct.CircleContour(0.0, 0.5)
    assert ct.integrate_circle(lambda z: np.exp(z) / z ** 2, small) == pytest.approx(1.0, abs=1e-13)


@given(st.integers(-127, 127), st.complex_numbers(max_magnitude=2), st.floats(0.2, 3))
def test_circle_exact_on_laurent_monomials(k, center, radius):
    c = ct.CircleContour(center, radius, 256)
    val = ct.integrate_circle(lambda z: (z - center) ** k, c)
    expected = 1.0 if k == -1 else 0.0
    assert abs(val - expected) < 1e-12 * max(1.0, radius ** (k + 1))


def test_circle_contour_validation():
    with pytest.raises(ValueError):
        ct.CircleContour(0.0, -1.0)
    with pytest.raises(ValueError):
        ct.CircleContour(0.0, 1.0, 4)


@pytest.mark.parametrize("a, expected", [(0.0, 0.2820948), (1.0, 0.1037769)])
def test_vline_gaussian(a, expected):
    line = ct.VerticalLineContour(1.0, ct.vline_half_length(1.0, 1.0))
    val = ct.integrate_vline(lambda w: np.exp(w * w - 2 * a * w), line)
    assert val.real == pytest.approx(expected, abs=1e-7)
    assert val.real == pytest.approx(math.exp(-a * a) / (2 * math.sqrt(math.pi)), abs=1e-13)
    assert abs(val.imag) < 1e-12


def test_vline_gaussian_matches_psi_at_origin():
    line = ct.VerticalLineContour(0.25, ct.vline_half_length(1.0, 0.25))
    val = ct.integrate_vline(lambda w: np.exp(w * w), line)
    assert 2 * val.real == pytest.approx(1 / math.sqrt(math.pi), abs=1e-13)


def test_vline_tail_warning():
    line = ct.VerticalLineContour(0.5, 1.0)
    with pytest.warns(ct.QuadratureTailWarning):
        ct.integrate_vline(lambda w: np.exp(0.1 * w * w), line)


def test_vline_validation():
    with pytest.raises(ValueError):
        ct.VerticalLineContour(0.0, 3.0)
    with pytest.raises(ValueError):
        ct.VerticalLineContour(1.0, 0.5)


def test_non_finite_node_reported():
    c = ct.CircleContour(0.0, 1.0, 8)
    with pytest.raises(ct.QuadratureError) as info:
        ct.integrate_circle(lambda z: 1 / (z - 1.0), c)
    assert info.value.node == pytest.approx(1.0)


def test_adaptive_self_convergence():
    c = ct.CircleContour(0.0, 0.5, 8)
    val, err = ct.integrate_circle(lambda z: np.exp(3 * z) / z ** 6, c, adaptive=True,
                                   return_error=True)
    assert val == pytest.approx(3 ** 5 / math.factorial(5), rel=1e-12)
    assert err < 1e-9


def test_half_length_bounds_tail():
    for t in (0.1, 1.0, 5.0):
        L = ct.vline_half_length(t, 0.25, degree=4)
        y = L - 0.25
        assert math.exp(t * (0.25 ** 2 - y * y)) * math.hypot(0.25, y) ** 4 <= 1.01e-14


def test_nested_and_separated_checks():
    ct.check_separated(ct.CircleContour(0.0, 0.1), 0.25)
    with pytest.raises(ct.ContourSeparationError):
        ct.check_separated(ct.CircleContour(0.0, 0.3), 0.25)
    ct.check_nested(ct.CircleContour(0.0, 0.5), ct.CircleContour(0.5, 2.0))
    with pytest.raises(ct.ContourSeparationError):
        ct.check_nested(ct.CircleContour(0.0, 0.5), ct.CircleContour(3.0, 1.0))


def test_conjugate_symmetric_integrand_is_real():
    line = ct.VerticalLineContour(0.3, ct.vline_half_length(2.0, 0.3))
    val = ct.integrate_vline(lambda w: np.exp(2 * w * w - 1.1 * w) * w ** 3, line)
    assert abs(val.imag) < 1e-12


def test_node_tables_are_read_only():
    z, _ = ct.CircleContour(0.0, 1.0, 16).nodes()
    table = ct._roots_of_unity(16)
    with pytest.raises(ValueError):
        table[0] = 0
    assert z is not table
