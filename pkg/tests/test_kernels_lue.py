import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy.integrate import quad

from spacelike.kernels import (LueParams, SpaceTimePoint as P, bessel_transition, kernel_lue,
                               lue_kernel_diag, lue_kernel_grid, phi_lue, phi_spacelike_lue,
                               psi_lue)
from spacelike.specfun import bessel_ie


def test_lue_params():
    with pytest.raises(ValueError):
        LueParams(0)
    with pytest.raises(ValueError):
        LueParams(2).check_level(3)


def test_psi_examples():
    x = np.linspace(0, 4, 9)
    np.testing.assert_allclose(psi_lue(0, 1.5, 0, x), np.exp(-x / 1.5) / 1.5, rtol=1e-13)
    for n in range(4):
        assert quad(lambda y: psi_lue(n, 1.2, 0, y), 0, np.inf)[0] == pytest.approx(1.0, abs=1e-10)
        assert quad(lambda y: psi_lue(n, 1.2, 1, y), 0, np.inf)[0] == pytest.approx(0.0, abs=1e-10)
    with pytest.raises(ValueError):
        psi_lue(0, 1.0, 0, -1.0)


@pytest.mark.parametrize("k", [-3, -1, 0, 1, 3])
@pytest.mark.parametrize("n", [0, 1, 3])
def test_psi_representations_agree(n, k):
    x = np.linspace(0.1, 5, 8)
    closed = psi_lue(n, 1.3, k, x)
    np.testing.assert_allclose(psi_lue(n, 1.3, k, x, method="contour"), closed, atol=1e-10)
    np.testing.assert_allclose(psi_lue(n, 1.3, k, x, method="contour_shifted"), closed, atol=1e-10)
    if k < 0:
        np.testing.assert_allclose(psi_lue(n, 1.3, k, x, method="contour", unit_pole=True),
                                   psi_lue(n, 1.3, k, x, unit_pole=True), atol=1e-10)


def test_phi_examples():
    assert phi_lue(2, 1.4, 0, 0.7) == 1.0
    for n in range(4):
        assert phi_lue(n, 1.0, 1, 0.6) == pytest.approx(n + 1 - 0.6)
    x = np.linspace(0, 3, 5)
    np.testing.assert_allclose(phi_lue(2, 0.8, 3, x, method="contour"), phi_lue(2, 0.8, 3, x),
                               atol=1e-10)


def test_bessel_transition():
    # (x/y)^{n/2} I_n(.) is a probability density in its first argument
    for y in (0.3, 1.0, 2.5):
        assert quad(lambda x: bessel_transition(1, 2.0, 1.0, x, y), 0, np.inf)[0] == pytest.approx(
            1.0, abs=1e-9)
    closed = bessel_transition(1, 2, 1, 1, 1)
    assert bessel_transition(1, 2, 1, 1, 1, method="contour") == pytest.approx(closed, abs=1e-9)
    assert bessel_transition(1, 2, 1, 1, 1, method="shifted") == pytest.approx(closed, abs=1e-9)
    semi = quad(lambda z: bessel_transition(1, 3, 2, 0.8, z) * bessel_transition(1, 2, 1, z, 1.1),
                0, np.inf, epsabs=1e-13)[0]
    assert semi == pytest.approx(bessel_transition(1, 3, 1, 0.8, 1.1), abs=1e-9)
    with pytest.raises(ValueError):
        bessel_transition(1, 1.0, 1.0, 1.0, 1.0)


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 6), st.floats(0.05, 20), st.floats(0.05, 20), st.floats(0.2, 3))
def test_bessel_transition_uses_scaled_bessel_faithfully(n, x, y, d):
    arg = 2 * math.sqrt(x * y) / d
    ref = (x / y) ** (n / 2) * bessel_ie(n, arg) * math.exp(-(math.sqrt(x) - math.sqrt(y)) ** 2 / d) / d
    assert bessel_transition(n, d + 1.0, 1.0, x, y) == pytest.approx(ref, rel=1e-11, abs=1e-300)


def test_phi_spacelike_reductions():
    p = LueParams(3)
    assert phi_spacelike_lue(P(0.5, 2, 1.0), P(0.5, 1, 1.0), p) == 0.0
    for x1, x2 in [(0.7, 0.5), (0.2, 1.3)]:
        assert phi_spacelike_lue(P(x1, 1, 2.0), P(x2, 1, 1.0), p) == pytest.approx(
            bessel_transition(2, 2.0, 1.0, x1, x2), abs=1e-10)
        step = 1.0 if x1 >= x2 else 0.0
        assert phi_spacelike_lue(P(x1, 1, 1.0), P(x2, 2, 1.0), p) == pytest.approx(step, abs=1e-10)


def test_single_eigenvalue_is_exponential():
    for x in (0.1, 0.5, 2.0):
        assert kernel_lue(P(x, 1, 1.0), P(x, 1, 1.0), LueParams(1)).value == pytest.approx(
            math.exp(-x), abs=1e-10)


@pytest.mark.parametrize("p", [3, 4])
@pytest.mark.parametrize("n", [1, 2, 3])
def test_trace_identity(n, p):
    total = quad(lambda x: lue_kernel_diag(x, n, 1.0, p)[0], 0, np.inf, epsabs=1e-12, limit=200)[0]
    assert total == pytest.approx(n, abs=1e-8)


def test_sum_and_contour_routes_agree():
    x1 = np.array([0.2, 0.9, 2.0])
    x2 = np.array([0.4, 1.5])
    for n1, t1, n2, t2 in [(1, 1.0, 1, 1.0), (1, 1.5, 2, 1.0), (2, 1.0, 1, 1.3), (2, 2.0, 3, 1.0)]:
        a = lue_kernel_grid(x1, n1, t1, x2, n2, t2, 3)
        b = lue_kernel_grid(x1, n1, t1, x2, n2, t2, 3, method="sum")
        np.testing.assert_allclose(a, b, atol=1e-8)


def test_x2_numerator_changes_the_kernel():
    a = lue_kernel_grid([0.3], 1, 1.5, [1.2], 2, 1.0, 3)
    b = lue_kernel_grid([0.3], 1, 1.5, [1.2], 2, 1.0, 3, numerator="x2")
    assert abs(a - b).max() > 1e-3
    with pytest.raises(ValueError):
        lue_kernel_grid([0.3], 1, 1.0, [1.2], 1, 1.0, 3, method="sum", numerator="x2")


def test_level_beyond_p_rejected():
    with pytest.raises(ValueError):
        lue_kernel_grid([0.3], 3, 1.0, [0.3], 3, 1.0, 2)


@settings(max_examples=20, deadline=None)
@given(st.floats(0.05, 3), st.floats(0.05, 3), st.integers(1, 3), st.integers(0, 2),
       st.floats(0.4, 2.0), st.floats(0.0, 1.0))
def test_two_point_determinant_nonnegative(x1, x2, n1, dn, t2, dt):
    n2 = min(n1 + dn, 3)
    ta = t2 + dt
    if (n1, ta) == (n2, t2) or (dt == 0 and abs(x1 - x2) < 0.01):
        return
    k = lue_kernel_grid([x1], n1, ta, [x2], n2, t2, 3, method="sum")[0, 0]
    kr = lue_kernel_grid([x2], n2, t2, [x1], n1, ta, 3, method="sum")[0, 0]
    kaa = lue_kernel_diag(x1, n1, ta, 3)[0]
    kbb = lue_kernel_diag(x2, n2, t2, 3)[0]
    assert kaa * kbb - k * kr >= -1e-8


@pytest.mark.parametrize("x1,x2,dn,gap", [(1.0, 1.0, 1, 6e-8), (0.5, 2.0, 1, 1e-2), (0.5, 2.0, 2, 1e-4),
                                          (2.0, 1.0, 2, 2 ** -7), (0.3, 2.9, 2, 2e-2)])
def test_short_time_gap_routes_agree(x1, x2, dn, gap):
    s = lue_kernel_grid([x1], 1, 1.0 + gap, [x2], 1 + dn, 1.0, 3, method="sum")[0, 0]
    c = lue_kernel_grid([x1], 1, 1.0 + gap, [x2], 1 + dn, 1.0, 3)[0, 0]
    assert np.isfinite(s) and c == pytest.approx(s, abs=1e-10)


@pytest.mark.parametrize("x,y,n1,n2,gap", [(1, 0.5, 1, 2, 0.5), (2, 1, 1, 3, 0.3), (0.5, 1.5, 1, 4, 1.0),
                                           (0.2, 2.5, 1, 4, 0.6)])
def test_unit_residue_splits_the_two_flavours(x, y, n1, n2, gap):
    from spacelike.kernels.lue import (_phi_spacelike_lue, _phi_spacelike_lue_origin,
                                       _phi_unit_residue)
    p = 4
    true = _phi_spacelike_lue(np.array(x), n1, 1 + gap, np.array(y), n2, 1.0, p)
    origin = _phi_spacelike_lue_origin(np.array(x), n1, 1 + gap, np.array(y), n2, 1.0, p)
    assert true - origin == pytest.approx(_phi_unit_residue(x, y, n2 - n1, gap, p + 1 - n2), abs=1e-12)
