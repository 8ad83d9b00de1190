import itertools

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from spacelike import eynard as ey
from spacelike.eynard import LevelTimePoint as L, PointConfiguration
from spacelike.kernels import gue_kernel_grid
from spacelike.mc_verify import draw_eynard_spec, random_points


def single_level(w):
    return ey.SpaceLikeWeightSpec(sets=[np.array([1.0, 2.0])], copies=[0], times=[[0.5]],
                                  phi=[np.ones((1, 2))], transitions=[[]], psi=np.array([w]))


def test_single_level_weights_and_m():
    spec = single_level([0.3, 0.9])
    assert ey.weight(spec, PointConfiguration({(1, 0): [1.0]})) == pytest.approx(0.3)
    assert ey.weight(spec, PointConfiguration({(1, 0): [1.0, 2.0]})) == 0.0
    assert ey.weight(spec, PointConfiguration({})) == 0.0
    np.testing.assert_allclose(ey.m_matrix(spec), [[1.2]])
    assert ey.brute_force_correlations(spec, []) == 1.0
    assert ey.brute_force_correlations(spec, [L(1, 0, 2.0)]) == pytest.approx(0.9 / 1.2)
    assert ey.correlation_kernel(spec, L(1, 0, 2.0), L(1, 0, 2.0)) == pytest.approx(0.9 / 1.2)


def test_two_level_weight_is_product_of_determinants():
    rng = np.random.default_rng(11)
    spec = ey.random_spec(rng, 2, (3, 3), (0, 0))
    phi2, phi1, psi = spec.phi[1], spec.phi[0], spec.psi
    for x, y in itertools.combinations(range(3), 2):
        for z in range(3):
            X = PointConfiguration({(2, 0): [float(x), float(y)], (1, 0): [float(z)]})
            link = np.linalg.det([[phi2[z, x], phi2[z, y]], [phi2[-1, x], phi2[-1, y]]])
            top = np.linalg.det([[psi[1, x], psi[0, x]], [psi[1, y], psi[0, y]]])
            assert ey.weight(spec, X) == pytest.approx(link * phi1[0, z] * top, rel=1e-12)


def test_weight_rejects_bad_input():
    spec = single_level([0.3, 0.9])
    with pytest.raises(ValueError):
        ey.weight(spec, PointConfiguration({(2, 0): [1.0]}))
    with pytest.raises(ValueError):
        ey.weight(spec, PointConfiguration({(1, 0): [7.0]}))


def test_spec_validation():
    with pytest.raises(ValueError):
        ey.SpaceLikeWeightSpec([np.array([0.0, 1.0])], [0], [[0.5]], [np.ones((2, 2))], [[]],
                               np.ones((1, 2)))
    with pytest.raises(ValueError):
        ey.SpaceLikeWeightSpec([np.array([0.0, 0.0])], [0], [[0.5]], [np.ones((1, 2))], [[]],
                               np.ones((1, 2)))


@settings(max_examples=15, deadline=None)
@given(st.integers(0, 2 ** 31), st.booleans())
def test_partition_function_is_det_m(seed, complex_weights):
    spec = draw_eynard_spec(np.random.default_rng(seed), upper=False, complex_weights=complex_weights)
    z = ey.partition_function(spec)
    assert abs(z - np.linalg.det(ey.m_matrix(spec))) <= 1e-10 * abs(z)


@settings(max_examples=15, deadline=None)
@given(st.integers(0, 2 ** 31), st.booleans())
def test_kernel_determinants_match_enumeration(seed, complex_weights):
    rng = np.random.default_rng(seed)
    spec = draw_eynard_spec(rng, upper=False, complex_weights=complex_weights)
    data = ey.prepare(spec)
    if data.condition > 1e5:
        return
    for size in (1, 2, 3):
        pts = random_points(rng, spec, size)
        assert abs(ey.determinantal_correlation(spec, pts, data)
                   - ey.brute_force_correlations(spec, pts)) < 1e-9


@settings(max_examples=15, deadline=None)
@given(st.integers(0, 2 ** 31))
def test_determinants_invariant_under_conjugation(seed):
    rng = np.random.default_rng(seed)
    spec = draw_eynard_spec(rng, upper=False)
    pts = random_points(rng, spec, 3)
    k = ey.kernel_matrix(spec, pts)
    f = rng.uniform(0.5, 2.0, size=len(pts)) * np.exp(1j * rng.uniform(0, 6.3, size=len(pts)))
    conj = f[:, None] * k / f[None, :]
    assert abs(np.linalg.det(conj) - np.linalg.det(k)) < 1e-10 * max(1.0, abs(np.linalg.det(k)))


def test_upper_triangular_simplified_kernel():
    rng = np.random.default_rng(5)
    for _ in range(5):
        spec = draw_eynard_spec(rng, upper=True)
        data = ey.prepare(spec)
        assert ey.is_upper_triangular(data.M, rtol=1e-10)
        for a, b in itertools.product(random_points(rng, spec, 3), repeat=2):
            assert ey.correlation_kernel_triangular(spec, a, b, data) == pytest.approx(
                ey.correlation_kernel(spec, a, b, data), abs=1e-10)


def test_simplified_kernel_refuses_general_m():
    rng = np.random.default_rng(1)
    spec = ey.random_spec(rng, 2, (3, 3), (1, 0))
    p = L(1, 0, spec.sets[0][0])
    with pytest.raises(ValueError):
        ey.correlation_kernel_triangular(spec, p, p)


def test_singular_m_is_reported():
    spec = single_level([0.5, -0.5])
    with pytest.raises(ey.IllConditionedError):
        ey.prepare(spec)
    with pytest.raises(ey.PartitionFunctionError):
        ey.brute_force_correlations(spec, [])


def test_enumeration_budget():
    spec = ey.random_spec(np.random.default_rng(0), 3, (4, 4, 4), (1, 1, 1))
    with pytest.raises(ey.EnumerationBudgetError):
        ey.brute_force_correlations(spec, [], budget=100)


def test_repeated_points_rejected():
    spec = single_level([0.3, 0.9])
    with pytest.raises(ValueError):
        ey.determinantal_correlation(spec, [L(1, 0, 1.0), L(1, 0, 1.0)])


@pytest.mark.parametrize("complex_weights", [False, True])
def test_json_round_trip(complex_weights):
    spec = ey.random_spec(np.random.default_rng(2), 2, (3, 4), (1, 1), complex_weights=complex_weights)
    back = ey.SpaceLikeWeightSpec.from_json(spec.to_json())
    np.testing.assert_array_equal(back.psi, spec.psi)
    for a, b in zip(back.phi, spec.phi):
        np.testing.assert_array_equal(a, b)
    assert back.to_json() == spec.to_json()
    with pytest.raises(ValueError):
        ey.SpaceLikeWeightSpec.from_dict({**spec.to_dict(), "format": "other"})


def test_gue_discretization():
    # grid kernel / h approximates the continuum kernel up to the gauge 2^{n1-n2}
    spec = ey.gue_discretized_spec(3, [1.5, 1.0, 1.0], half_width=7.0, spacing=0.1)
    data = ey.prepare(spec)
    assert ey.is_upper_triangular(data.M, rtol=1e-8)
    h = 0.1
    cases = [((2, 1, -0.5), (1, 0, 0.3), 1.5, 1.5), ((1, 0, 0.3), (2, 1, -0.5), 1.5, 1.5),
             ((3, 0, 0.3), (3, 0, 0.3), 1.0, 1.0), ((2, 0, 0.2), (3, 0, -0.4), 1.0, 1.0)]
    for (n1, a1, x1), (n2, a2, x2), t1, t2 in cases:
        got = ey.correlation_kernel(spec, L(n1, a1, x1), L(n2, a2, x2), data) / h
        want = 2.0 ** (n1 - n2) * gue_kernel_grid([x1], n1, t1, [x2], n2, t2)[0, 0]
        assert got == pytest.approx(want, abs=2e-3)
