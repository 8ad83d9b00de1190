import os
import subprocess
import sys

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from spacelike import _fallback
from spacelike.particles import init_packed, particle_count

core = pytest.importorskip("spacelike._core")


@settings(max_examples=60, deadline=None)
@given(st.integers(1, 12), st.integers(1, 6), st.integers(0, 2 ** 32 - 1))
def test_eigensolvers_agree(n, batch, seed):
    gen = np.random.default_rng(seed)
    a = gen.standard_normal((batch, n, n)) + 1j * gen.standard_normal((batch, n, n))
    h = np.ascontiguousarray(a + np.conj(np.swapaxes(a, -1, -2)))
    e1, f1 = core.hermitian_eigvals_batch(h)
    e2, f2 = _fallback.hermitian_eigvals_batch(h)
    np.testing.assert_array_equal(f1, f2)
    np.testing.assert_allclose(e1, e2, atol=1e-12 * max(1.0, np.abs(e2).max()))
    np.testing.assert_allclose(e2, np.linalg.eigvalsh(h), atol=1e-10 * max(1.0, np.abs(e2).max()))


@settings(max_examples=60, deadline=None)
@given(st.integers(1, 5), st.integers(1, 5), st.integers(0, 60), st.integers(0, 2 ** 32 - 1))
def test_particle_kernels_agree(n_levels, replicas, n_events, seed):
    gen = np.random.default_rng(seed)
    P = particle_count(n_levels)
    state = np.tile(init_packed(n_levels).positions, (replicas, 1))
    counts = gen.integers(0, n_events + 1, size=replicas)
    offsets = np.concatenate([[0], np.cumsum(counts)]).astype(np.int64)
    events = gen.integers(0, P, size=int(offsets[-1]), dtype=np.int32)
    s1, s2 = state.copy(), state.copy()
    assert core.particle_events(s1, events, offsets, n_levels, True) == 0
    assert _fallback.particle_events(s2, events, offsets, n_levels, True) == 0
    np.testing.assert_array_equal(s1, s2)


def test_environment_forces_fallback():
    code = "import spacelike; print(spacelike.BACKEND)"
    env = dict(os.environ, SPACELIKE_BACKEND="python")
    out = subprocess.run([sys.executable, "-c", code], env=env, capture_output=True, text=True,
                         check=True)
    assert out.stdout.strip() == "python"


def test_simulation_identical_under_both_backends():
    code = ("import hashlib, spacelike.particles as p;"
            "print(hashlib.sha256(p.simulate(3, [0.5, 1.0], 3000, seed=4).tobytes()).hexdigest())")
    digests = set()
    for backend in ("python", "cython"):
        env = dict(os.environ, SPACELIKE_BACKEND=backend)
        out = subprocess.run([sys.executable, "-c", code], env=env, capture_output=True, text=True,
                             check=True)
        digests.add(out.stdout.strip())
    assert len(digests) == 1
