import math

import numpy as np
import pytest

from spacelike import particles as pt
from oracles import interlaced as oracle_interlaced, jump, poisson_pmf


def test_init_packed():
    assert pt.init_packed(1).x(1, 1) == -1
    cfg = pt.init_packed(2)
    assert (cfg.x(2, 1), cfg.x(1, 1), cfg.x(2, 2)) == (-2, -1, -1)
    assert cfg.is_interlaced()
    np.testing.assert_array_equal(pt.tasep_projection(pt.init_packed(4)), [-1, -2, -3, -4])
    with pytest.raises(ValueError):
        pt.init_packed(0)


def test_blocking_rule():
    cfg = pt.init_packed(2)
    # x_1^2 = -2 = x_1^1 - 1: its ring is suppressed
    after = pt.apply_rings(cfg, [pt.flat_index(2, 1)])
    np.testing.assert_array_equal(after.positions, cfg.positions)


def test_pushing_rule():
    cfg = pt.init_packed(2)
    # x_1^1 = -1 = x_2^2: both move
    after = pt.apply_rings(cfg, [pt.flat_index(1, 1)])
    assert (after.x(1, 1), after.x(2, 2), after.x(2, 1)) == (0, 0, -2)


def test_replay_matches_oracle():
    gen = np.random.default_rng(3)
    n = 4
    cfg = pt.init_packed(n)
    state = tuple(cfg.positions.tolist())
    for _ in range(300):
        m = int(gen.integers(1, n + 1))
        k = int(gen.integers(1, m + 1))
        cfg = pt.apply_rings(cfg, [pt.flat_index(m, k)])
        new = jump(state, m, k, n)
        state = state if new is None else new
        assert tuple(cfg.positions.tolist()) == state
        assert oracle_interlaced(state, n)


def test_apply_rings_validation():
    with pytest.raises(ValueError):
        pt.apply_rings(pt.init_packed(2), [3])
    bad = pt.InterlacedConfig(2, [0, 1, 3])
    assert not bad.is_interlaced()
    with pytest.raises(pt.InterlacingError):
        pt.apply_rings(bad, [0])


def test_evolve_clock():
    clock = pt.SimClock()
    cfg = pt.evolve(pt.init_packed(3), 2.0, clock)
    assert clock.time == 2.0 and cfg.is_interlaced()
    with pytest.raises(ValueError):
        pt.evolve(cfg, 1.0, clock)


def test_single_replica_evolve_level_one_law():
    hits = 0
    runs = 20_000
    gen = np.random.default_rng(5)
    for _ in range(runs):
        clock = pt.SimClock(rng=gen)
        hits += pt.evolve(pt.init_packed(1), 1.0, clock).x(1, 1) == -1
    p = math.exp(-1)
    assert abs(hits / runs - p) < 3 * math.sqrt(p * (1 - p) / runs)


def test_level_one_is_poisson():
    samples = pt.simulate(1, [1.0], 100_000, seed=7)
    jumps = samples[:, 0, 0] + 1
    for k in range(5):
        p = poisson_pmf(k, 1.0)
        assert abs(np.mean(jumps == k) - p) < 3 * math.sqrt(p * (1 - p) / jumps.size)


def test_projection_is_exclusion_process():
    samples = pt.simulate(4, [0.5, 1.0, 3.0], 5_000, seed=8)
    proj = pt.tasep_projection(samples)
    assert np.all(np.diff(proj, axis=-1) < 0)
    assert np.all(pt.interlaced(samples.reshape(-1, samples.shape[-1]), 4))


def test_lower_levels_are_autonomous():
    tall = pt.simulate(3, [1.5], 60_000, seed=9)[:, 0, :3]
    short = pt.simulate(2, [1.5], 60_000, seed=10)[:, 0, :3]
    for stat in (lambda s: s[:, 0], lambda s: s[:, 1], lambda s: s[:, 2], lambda s: s[:, 0] * s[:, 2]):
        a, b = stat(tall).astype(float), stat(short).astype(float)
        se = math.sqrt(a.var() / a.size + b.var() / b.size)
        assert abs(a.mean() - b.mean()) < 3 * se


def test_simulation_is_deterministic_across_workers():
    a = pt.simulate(3, [0.5, 1.0], 9_000, seed=11, workers=1, chunk_size=2048)
    b = pt.simulate(3, [0.5, 1.0], 9_000, seed=11, workers=2, chunk_size=2048)
    np.testing.assert_array_equal(a, b)
    c = pt.simulate(3, [0.5, 1.0], 9_000, seed=12, chunk_size=2048)
    assert not np.array_equal(a, c)


def test_simulate_validation():
    with pytest.raises(ValueError):
        pt.simulate(2, [1.0, 0.5], 10, seed=0)
    with pytest.raises(ValueError):
        pt.simulate(2, [1.0], 0, seed=0)


def test_occupation_and_rescale():
    samples = pt.simulate(2, [0.0], 3, seed=0)
    np.testing.assert_array_equal(pt.occupation(samples[:, 0], 2, 2, -1), [True] * 3)
    np.testing.assert_array_equal(pt.occupation(samples[:, 0], 2, 2, 0), [False] * 3)
    assert pt.diffusion_rescale(200.0, 400.0, 1.0) == 0.0
    with pytest.raises(ValueError):
        pt.diffusion_rescale(1.0, 0.0, 1.0)


def test_rescaled_level_one_centres():
    t = 400.0
    samples = pt.simulate(1, [t / 2], 20_000, seed=13)
    xi = pt.diffusion_rescale(samples[:, 0, 0] + 1, t, 1.0)
    assert abs(xi.mean()) < 3 * xi.std() / math.sqrt(xi.size)


def test_trajectory_csv():
    samples = pt.simulate(2, [0.5], 2, seed=0)
    lines = pt.trajectory_csv(samples, [0.5], 2).splitlines()
    assert lines[0] == "run_id,obs_time,level,k,position"
    assert len(lines) == 1 + 2 * 3
