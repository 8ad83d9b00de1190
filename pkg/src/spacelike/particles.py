"""Continuous-time interlaced particle dynamics with blocking and pushing.

Level ``m`` carries particles ``x_1^m < ... < x_m^m`` on the integers.  They
satisfy the interlacing ``x_k^{m+1} < x_k^m <= x_{k+1}^{m+1}``.  Every
particle has an independent rate-one exponential clock.  When the clock of
``x_k^m`` rings, one of three things happens:

* It does not move if ``x_k^m + 1 = x_k^{m-1}``.  In that case it is blocked
  by the level below it.
* Otherwise it moves one step right.
* When it moves it pushes the maximal string ``x_{k+1}^{m+1}, x_{k+2}^{m+2},
  ...`` that sat at its old position.  Each particle in that string also
  moves one step right.

The leftmost particles ``x_1^m`` follow TASEP with step initial data.

Simulation uses the superposition of the clocks.  Over an interval of
length ``dt`` the number of rings is Poisson with mean ``P dt``, where ``P``
is the number of particles.  Each ring picks a particle uniformly at random.
Positions are recorded only at the requested observation times, so the
exact ring times are never needed.

Positions are stored flat: column ``m(m-1)/2 + k - 1`` holds ``x_k^m``.
"""
from __future__ import annotations

import csv
import io
import json
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from ._backend import BACKEND, particle_events
from .rmt_sim import RngStream

CHUNK_REPLICAS = 4096


class InterlacingError(AssertionError):
    """A configuration broke the interlacing constraints (a bug trap)."""


def particle_count(n_levels: int) -> int:
    return n_levels * (n_levels + 1) // 2


def flat_index(m: int, k: int) -> int:
    return m * (m - 1) // 2 + k - 1


@dataclass
class InterlacedConfig:
    """Integer positions ``x_k^m`` for ``1 <= k <= m <= n_levels``."""

    n_levels: int
    positions: np.ndarray

    def __post_init__(self):
        self.positions = np.asarray(self.positions, dtype=np.int64)
        if self.positions.shape != (particle_count(self.n_levels),):
            raise ValueError("positions must hold n_levels (n_levels + 1) / 2 entries")

    def x(self, m: int, k: int) -> int:
        return int(self.positions[flat_index(m, k)])

    def level(self, m: int) -> np.ndarray:
        start = flat_index(m, 1)
        return self.positions[start:start + m]

    def is_interlaced(self) -> bool:
        return bool(interlaced(self.positions[None, :], self.n_levels)[0])


@dataclass
class SimClock:
    """Current time of a single replica and its random stream."""

    time: float = 0.0
    rng: np.random.Generator = field(default_factory=lambda: RngStream(0).generator())


def init_packed(n_levels: int) -> InterlacedConfig:
    """Packed start ``x_k^m = k - m - 1``."""
    if n_levels < 1:
        raise ValueError("n_levels must be >= 1")
    pos = [k - m - 1 for m in range(1, n_levels + 1) for k in range(1, m + 1)]
    return InterlacedConfig(n_levels, np.array(pos, dtype=np.int64))


def interlaced(states: np.ndarray, n_levels: int) -> np.ndarray:
    """Per-row interlacing check for an ``(R, P)`` array of flat configurations."""
    states = np.atleast_2d(states)
    ok = np.ones(states.shape[0], dtype=bool)
    for m in range(1, n_levels):
        for k in range(1, m + 1):
            here = states[:, flat_index(m, k)]
            ok &= states[:, flat_index(m + 1, k)] < here
            ok &= here <= states[:, flat_index(m + 1, k + 1)]
    return ok


def apply_rings(cfg: InterlacedConfig, particles: Sequence[int], check: bool = True) -> InterlacedConfig:
    """Ring the clocks of the given flat particle indices in order (deterministic replay)."""
    state = cfg.positions.copy()[None, :]
    events = np.ascontiguousarray(particles, dtype=np.int32)
    if events.size and (events.min() < 0 or events.max() >= state.shape[1]):
        raise ValueError("particle index out of range")
    offsets = np.array([0, events.size], dtype=np.int64)
    if particle_events(state, events, offsets, cfg.n_levels, check):
        raise InterlacingError("interlacing broken during replay")
    return InterlacedConfig(cfg.n_levels, state[0])


def evolve(cfg: InterlacedConfig, until: float, clock: SimClock, check: bool = True) -> InterlacedConfig:
    """Run one replica from ``clock.time`` to ``until``; the clock is advanced.

    Waiting times are exponential with rate equal to the particle count and
    each ring picks a particle uniformly.
    """
    if until < clock.time:
        raise ValueError("cannot evolve backwards in time")
    n_particles = cfg.positions.size
    rings = []
    t = clock.time
    while True:
        t += clock.rng.exponential(1.0 / n_particles)
        if t > until:
            break
        rings.append(int(clock.rng.integers(n_particles)))
    clock.time = float(until)
    return apply_rings(cfg, rings, check)


def _simulate_chunk(args) -> np.ndarray:
    n_levels, obs_times, n_replicas, seed, chunk, check = args
    gen = RngStream(seed, chunk).generator()
    n_particles = particle_count(n_levels)
    state = np.tile(init_packed(n_levels).positions, (n_replicas, 1))
    out = np.empty((n_replicas, len(obs_times), n_particles), dtype=np.int64)
    prev = 0.0
    for j, t in enumerate(obs_times):
        counts = gen.poisson(n_particles * (t - prev), size=n_replicas)
        offsets = np.zeros(n_replicas + 1, dtype=np.int64)
        np.cumsum(counts, out=offsets[1:])
        events = gen.integers(0, n_particles, size=int(offsets[-1]), dtype=np.int32)
        if particle_events(state, events, offsets, n_levels, check):
            raise InterlacingError("interlacing broken during simulation")
        out[:, j] = state
        prev = t
    return out


def simulate(n_levels: int, obs_times: Sequence[float], n_replicas: int, seed: int,
             workers: int = 1, check: bool = True, chunk_size: int = CHUNK_REPLICAS) -> np.ndarray:
    """Independent replicas from the packed start, observed at ``obs_times``.

    Replicas are processed in chunks of ``chunk_size``.  Chunk ``i`` draws
    from ``RngStream(seed, i)``, so the output depends only on ``seed`` and
    ``chunk_size``.  The worker count does not change it.

    Returns:
        int64 array ``(n_replicas, len(obs_times), P)`` of flat configurations.
    """
    obs = [float(t) for t in obs_times]
    if not obs or obs[0] < 0 or any(b < a for a, b in zip(obs, obs[1:])):
        raise ValueError("obs_times must be non-empty, >= 0 and non-decreasing")
    if n_replicas < 1:
        raise ValueError("n_replicas must be >= 1")
    sizes = [min(chunk_size, n_replicas - s) for s in range(0, n_replicas, chunk_size)]
    jobs = [(n_levels, obs, size, int(seed), i, check) for i, size in enumerate(sizes)]
    if workers > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            parts = list(pool.map(_simulate_chunk, jobs))
    else:
        parts = [_simulate_chunk(job) for job in jobs]
    return np.concatenate(parts, axis=0)


def occupation(samples: np.ndarray, n_levels: int, level: int, x: int) -> np.ndarray:
    """Indicator that some particle of ``level`` sits at ``x``, per sample row."""
    start = flat_index(level, 1)
    return np.any(samples[..., start:start + level] == x, axis=-1)


def tasep_projection(cfg) -> np.ndarray:
    """Leftmost particles ``x_1^m``, ``m = 1..n``; accepts a config or flat array(s)."""
    if isinstance(cfg, InterlacedConfig):
        arr, n = cfg.positions, cfg.n_levels
    else:
        arr = np.asarray(cfg)
        n = int(round((np.sqrt(8 * arr.shape[-1] + 1) - 1) / 2))
    cols = [flat_index(m, 1) for m in range(1, n + 1)]
    return arr[..., cols]


def diffusion_rescale(x, t: float, tau: float) -> np.ndarray:
    """``(x - tau t / 2) / sqrt(t)`` for positions observed at time ``tau t / 2``."""
    if t <= 0:
        raise ValueError("t must be positive")
    return (np.asarray(x, dtype=float) - 0.5 * tau * t) / np.sqrt(t)


def trajectory_csv(samples: np.ndarray, obs_times: Sequence[float], n_levels: int) -> str:
    """CSV ``run_id,obs_time,level,k,position`` with a header row."""
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["run_id", "obs_time", "level", "k", "position"])
    labels = [(m, k) for m in range(1, n_levels + 1) for k in range(1, m + 1)]
    for r in range(samples.shape[0]):
        for j, t in enumerate(obs_times):
            for c, (m, k) in enumerate(labels):
                writer.writerow([r, f"{float(t):.17g}", m, k, int(samples[r, j, c])])
    return buf.getvalue()


def manifest(seed: int, n_levels: int, obs_times: Sequence[float], n_replicas: int,
             chunk_size: int = CHUNK_REPLICAS) -> str:
    return json.dumps({
        "model": "interlaced-particles",
        "seed": int(seed),
        "n_levels": int(n_levels),
        "obs_times": [float(t) for t in obs_times],
        "n_replicas": int(n_replicas),
        "chunk_size": int(chunk_size),
        "backend": BACKEND,
    }, sort_keys=True, indent=2)
