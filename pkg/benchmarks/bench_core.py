"""Compare the compiled and pure-Python kernels on the two hot loops.

Run from the repository root after building the extension::

    python3 benchmarks/bench_core.py [--repeat 3]

The Python kernels are slow by design, so they run on smaller batches.  The
table reports time per item so the two columns are comparable.
"""
from __future__ import annotations

import argparse
import time

import numpy as np

from spacelike import _fallback
from spacelike._backend import BACKEND
from spacelike._backend import core as _selected
from spacelike.particles import init_packed, particle_count
from spacelike.rmt_sim import RngStream, hermitian_increments

core = _selected if BACKEND == "cython" else None


def _best(fn, repeat):
    best = np.inf
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn()
        best = min(best, time.perf_counter() - t0)
    return best


def bench_eigen(n, batch, repeat):
    gen = RngStream(0).generator()
    h = hermitian_increments(n, np.ones(1), gen, batch=batch)[:, 0]
    small = np.ascontiguousarray(h[: max(1, batch // 100)])
    rows = {"lapack": _best(lambda: np.linalg.eigvalsh(h), repeat) / batch,
            "python": _best(lambda: _fallback.hermitian_eigvals_batch(small), repeat) / len(small)}
    if core is not None:
        rows["cython"] = _best(lambda: core.hermitian_eigvals_batch(h), repeat) / batch
    return rows


def bench_particles(levels, replicas, rings_per_replica, repeat):
    gen = RngStream(1).generator()
    P = particle_count(levels)
    start = init_packed(levels).positions

    def run(module, r):
        state = np.tile(start, (r, 1))
        events = gen.integers(0, P, size=r * rings_per_replica, dtype=np.int32)
        offsets = np.arange(r + 1, dtype=np.int64) * rings_per_replica
        module.particle_events(state, events, offsets, levels, True)

    few = max(1, replicas // 100)
    rows = {"python": _best(lambda: run(_fallback, few), repeat) / (few * rings_per_replica)}
    if core is not None:
        rows["cython"] = _best(lambda: run(core, replicas), repeat) / (replicas * rings_per_replica)
    return rows


def main():
    parser = argparse.ArgumentParser(description=__doc__.split("\n\n")[0])
    parser.add_argument("--repeat", type=int, default=3)
    args = parser.parse_args()
    if core is None:
        print("compiled extension not built; only the Python column is shown")
    print(f"{'case':<34}{'backend':<10}{'per item':>14}")
    for n, batch in ((3, 100_000), (8, 20_000), (32, 1_000)):
        for name, sec in bench_eigen(n, batch, args.repeat).items():
            print(f"{f'eigvals {n}x{n}':<34}{name:<10}{sec * 1e6:>11.3f} us")
    for levels in (3, 6):
        for name, sec in bench_particles(levels, 20_000, 50, args.repeat).items():
            print(f"{f'particle rings, {levels} levels':<34}{name:<10}{sec * 1e9:>11.1f} ns")


if __name__ == "__main__":
    main()
