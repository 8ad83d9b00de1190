"""Exact samplers for Hermitian Brownian motion, the Wishart process and Haar unitaries.

Variance conventions follow the matrix densities.  For Hermitian Brownian
motion ``H(t)`` has density proportional to ``exp(-Tr H^2 / t)``.  Its
diagonal entries then have variance ``t/2``.  The real and imaginary parts
of each off-diagonal entry have variance ``t/4`` each.

For the Wishart process ``A(t)`` is a ``p x n`` matrix with entries
``(b + i b') / sqrt(2)`` built from standard Brownian motions.  So each real
part has variance ``t/2``, and ``E|A_ij|^2 = t``.

Paths are sampled from independent Gaussian increments between the
requested times, so there is no discretization error.

Randomness comes from :class:`RngStream`.  It is a Philox counter-based
generator keyed by ``SeedSequence([seed, stream])``.  Distinct stream
indices give independent streams.  A fixed ``(seed, stream)`` pair
reproduces its draws bit for bit on any machine and any worker layout.
"""
from __future__ import annotations

import csv
import io
import json
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from ._backend import hermitian_eigvals_batch


class EigenvalueConvergenceError(ArithmeticError):
    """The QL iteration hit its sweep cap."""


@dataclass(frozen=True)
class RngStream:
    """Seedable stream ``(seed, stream)`` of a Philox generator."""

    seed: int
    stream: int = 0

    def generator(self) -> np.random.Generator:
        ss = np.random.SeedSequence([int(self.seed), int(self.stream)])
        return np.random.Generator(np.random.Philox(ss))


def _as_generator(rng) -> np.random.Generator:
    if isinstance(rng, RngStream):
        return rng.generator()
    if isinstance(rng, np.random.Generator):
        return rng
    raise TypeError("rng must be an RngStream or a numpy Generator")


def _check_times(times: Sequence[float]) -> np.ndarray:
    times = np.asarray(times, dtype=float)
    if times.ndim != 1 or times.size == 0:
        raise ValueError("times must be a non-empty 1-D sequence")
    if times[0] <= 0 or np.any(np.diff(times) <= 0):
        raise ValueError("times must be positive and strictly increasing")
    return times


# ---------------------------------------------------------------------------
# Hermitian Brownian motion
# ---------------------------------------------------------------------------

def hermitian_increments(N: int, dt: np.ndarray, gen: np.random.Generator,
                         batch: int | None = None) -> np.ndarray:
    """Independent Hermitian Gaussian increments with ``E[H_ii^2] = dt / 2``.

    Returns shape ``(len(dt), N, N)``, or ``(batch, len(dt), N, N)`` when
    ``batch`` is given.
    """
    lead = (len(dt),) if batch is None else (batch, len(dt))
    scale = np.sqrt(np.asarray(dt, dtype=float))[:, None, None]
    g = gen.standard_normal(lead + (N, N, 2))
    off = (g[..., 0] + 1j * g[..., 1]) * (0.5 * scale)       # var t/4 per part
    diag = np.sqrt(0.5) * scale[..., 0] * g[..., 0].diagonal(axis1=-2, axis2=-1)
    lower = np.tril(off, -1)
    h = lower + np.conj(np.swapaxes(lower, -1, -2))
    idx = np.arange(N)
    h[..., idx, idx] = diag
    return h


def sample_hermitian_path(N: int, times: Sequence[float], rng) -> np.ndarray:
    """``H(t)`` at each time, shape ``(len(times), N, N)``."""
    times = _check_times(times)
    gen = _as_generator(rng)
    dt = np.diff(np.concatenate([[0.0], times]))
    return np.cumsum(hermitian_increments(N, dt, gen), axis=0)


def sample_hermitian_paths(N: int, times: Sequence[float], n_paths: int, rng) -> np.ndarray:
    """Batch of paths, shape ``(n_paths, len(times), N, N)``."""
    times = _check_times(times)
    gen = _as_generator(rng)
    dt = np.diff(np.concatenate([[0.0], times]))
    return np.cumsum(hermitian_increments(N, dt, gen, batch=n_paths), axis=1)


# ---------------------------------------------------------------------------
# eigenvalues
# ---------------------------------------------------------------------------

def hermitian_eigenvalues(h: np.ndarray) -> np.ndarray:
    """Eigenvalues, ascending, by Householder tridiagonalization and implicit QL.

    Accepts one matrix ``(N, N)`` or a stack ``(..., N, N)``.

    Raises:
        EigenvalueConvergenceError: a matrix needed more than 60 QL sweeps
            for some eigenvalue.
    """
    h = np.asarray(h)
    if h.ndim < 2 or h.shape[-1] != h.shape[-2]:
        raise ValueError("expected square matrices")
    flat = h.reshape((-1,) + h.shape[-2:]).astype(np.complex128, copy=False)
    eigs, failed = hermitian_eigvals_batch(np.ascontiguousarray(flat))
    if np.any(failed):
        raise EigenvalueConvergenceError(f"QL did not converge for {int(failed.sum())} matrices")
    return eigs.reshape(h.shape[:-1])


def minor_eigenvalues(h: np.ndarray, levels: Iterable[int]) -> dict:
    """Eigenvalues of the leading ``n x n`` principal submatrices.

    Returns a dict ``{n: array (..., n)}`` for each requested level.
    """
    h = np.asarray(h)
    N = h.shape[-1]
    out = {}
    for n in sorted(set(int(n) for n in levels)):
        if not 1 <= n <= N:
            raise ValueError(f"level {n} outside 1..{N}")
        out[n] = hermitian_eigenvalues(h[..., :n, :n])
    return out


def interlacing_violations(minors: dict, slack: float = 1e-12) -> int:
    """Count samples breaking ``lam^{n+1}_k <= lam^n_k <= lam^{n+1}_{k+1}``."""
    bad = 0
    levels = sorted(minors)
    for n, m in zip(levels, levels[1:]):
        if m != n + 1:
            continue
        lo, mid = minors[m], minors[n]
        scale = slack * np.maximum(1.0, np.max(np.abs(lo), axis=-1, keepdims=True))
        ok = (lo[..., :-1] <= mid + scale) & (mid <= lo[..., 1:] + scale)
        bad += int(np.sum(~np.all(ok, axis=-1)))
    return bad


# ---------------------------------------------------------------------------
# Wishart / Laguerre process
# ---------------------------------------------------------------------------

def complex_increments(p: int, n: int, dt: np.ndarray, gen: np.random.Generator,
                       batch: int | None = None) -> np.ndarray:
    """Complex Gaussian ``p x n`` increments with ``E|A_ij|^2 = dt``."""
    lead = (len(dt),) if batch is None else (batch, len(dt))
    scale = np.sqrt(0.5 * np.asarray(dt, dtype=float))[:, None, None]
    g = gen.standard_normal(lead + (p, n, 2))
    return (g[..., 0] + 1j * g[..., 1]) * scale


def sample_wishart_matrices(p: int, n: int, times: Sequence[float], rng,
                            n_paths: int | None = None) -> np.ndarray:
    """``A(t)`` at each time: ``(len(times), p, n)`` or ``(n_paths, len(times), p, n)``."""
    if p < n or n < 1:
        raise ValueError("need p >= n >= 1")
    times = _check_times(times)
    gen = _as_generator(rng)
    dt = np.diff(np.concatenate([[0.0], times]))
    axis = 0 if n_paths is None else 1
    return np.cumsum(complex_increments(p, n, dt, gen, batch=n_paths), axis=axis)


def gram(a: np.ndarray) -> np.ndarray:
    """``A* A`` for a stack of rectangular matrices."""
    return np.conj(np.swapaxes(a, -1, -2)) @ a


def sample_wishart_path(p: int, n: int, times: Sequence[float], rng) -> np.ndarray:
    """Eigenvalues of ``A(n, t)* A(n, t)`` at each time, shape ``(len(times), n)``."""
    a = sample_wishart_matrices(p, n, times, rng)
    eigs = hermitian_eigenvalues(gram(a))
    # A*A is positive semidefinite; rounding can leave -1e-17
    return np.maximum(eigs, 0.0)


# ---------------------------------------------------------------------------
# Haar unitaries
# ---------------------------------------------------------------------------

def haar_unitary(N: int, rng, size: int | None = None) -> np.ndarray:
    """Haar-distributed ``N x N`` unitary (or a stack of ``size`` of them).

    QR of a complex Ginibre matrix, with each column of ``Q`` multiplied by
    the phase of the matching diagonal entry of ``R``.  This makes the
    factorization unique and the law exactly Haar.
    """
    if N < 1:
        raise ValueError("N must be >= 1")
    gen = _as_generator(rng)
    lead = () if size is None else (size,)
    g = gen.standard_normal(lead + (N, N, 2))
    z = (g[..., 0] + 1j * g[..., 1]) / np.sqrt(2.0)
    q, r = np.linalg.qr(z)
    d = np.diagonal(r, axis1=-2, axis2=-1)
    phase = d / np.abs(d)
    return q * phase[..., None, :]


# ---------------------------------------------------------------------------
# dumps
# ---------------------------------------------------------------------------

def eigenvalue_rows(times: Sequence[float], minors_per_time: Sequence[dict],
                    sample_id: int = 0) -> list:
    """Rows ``(sample, time, level, k, lambda)`` with ``k`` counted from 1."""
    rows = []
    for t, minors in zip(times, minors_per_time):
        for n in sorted(minors):
            for k, lam in enumerate(np.asarray(minors[n]).ravel(), start=1):
                rows.append((sample_id, float(t), int(n), k, float(lam)))
    return rows


def write_eigenvalue_csv(rows: Iterable[tuple], stream: io.TextIOBase | None = None) -> str:
    """CSV with header ``sample,time,level,k,lambda``; floats at 17 significant digits."""
    buf = stream if stream is not None else io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["sample", "time", "level", "k", "lambda"])
    for s, t, n, k, lam in rows:
        writer.writerow([s, f"{t:.17g}", n, k, f"{lam:.17g}"])
    return buf.getvalue() if stream is None else ""


def run_manifest(seed: int, **params) -> str:
    return json.dumps({"seed": int(seed), **params}, sort_keys=True, indent=2)
