"""Pure-Python versions of the compiled kernels in ``_core.pyx``.

Both modules expose the same two batched routines and follow the same
arithmetic step by step, so they agree to rounding.  This one is selected
when the extension is not built, or when ``SPACELIKE_BACKEND=python``.
"""
from __future__ import annotations

import math

import numpy as np

EPS = np.finfo(float).eps
QL_MAX_SWEEPS = 60
# deflation floor relative to the matrix norm, used only when the diagonal
# pair around an off-diagonal entry is itself negligible
NORM_FLOOR = 1e-30


def hermitian_eigvals_batch(h: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Eigenvalues of a stack of Hermitian matrices, ascending.

    Householder reduction to a real symmetric tridiagonal matrix followed by
    the implicit-shift QL iteration.

    Args:
        h: complex array of shape ``(B, n, n)``; only the lower triangle is read.

    Returns:
        ``(eigs, failed)`` with ``eigs`` of shape ``(B, n)`` and ``failed``
        an int8 flag per matrix set when QL hit the sweep cap.
    """
    h = np.asarray(h, dtype=np.complex128)
    batch, n = h.shape[0], h.shape[1]
    eigs = np.empty((batch, n))
    failed = np.zeros(batch, dtype=np.int8)
    for b in range(batch):
        a = np.tril(h[b]) + np.tril(h[b], -1).conj().T
        d, e = _tridiagonalize(a)
        ok = _tql(d, e, float(np.max(np.abs(a))) if n else 0.0)
        failed[b] = 0 if ok else 1
        d.sort()
        eigs[b] = d
    return eigs, failed


def _tridiagonalize(a: np.ndarray) -> tuple[list, list]:
    n = a.shape[0]
    for k in range(n - 2):
        x = a[k + 1:, k]
        sigma = float(np.sum(np.abs(x[1:]) ** 2))
        if sigma == 0.0:
            continue
        x0 = x[0]
        norm = math.sqrt(abs(x0) ** 2 + sigma)
        phase = x0 / abs(x0) if x0 != 0 else 1.0
        v = np.zeros(n, dtype=complex)
        v[k + 1] = x0 + phase * norm
        v[k + 2:] = x[1:]
        beta = 2.0 / float(np.sum(np.abs(v) ** 2))
        sl = slice(k, n)
        p = beta * (a[sl, sl] @ v[sl])
        kappa = 0.5 * beta * np.vdot(v[sl], p)
        q = p - kappa * v[sl]
        a[sl, sl] -= np.outer(v[sl], q.conj()) + np.outer(q, v[sl].conj())
    d = [float(a[i, i].real) for i in range(n)]
    e = [abs(a[i + 1, i]) for i in range(n - 1)] + [0.0]
    return d, e


def _tql(d: list, e: list, anorm: float) -> bool:
    """Implicit QL on ``d`` (diagonal) and ``e`` (sub-diagonal); in place."""
    n = len(d)
    floor = NORM_FLOOR * anorm
    for l in range(n):
        sweeps = 0
        while True:
            m = l
            while m < n - 1:
                dd = abs(d[m]) + abs(d[m + 1])
                if abs(e[m]) <= EPS * dd or abs(e[m]) <= floor:
                    break
                m += 1
            if m == l:
                break
            if sweeps == QL_MAX_SWEEPS:
                return False
            sweeps += 1
            g = (d[l + 1] - d[l]) / (2.0 * e[l])
            r = math.hypot(g, 1.0)
            g = d[m] - d[l] + e[l] / (g + math.copysign(r, g))
            s = c = 1.0
            p = 0.0
            i = m - 1
            underflow = False
            while i >= l:
                f = s * e[i]
                b = c * e[i]
                r = math.hypot(f, g)
                e[i + 1] = r
                if r == 0.0:
                    d[i + 1] -= p
                    e[m] = 0.0
                    underflow = True
                    break
                s = f / r
                c = g / r
                g = d[i + 1] - p
                r = (d[i] - g) * s + 2.0 * c * b
                p = s * r
                d[i + 1] = g + p
                g = c * r - b
                i -= 1
            if underflow:
                continue
            d[l] -= p
            e[l] = g
            e[m] = 0.0
    return True


def particle_events(state: np.ndarray, events: np.ndarray, offsets: np.ndarray,
                    n_levels: int, check: bool = True) -> int:
    """Apply clock rings to a batch of interlaced configurations, in place.

    Args:
        state: int64 array ``(R, P)``; column ``m(m-1)/2 + k - 1`` holds ``x_k^m``.
        events: flat int32 array of particle columns, replica ``r`` owning
            ``events[offsets[r]:offsets[r + 1]]`` in firing order.
        offsets: int64 array of length ``R + 1``.
        check: verify interlacing after every event.

    Returns:
        The number of events after which interlacing failed (zero unless
        there is a bug).
    """
    level, index = _particle_tables(n_levels)
    violations = 0
    for r in range(state.shape[0]):
        x = state[r]
        for ev in events[offsets[r]:offsets[r + 1]]:
            m, k = level[ev], index[ev]
            pos = x[ev]
            if k <= m - 1 and pos + 1 == x[ev - m + 1]:       # x_k^{m-1} is blocking
                continue
            x[ev] = pos + 1
            j = ev + m + 1                                  # x_{k+1}^{m+1}
            mm = m + 1
            while mm <= n_levels and x[j] == pos:
                x[j] = pos + 1
                j += mm + 1
                mm += 1
            if check and not _interlaced(x, n_levels):
                violations += 1
    return violations


def _particle_tables(n_levels: int) -> tuple[list, list]:
    level, index = [], []
    for m in range(1, n_levels + 1):
        for k in range(1, m + 1):
            level.append(m)
            index.append(k)
    return level, index


def _interlaced(x, n_levels: int) -> bool:
    for m in range(1, n_levels):
        base, up = m * (m - 1) // 2, m * (m + 1) // 2
        for k in range(m):
            if not x[up + k] < x[base + k] <= x[up + k + 1]:
                return False
    return True
