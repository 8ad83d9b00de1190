"""Independent reference implementations used only by the tests.

Nothing here imports the code it checks.  The particle oracle solves the
master equation of the interlaced dynamics on a truncated state space; the
eigenvalue oracle counts eigenvalues below a shift by Sturm sequences.
"""
from __future__ import annotations

import itertools
import math

import numpy as np
import scipy.sparse as sp
from scipy.sparse.linalg import expm_multiply


# ---------------------------------------------------------------------------
# interlaced particle dynamics
# ---------------------------------------------------------------------------

def packed_state(n_levels: int) -> tuple:
    """Initial configuration as a dict-like tuple keyed by ``(m, k)`` order."""
    return tuple(k - m - 1 for m in range(1, n_levels + 1) for k in range(1, m + 1))


def _index(m: int, k: int) -> int:
    return m * (m - 1) // 2 + k - 1


def jump(state: tuple, m: int, k: int, n_levels: int) -> tuple | None:
    """Apply one ring of the clock of ``x_k^m``; ``None`` if it is blocked."""
    x = list(state)
    pos = x[_index(m, k)]
    if k <= m - 1 and pos + 1 == x[_index(m - 1, k)]:
        return None
    x[_index(m, k)] += 1
    mm, kk = m + 1, k + 1
    while mm <= n_levels and x[_index(mm, kk)] == pos:
        x[_index(mm, kk)] += 1
        mm, kk = mm + 1, kk + 1
    return tuple(x)


def interlaced(state: tuple, n_levels: int) -> bool:
    for m in range(1, n_levels):
        for k in range(1, m + 1):
            if not state[_index(m + 1, k)] < state[_index(m, k)] <= state[_index(m + 1, k + 1)]:
                return False
    return True


class MasterEquation:
    """Generator of the interlaced dynamics with all positions kept ``<= cap``.

    Jumps that would carry a particle past ``cap`` are suppressed, so the
    truncated chain keeps its total mass; with ``cap`` large compared to the
    time horizon the error is below the Poisson tail at ``cap``.
    """

    def __init__(self, n_levels: int, cap: int):
        self.n = n_levels
        start = packed_state(n_levels)
        index = {start: 0}
        states = [start]
        rows, cols = [], []
        head = 0
        while head < len(states):
            s = states[head]
            for m in range(1, n_levels + 1):
                for k in range(1, m + 1):
                    new = jump(s, m, k, n_levels)
                    if new is None or max(new) > cap:
                        continue
                    if new not in index:
                        index[new] = len(states)
                        states.append(new)
                    rows.append(index[new])
                    cols.append(head)
            head += 1
        size = len(states)
        gain = sp.csr_matrix((np.ones(len(rows)), (rows, cols)), shape=(size, size))
        loss = np.asarray(gain.sum(axis=0)).ravel()
        self.q = (gain - sp.diags(loss)).tocsr()
        self.states = np.array(states)
        self.p0 = np.zeros(size)
        self.p0[0] = 1.0

    def evolve(self, p: np.ndarray, t: float) -> np.ndarray:
        if t == 0:
            return p.copy()
        return expm_multiply(self.q * t, p)

    def level_mask(self, level: int, x: int) -> np.ndarray:
        lo = _index(level, 1)
        return np.any(self.states[:, lo:lo + level] == x, axis=1)

    def occupation(self, level: int, x: int, t: float) -> float:
        return float(self.evolve(self.p0, t)[self.level_mask(level, x)].sum())

    def two_point(self, x1: int, n1: int, t1: float, x2: int, n2: int, t2: float) -> float:
        """``P(x1 occupied at (n1, t1) and x2 at (n2, t2))`` with ``t1 >= t2``."""
        p = self.evolve(self.p0, t2)
        p = np.where(self.level_mask(n2, x2), p, 0.0)
        p = self.evolve(p, t1 - t2)
        return float(p[self.level_mask(n1, x1)].sum())


def poisson_pmf(k: int, lam: float) -> float:
    return math.exp(-lam) * lam ** k / math.factorial(k) if k >= 0 else 0.0


# ---------------------------------------------------------------------------
# Hermitian eigenvalues
# ---------------------------------------------------------------------------

def count_below(h: np.ndarray, shift: float) -> int:
    """Number of eigenvalues of Hermitian ``h`` below ``shift`` (LDL* inertia)."""
    a = np.array(h, dtype=complex) - shift * np.eye(h.shape[0])
    n = a.shape[0]
    negatives = 0
    for j in range(n):
        d = a[j, j].real
        if d == 0.0:
            d = 1e-300
        if d < 0:
            negatives += 1
        col = a[j + 1:, j] / d
        a[j + 1:, j + 1:] -= np.outer(col, a[j, j + 1:])
    return negatives


def eigenvalues_by_bisection(h: np.ndarray, tol: float = 1e-12) -> np.ndarray:
    """All eigenvalues of a Hermitian matrix, by bisection on the inertia count."""
    n = h.shape[0]
    bound = float(np.max(np.sum(np.abs(h), axis=1))) + 1.0
    out = np.empty(n)
    for i in range(n):
        lo, hi = -bound, bound
        while hi - lo > tol * max(1.0, abs(lo) + abs(hi)):
            mid = 0.5 * (lo + hi)
            if count_below(h, mid) > i:
                hi = mid
            else:
                lo = mid
        out[i] = 0.5 * (lo + hi)
    return out


# ---------------------------------------------------------------------------
# brute-force determinantal sums
# ---------------------------------------------------------------------------

def permanent_free_det(m: np.ndarray) -> float:
    """Leibniz-formula determinant (used to cross-check ``numpy.linalg.det``)."""
    n = m.shape[0]
    total = 0.0
    for perm in itertools.permutations(range(n)):
        inv = sum(1 for i in range(n) for j in range(i + 1, n) if perm[i] > perm[j])
        total += (-1) ** inv * math.prod(m[i, perm[i]] for i in range(n))
    return total
