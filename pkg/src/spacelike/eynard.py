"""Determinantal weights on finite ground sets along a space-like chain.

Level ``n`` owns a finite ordered ground set ``X_n`` and ``c(n) + 1`` copies
of it, observed at times ``t^n_0 <= ... <= t^n_{c(n)}``.  All copies form a
single chain, ordered from the earliest to the latest time::

    (N, 0), ..., (N, c(N)), (N-1, 0), ..., (N-1, c(N-1)), ..., (1, c(1))

Consecutive copies are linked by a transition table.  Inside a level the
link ``(n, a-1) -> (n, a)`` is ``T^n_a(x(t_a), x(t_{a-1}))``; between levels
the link ``(n, c(n)) -> (n-1, 0)`` is ``phi_n(x^{n-1}, x^n)``.  Each
``phi_n`` also has a virtual row ``phi_n(virt, .)``, which fills the missing
``n``-th row of the ``n x n`` determinant, since level ``n - 1`` has one
particle fewer.

A configuration ``X`` puts exactly ``n`` points into every copy of ``X_n``
and has weight

    W(X) = prod_n det[phi_n] * prod_{n, a} det[T^n_a] * det[Psi^N_{N-l}(x^N_k)],

the last determinant living on the earliest copy ``(N, 0)``.  The
normalized weights form a (possibly complex) determinantal point process.
Its kernel is

    K(p1, x1; p2, x2) = -phi^{(p1, p2)}(x1, x2)
        + sum_{k <= N} sum_{l <= n2} Psi^{p1}_k(x1) [M^{-1}]_{k, l} B^{p2}_l(x2).

Here ``phi^{(p1, p2)}`` is the product of the links from ``p2`` up to
``p1``, and ``Psi^{p}`` is that product applied to ``Psi^N``.
``B^{p2}_l`` is the virtual row of level ``l`` carried down to ``p2``.
``M_{k, l}`` is the virtual row of level ``k`` contracted with
``Psi^{(k, c(k))}``.

Everything here is a finite matrix product.  :func:`brute_force_correlations`
enumerates every configuration, so it serves as the oracle for the kernel.

Example:
    >>> rng = np.random.default_rng(3)
    >>> spec = random_spec(rng, levels=2, sizes=(3, 3), copies=(1, 0))
    >>> pts = [LevelTimePoint(1, 1, spec.sets[0][0]), LevelTimePoint(2, 0, spec.sets[1][2])]
    >>> bool(np.isclose(determinantal_correlation(spec, pts), brute_force_correlations(spec, pts)))
    True
"""
from __future__ import annotations

import itertools
import json
import math
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np
import scipy.linalg

from .kernels.gue import heat_kernel, psi_gue

FORMAT_TAG = "spacelike-weight-spec/1"
MAX_CONFIGURATIONS = 10_000_000
MAX_CONDITION = 1e12


class IllConditionedError(ArithmeticError):
    """The M matrix is singular or its condition number exceeds ``MAX_CONDITION``."""


class PartitionFunctionError(ZeroDivisionError):
    """The total weight of all configurations vanishes."""


class EnumerationBudgetError(RuntimeError):
    """The configuration space is too large to enumerate."""


@dataclass(frozen=True)
class LevelTimePoint:
    """Location ``x`` (a label of ``X_n``) in copy ``a`` of level ``n``."""

    n: int
    a: int
    x: float


@dataclass
class PointConfiguration:
    """Point sets keyed by ``(n, a)``, each a collection of labels of ``X_n``."""

    subsets: dict = field(default_factory=dict)


@dataclass
class SpaceLikeWeightSpec:
    """Tables defining the weight ``W(X)``.

    Attributes:
        sets: ``sets[n-1]`` is the ground set ``X_n`` as a 1-D array of
            distinct labels.
        copies: ``copies[n-1] = c(n) >= 0``.
        times: ``times[n-1]`` lists ``t^n_0, ..., t^n_{c(n)}``.
        phi: ``phi[n-1]`` has shape ``(|X_{n-1}| + 1, |X_n|)``.  Rows
            ``0 .. |X_{n-1}| - 1`` are ``phi_n(x, .)``; the last row is
            ``phi_n(virt, .)``.  For ``n = 1`` only the virtual row exists.
        transitions: ``transitions[n-1][a-1]`` is ``T^n_a`` of shape
            ``(|X_n|, |X_n|)``, rows indexed by the later copy.
        psi: shape ``(N, |X_N|)``; row ``j`` holds ``Psi^N_j``.
    """

    sets: list
    copies: list
    times: list
    phi: list
    transitions: list
    psi: np.ndarray

    def __post_init__(self):
        self.sets = [np.asarray(s) for s in self.sets]
        self.copies = [int(c) for c in self.copies]
        self.times = [np.asarray(t, dtype=float) for t in self.times]
        self.phi = [np.asarray(p) for p in self.phi]
        self.transitions = [[np.asarray(m) for m in level] for level in self.transitions]
        self.psi = np.asarray(self.psi)
        self.validate()

    @property
    def N(self) -> int:
        return len(self.sets)

    @property
    def dtype(self):
        tables = [self.psi, *self.phi, *(m for lvl in self.transitions for m in lvl)]
        return np.result_type(*tables, float)

    def validate(self) -> None:
        N = self.N
        if N < 1:
            raise ValueError("need at least one level")
        for name, seq in (("copies", self.copies), ("times", self.times),
                          ("phi", self.phi), ("transitions", self.transitions)):
            if len(seq) != N:
                raise ValueError(f"{name} has {len(seq)} entries for {N} levels")
        for n in range(1, N + 1):
            size = self.size(n)
            if len(set(self.sets[n - 1].tolist())) != size:
                raise ValueError(f"labels of X_{n} are not distinct")
            c = self.copies[n - 1]
            if c < 0:
                raise ValueError(f"c({n}) must be >= 0")
            if self.times[n - 1].shape != (c + 1,):
                raise ValueError(f"level {n} needs {c + 1} time labels")
            rows = 1 if n == 1 else self.size(n - 1) + 1
            if self.phi[n - 1].shape != (rows, size):
                raise ValueError(f"phi_{n} has shape {self.phi[n - 1].shape}, expected {(rows, size)}")
            if len(self.transitions[n - 1]) != c:
                raise ValueError(f"level {n} needs {c} transition tables")
            for a, m in enumerate(self.transitions[n - 1], start=1):
                if m.shape != (size, size):
                    raise ValueError(f"T^{n}_{a} has shape {m.shape}, expected {(size, size)}")
        if self.psi.shape != (N, self.size(N)):
            raise ValueError(f"psi has shape {self.psi.shape}, expected {(N, self.size(N))}")
        chain = np.concatenate([self.times[n - 1] for n in range(N, 0, -1)])
        if np.any(np.diff(chain) < 0):
            raise ValueError("time labels must be weakly increasing along the chain")
        for n in range(N, 1, -1):
            if self.times[n - 1][-1] != self.times[n - 2][0]:
                raise ValueError(f"t^{n}_c({n}) must equal t^{n - 1}_0")

    def size(self, n: int) -> int:
        return int(self.sets[n - 1].size)

    def positions(self) -> list:
        """All copies ``(n, a)`` in chain order, earliest first."""
        return [(n, a) for n in range(self.N, 0, -1) for a in range(self.copies[n - 1] + 1)]

    def position(self, n: int, a: int) -> int:
        if not 1 <= n <= self.N or not 0 <= a <= self.copies[n - 1]:
            raise ValueError(f"no copy ({n}, {a}) in this spec")
        return sum(self.copies[m - 1] + 1 for m in range(n + 1, self.N + 1)) + a

    def index(self, n: int, x) -> int:
        hits = np.flatnonzero(self.sets[n - 1] == x)
        if hits.size != 1:
            raise ValueError(f"{x!r} is not a label of X_{n}")
        return int(hits[0])

    def step(self, p: int) -> np.ndarray:
        """Link from chain position ``p - 1`` into ``p`` (rows at ``p``)."""
        n, a = self.positions()[p]
        if a > 0:
            return self.transitions[n - 1][a - 1]
        return self.phi[n][:-1]          # phi_{n+1} without its virtual row

    def virtual_row(self, n: int) -> np.ndarray:
        return self.phi[n - 1][-1]

    # -- serialization -----------------------------------------------------

    def to_dict(self) -> dict:
        return {
            "format": FORMAT_TAG,
            "sets": [_encode(s) for s in self.sets],
            "copies": list(self.copies),
            "times": [t.tolist() for t in self.times],
            "phi": [_encode(p) for p in self.phi],
            "transitions": [[_encode(m) for m in lvl] for lvl in self.transitions],
            "psi": _encode(self.psi),
        }

    @classmethod
    def from_dict(cls, data: dict) -> "SpaceLikeWeightSpec":
        if data.get("format") != FORMAT_TAG:
            raise ValueError(f"expected format {FORMAT_TAG!r}, got {data.get('format')!r}")
        return cls(
            sets=[_decode(s) for s in data["sets"]],
            copies=data["copies"],
            times=data["times"],
            phi=[_decode(p) for p in data["phi"]],
            transitions=[[_decode(m) for m in lvl] for lvl in data["transitions"]],
            psi=_decode(data["psi"]),
        )

    def to_json(self, **kw) -> str:
        return json.dumps(self.to_dict(), **kw)

    @classmethod
    def from_json(cls, text: str) -> "SpaceLikeWeightSpec":
        return cls.from_dict(json.loads(text))


def _encode(arr: np.ndarray):
    # real tables are nested lists (row = first index); complex ones split
    arr = np.asarray(arr)
    if np.iscomplexobj(arr):
        return {"re": arr.real.tolist(), "im": arr.imag.tolist()}
    return arr.tolist()


def _decode(obj) -> np.ndarray:
    if isinstance(obj, dict):
        return np.asarray(obj["re"], dtype=float) + 1j * np.asarray(obj["im"], dtype=float)
    return np.asarray(obj, dtype=float)


# ---------------------------------------------------------------------------
# the weight and its brute-force correlations
# ---------------------------------------------------------------------------

def weight(spec: SpaceLikeWeightSpec, X: PointConfiguration):
    """``W(X)``; zero unless every copy of ``X_n`` holds exactly ``n`` points."""
    chosen = {}
    for (n, a), labels in X.subsets.items():
        spec.position(n, a)
        idx = sorted(spec.index(n, x) for x in labels)
        if len(set(idx)) != len(idx):
            raise ValueError(f"repeated label in copy ({n}, {a})")
        chosen[(n, a)] = idx
    unknown = set(chosen) - set(spec.positions())
    if unknown:
        raise ValueError(f"copies {sorted(unknown)} are not in this spec")
    for n, a in spec.positions():
        if len(chosen.get((n, a), ())) != n:
            return 0.0
    return _weight_from_indices(spec, [chosen[pos] for pos in spec.positions()])


def _weight_from_indices(spec, subsets):
    """Weight of a configuration given per-position index lists in chain order."""
    total = np.linalg.det(spec.psi[::-1][:, subsets[0]].T)   # entry (k, l) = Psi^N_{N-l}(x_k)
    for p in range(1, len(subsets)):
        n, a = spec.positions()[p]
        table = spec.step(p)[np.ix_(subsets[p], subsets[p - 1])]
        if a == 0:                       # phi_{n+1}: append the virtual row
            table = np.vstack([table, spec.virtual_row(n + 1)[subsets[p - 1]]])
        total = total * np.linalg.det(table)
    return total * spec.virtual_row(1)[subsets[-1][0]]      # phi_1 is 1 x 1


def _link_determinants(spec):
    """Determinant tables over all subsets for each link of the chain.

    Returns the subset lists per position, the vector of ``Psi`` determinants
    on position 0, the link tables ``D[p][i_p, i_{p-1}]`` and the final
    ``phi_1`` factor over the subsets of the last position.
    """
    positions = spec.positions()
    subsets = [list(itertools.combinations(range(spec.size(n)), n)) for n, _ in positions]
    dtype = spec.dtype
    rev = spec.psi[::-1]
    head = np.array([np.linalg.det(rev[:, list(s)].T) for s in subsets[0]], dtype=dtype)
    links = [None]
    for p in range(1, len(positions)):
        n, a = positions[p]
        step = spec.step(p)
        out = np.empty((len(subsets[p]), len(subsets[p - 1])), dtype=dtype)
        virt = spec.virtual_row(n + 1) if a == 0 else None
        for i, si in enumerate(subsets[p]):
            for j, sj in enumerate(subsets[p - 1]):
                table = step[np.ix_(si, sj)]
                if virt is not None:
                    table = np.vstack([table, virt[list(sj)]])
                out[i, j] = np.linalg.det(table)
        links.append(out)
    tail = np.array([spec.virtual_row(1)[s[0]] for s in subsets[-1]], dtype=dtype)
    return subsets, head, links, tail


def configuration_count(spec: SpaceLikeWeightSpec) -> int:
    return math.prod(math.comb(spec.size(n), n) for n, _ in spec.positions())


def brute_force_correlations(spec: SpaceLikeWeightSpec, points: Sequence[LevelTimePoint],
                             budget: int = MAX_CONFIGURATIONS):
    """``sum_{X contains points} W(X) / sum_X W(X)`` by full enumeration.

    Configurations are enumerated lexicographically over the per-copy
    subsets, as the axes of one weight tensor in chain order.

    Raises:
        EnumerationBudgetError: more than ``budget`` configurations.
        PartitionFunctionError: the partition function vanishes.
    """
    count = configuration_count(spec)
    if count > budget:
        raise EnumerationBudgetError(f"{count} configurations exceed the budget of {budget}")
    _check_distinct(points)
    subsets, head, links, tail = _link_determinants(spec)
    masks = _point_masks(spec, subsets, points)

    def total(masked: bool):
        w = head * masks[0] if masked else head
        for p in range(1, len(links)):
            factor = links[p].T * masks[p] if masked else links[p].T
            w = w[..., :, None] * factor         # new last axis: subsets of position p
        w = w * tail
        return w.sum()

    z = total(False)
    if z == 0:
        raise PartitionFunctionError("the partition function vanishes")
    if not points:
        return _real_if_close(z / z)
    return _real_if_close(total(True) / z)


def partition_function(spec: SpaceLikeWeightSpec, budget: int = MAX_CONFIGURATIONS):
    """``Z = sum_X W(X)`` by enumeration (compare with ``det M``)."""
    if configuration_count(spec) > budget:
        raise EnumerationBudgetError("configuration space exceeds the budget")
    _, head, links, tail = _link_determinants(spec)
    w = head
    for p in range(1, len(links)):
        w = links[p] @ w
    return _real_if_close(tail @ w)


def _point_masks(spec, subsets, points):
    masks = [np.ones(len(s)) for s in subsets]
    for pt in points:
        p = spec.position(pt.n, pt.a)
        i = spec.index(pt.n, pt.x)
        masks[p] = masks[p] * np.array([i in s for s in subsets[p]], dtype=float)
    return masks


def _check_distinct(points):
    seen = set()
    for pt in points:
        key = (pt.n, pt.a, pt.x)
        if key in seen:
            raise ValueError(f"point {pt} listed twice")
        seen.add(key)


def _real_if_close(value):
    value = complex(value)
    return value.real if value.imag == 0 else value


# ---------------------------------------------------------------------------
# the kernel
# ---------------------------------------------------------------------------

def transfer(spec: SpaceLikeWeightSpec, later: int, earlier: int) -> np.ndarray:
    """``phi^{(later, earlier)}``: product of the links between two chain positions.

    Returns the identity when the positions coincide; callers decide whether
    that case contributes (it does not in the ``-phi`` term of the kernel).
    """
    if later < earlier:
        raise ValueError("transfer runs from an earlier to a later position")
    n, _ = spec.positions()[earlier]
    out = np.eye(spec.size(n), dtype=spec.dtype)
    for p in range(earlier + 1, later + 1):
        out = spec.step(p) @ out
    return out


def psi_at(spec: SpaceLikeWeightSpec, n: int, a: int) -> np.ndarray:
    """``Psi^{n, t^n_a}`` as a ``(|X_n|, N)`` table; column ``l - 1`` is index ``n - l``."""
    base = spec.psi[::-1].T                   # column l-1 holds Psi^N_{N-l}
    return transfer(spec, spec.position(n, a), 0) @ base


def m_matrix(spec: SpaceLikeWeightSpec) -> np.ndarray:
    """``M_{k, l} = (phi_k * T^k * ... * phi_N * T^N * Psi^N_{N-l})(virt)``."""
    N = spec.N
    M = np.empty((N, N), dtype=spec.dtype)
    for k in range(1, N + 1):
        M[k - 1] = spec.virtual_row(k) @ psi_at(spec, k, spec.copies[k - 1])
    return M


def virtual_rows_at(spec: SpaceLikeWeightSpec, n: int, a: int) -> np.ndarray:
    """``(phi_l * phi^{(t^l_{c(l)}, t^n_a)})(virt, .)`` for ``l = 1..n``, stacked as rows."""
    target = spec.position(n, a)
    rows = np.empty((n, spec.size(n)), dtype=spec.dtype)
    for l in range(1, n + 1):
        start = spec.position(l, spec.copies[l - 1])     # never earlier than target
        rows[l - 1] = spec.virtual_row(l) @ transfer(spec, start, target)
    return rows


@dataclass
class KernelData:
    """Pieces of the kernel that do not depend on the evaluation points."""

    M: np.ndarray
    lu: tuple
    condition: float


def prepare(spec: SpaceLikeWeightSpec) -> KernelData:
    """Factor ``M`` (partial-pivot LU) after checking its condition number."""
    M = m_matrix(spec)
    if not np.all(np.isfinite(M)):
        raise IllConditionedError("M has non-finite entries")
    cond = float(np.linalg.cond(M))
    if not np.isfinite(cond) or cond > MAX_CONDITION:
        raise IllConditionedError(f"M has condition number {cond:.3e} > {MAX_CONDITION:.0e}")
    return KernelData(M, scipy.linalg.lu_factor(M), cond)


def kernel_block(spec: SpaceLikeWeightSpec, n1: int, a1: int, n2: int, a2: int,
                 data: KernelData | None = None) -> np.ndarray:
    """``K`` on ``X_{n1} x X_{n2}`` for the copies ``(n1, a1)`` and ``(n2, a2)``."""
    data = data or prepare(spec)
    p1, p2 = spec.position(n1, a1), spec.position(n2, a2)
    left = psi_at(spec, n1, a1)                               # (|X_n1|, N)
    right = virtual_rows_at(spec, n2, a2)                     # (n2, |X_n2|)
    rhs = np.zeros((spec.N, right.shape[1]), dtype=np.result_type(spec.dtype, data.M))
    rhs[:n2] = right
    out = left @ scipy.linalg.lu_solve(data.lu, rhs)
    if p1 > p2:
        out = out - transfer(spec, p1, p2)
    return out


def correlation_kernel(spec: SpaceLikeWeightSpec, a: LevelTimePoint, b: LevelTimePoint,
                       data: KernelData | None = None):
    """``K(n1, t^{n1}_{a1}, x1; n2, t^{n2}_{a2}, x2)``.

    Raises:
        IllConditionedError: ``M`` is singular or worse than ``MAX_CONDITION``.
    """
    block = kernel_block(spec, a.n, a.a, b.n, b.a, data)
    return _real_if_close(block[spec.index(a.n, a.x), spec.index(b.n, b.x)])


def kernel_matrix(spec: SpaceLikeWeightSpec, points: Sequence[LevelTimePoint],
                  data: KernelData | None = None) -> np.ndarray:
    """``[K(pt_i, pt_j)]`` for a list of points."""
    data = data or prepare(spec)
    blocks = {}
    out = np.empty((len(points), len(points)), dtype=np.result_type(spec.dtype, data.M))
    for i, u in enumerate(points):
        for j, v in enumerate(points):
            key = (u.n, u.a, v.n, v.a)
            if key not in blocks:
                blocks[key] = kernel_block(spec, *key, data=data)
            out[i, j] = blocks[key][spec.index(u.n, u.x), spec.index(v.n, v.x)]
    return out


def determinantal_correlation(spec: SpaceLikeWeightSpec, points: Sequence[LevelTimePoint],
                              data: KernelData | None = None):
    """``det[K(pt_i, pt_j)]``; the empty product is 1."""
    _check_distinct(points)
    if not points:
        return 1.0
    return _real_if_close(np.linalg.det(kernel_matrix(spec, points, data)))


def is_upper_triangular(M: np.ndarray, rtol: float = 1e-12) -> bool:
    scale = max(float(np.max(np.abs(M))), np.finfo(float).tiny)
    return bool(np.all(np.abs(np.tril(M, -1)) <= rtol * scale))


def biorthogonal_functions(spec: SpaceLikeWeightSpec, n: int, a: int,
                           data: KernelData | None = None) -> np.ndarray:
    """``Phi^{n, t^n_a}_{n-k}`` for ``k = 1..n`` as rows of an ``(n, |X_n|)`` table.

    ``Phi_{n-k} = sum_{l <= n} [M^{-1}]_{k, l} (phi_l * phi^{(t^l_{c(l)}, t^n_a)})(virt, .)``.
    When ``M`` is upper triangular these are biorthogonal to the first ``n``
    columns of :func:`psi_at`.
    """
    data = data or prepare(spec)
    minv = scipy.linalg.lu_solve(data.lu, np.eye(spec.N))
    return minv[:n, :n] @ virtual_rows_at(spec, n, a)


def correlation_kernel_triangular(spec: SpaceLikeWeightSpec, a: LevelTimePoint,
                                  b: LevelTimePoint, data: KernelData | None = None):
    """The simplified kernel ``-phi + sum_{k <= n2} Psi_{n1-k}(x1) Phi_{n2-k}(x2)``.

    Only valid when ``M`` is upper triangular.

    Raises:
        ValueError: ``M`` is not upper triangular.
    """
    data = data or prepare(spec)
    if not is_upper_triangular(data.M):
        raise ValueError("the simplified kernel needs an upper-triangular M")
    i, j = spec.index(a.n, a.x), spec.index(b.n, b.x)
    psi = psi_at(spec, a.n, a.a)[i, :b.n]
    phi = biorthogonal_functions(spec, b.n, b.a, data)[:, j]
    value = psi @ phi
    p1, p2 = spec.position(a.n, a.a), spec.position(b.n, b.a)
    if p1 > p2:
        value = value - transfer(spec, p1, p2)[i, j]
    return _real_if_close(value)


# ---------------------------------------------------------------------------
# spec builders
# ---------------------------------------------------------------------------

def random_spec(rng: np.random.Generator, levels: int, sizes: Iterable[int], copies: Iterable[int],
                complex_weights: bool = False, upper_triangular: bool = False,
                low: float = 0.1, high: float = 1.0) -> SpaceLikeWeightSpec:
    """Random tables with entries uniform in ``[low, high)``.

    With ``complex_weights`` every entry gets a random phase.  With
    ``upper_triangular`` the virtual rows are projected so that
    ``M_{k, l} = 0`` for ``k > l``; this uses the fact that ``Psi^{(k, c(k))}``
    does not involve any virtual row.
    """
    sizes, copies = list(sizes), list(copies)
    if len(sizes) != levels or len(copies) != levels:
        raise ValueError("sizes and copies need one entry per level")
    if any(s < n for n, s in enumerate(sizes, start=1)):
        raise ValueError("level n needs at least n sites")

    def table(*shape):
        out = rng.uniform(low, high, size=shape)
        if complex_weights:
            out = out * np.exp(2j * np.pi * rng.uniform(size=shape))
        return out

    sets = [np.arange(s, dtype=float) for s in sizes]
    cuts = np.sort(rng.uniform(0.0, 1.0, size=sum(c + 1 for c in copies) - levels + 1))
    times, pos = [], 0
    for n in range(levels, 0, -1):
        c = copies[n - 1]
        times.insert(0, cuts[pos:pos + c + 1])
        pos += c
    phi = [table(1 if n == 1 else sizes[n - 2] + 1, sizes[n - 1]) for n in range(1, levels + 1)]
    transitions = [[table(sizes[n - 1], sizes[n - 1]) for _ in range(copies[n - 1])]
                   for n in range(1, levels + 1)]
    spec = SpaceLikeWeightSpec(sets, copies, times, phi, transitions, table(levels, sizes[-1]))
    if upper_triangular:
        for k in range(2, levels + 1):
            constraints = psi_at(spec, k, copies[k - 1])[:, :k - 1]      # (|X_k|, k-1)
            basis = scipy.linalg.null_space(constraints.T)
            coeff = table(basis.shape[1])
            spec.phi[k - 1][-1] = basis @ coeff
    return spec


def gue_discretized_spec(levels: int, times: Sequence[float], half_width: float = 10.0,
                         spacing: float = 0.1) -> SpaceLikeWeightSpec:
    """GUE minors on a uniform grid, one time per level.

    Level ``n`` is observed at ``times[n-1]`` with ``times`` non-increasing in
    ``n`` (a space-like path).  Each level change inserts the interlacing
    step ``phi(x, y) = h 1[x < y]`` (``h / 2`` on the diagonal) with virtual
    row ``1``, each time
    change the heat kernel ``h T_{t, s}``, and ``Psi^N`` is the weighted
    Hermite family on the earliest copy.  Both grid sums are spectrally
    accurate for the Gaussian tails involved, so ``M`` is upper triangular
    up to rounding and ``K / h`` approximates the continuum kernel.
    """
    times = [float(t) for t in times]
    if len(times) != levels:
        raise ValueError("need one time per level")
    if any(t2 > t1 for t1, t2 in zip(times, times[1:])):
        raise ValueError("times must not increase with the level")
    steps = int(round(half_width / spacing))
    grid = np.round(np.arange(-steps, steps + 1) * spacing, 12)   # labels like 0.3 stay exact
    h = spacing
    size = grid.size
    # copies: level n holds t_n at copy 0 and, when the level above has a
    # later time, t_{n-1} at its last copy
    copies, tlist, transitions = [], [], []
    for n in range(1, levels + 1):
        t_here = times[n - 1]
        t_up = times[n - 2] if n > 1 else t_here
        if n > 1 and t_up > t_here:
            copies.append(1)
            tlist.append([t_here, t_up])
            transitions.append([h * heat_kernel(t_up, t_here, grid[:, None], grid[None, :])])
        else:
            copies.append(0)
            tlist.append([t_here])
            transitions.append([])
    # trapezoid weights: half weight on the diagonal keeps the step sums second order
    step = h * ((grid[:, None] < grid[None, :]) + 0.5 * np.eye(size))
    phi = [np.ones((1, size))]
    for n in range(2, levels + 1):
        phi.append(np.vstack([step, np.ones((1, size))]))
    psi = np.array([psi_gue(levels, times[-1], j, grid) for j in range(levels)])
    return SpaceLikeWeightSpec([grid] * levels, copies, tlist, phi, transitions, psi)
