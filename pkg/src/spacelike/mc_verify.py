"""Statistical and numerical checks of the kernels against independent routes.

Two kinds of checks live here.  Identity checks compare two exact
expressions that should agree: convolution lemmas, biorthogonality, dual
integral representations, traces and the sum-vs-contour forms of the
kernels.  Their deviations are pure quadrature error.  Monte Carlo checks
compare sampled eigenvalues or particle positions, and Haar averages, with
the kernel or closed-form predictions, and report z-scores.

Every Monte Carlo check splits its samples into fixed-size chunks.  Chunk
``i`` draws from ``RngStream(seed, i)``.  The chunk sums are combined in
chunk order, so a result depends only on the seed, never on how chunks are
scheduled.
"""
from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass, field
from typing import Callable, Sequence

import numpy as np
from scipy.special import roots_genlaguerre
from scipy.stats import poisson

from . import contour as ct
from . import eynard as ey
from . import particles as pt
from .kernels.discrete import discrete_kernel_diag
from .kernels.gue import (gue_kernel_diag, gue_kernel_grid, heat_kernel, kernel_diffusion_scaled,
                          phi_gue, psi_gue)
from .kernels.common import SpaceTimePoint
from .kernels.lue import (bessel_transition, lue_kernel_diag, lue_kernel_grid, phi_lue, psi_lue)
from .rmt_sim import (RngStream, gram, haar_unitary, hermitian_eigenvalues, interlacing_violations,
                      minor_eigenvalues, sample_hermitian_paths, sample_wishart_matrices)
from .specfun import bessel_i, hermite, laguerre, log_factorial

MC_CHUNK = 100_000
FD_FLOOR = 0.05

DEFAULT_TOLERANCES = {
    "orthogonality": 1e-8,
    "lemma": 1e-6,
    "biorthogonality": 1e-8,
    "dual_representation": 1e-9,
    "trace": 1e-6,
    "kernel_sum_vs_contour": 1e-6,
    "eynard": 1e-9,
    "z": 3.0,
}

# Random weight specs are redrawn when M is worse conditioned than this.  The
# kernel route loses roughly cond(M) * 1e-16 of accuracy and the oracle
# tolerance is absolute, so near-singular draws would test rounding rather
# than the formula.
EYNARD_CONDITION_SCREEN = 1e5


# ---------------------------------------------------------------------------
# report types
# ---------------------------------------------------------------------------

@dataclass
class Histogram:
    """Counts per bin; samples outside the edges are tallied separately."""

    edges: np.ndarray
    counts: np.ndarray
    total: int
    below: int = 0
    above: int = 0

    @property
    def widths(self) -> np.ndarray:
        return np.diff(self.edges)

    @property
    def density(self) -> np.ndarray:
        """Counts divided by ``total`` and bin width."""
        return self.counts / (self.total * self.widths)


@dataclass
class CorrelationEstimate:
    """An empirical quantity with its standard error and a prediction."""

    descriptor: str
    estimate: float
    stderr: float
    n_samples: int
    predicted: float = math.nan

    @property
    def z(self) -> float:
        if self.stderr > 0:
            return (self.estimate - self.predicted) / self.stderr
        return 0.0 if self.estimate == self.predicted else math.inf

    def to_dict(self) -> dict:
        d = asdict(self)
        d["z"] = self.z
        return d


@dataclass
class CheckResult:
    name: str
    passed: bool
    value: float
    tolerance: float
    details: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {"name": self.name, "pass": bool(self.passed), "value": _jsonable(self.value),
                "tolerance": self.tolerance, "details": _jsonable(self.details)}


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, (np.floating, float)):
        return float(obj) if math.isfinite(obj) else str(obj)
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, np.bool_):
        return bool(obj)
    if isinstance(obj, np.ndarray):
        return _jsonable(obj.tolist())
    return obj


def report_json(results: Sequence[CheckResult], **meta) -> str:
    """Stable JSON report: metadata, per-check entries and an overall verdict."""
    body = {"meta": _jsonable(meta), "checks": [r.to_dict() for r in results],
            "pass": all(r.passed for r in results)}
    return json.dumps(body, indent=2, sort_keys=True)


# ---------------------------------------------------------------------------
# histograms and correlation estimates
# ---------------------------------------------------------------------------

def freedman_diaconis_width(samples: np.ndarray, floor: float = FD_FLOOR) -> float:
    samples = np.asarray(samples, dtype=float).ravel()
    q75, q25 = np.percentile(samples, [75, 25])
    width = 2.0 * (q75 - q25) / samples.size ** (1.0 / 3.0)
    return max(float(width), floor)


def empirical_density(samples, bins=None, value_range=None) -> Histogram:
    """Histogram of ``samples`` with Freedman-Diaconis bins (width >= 0.05) by default.

    Args:
        bins: ``None``, a bin count, or explicit ascending edges.
        value_range: ``(lo, hi)`` used when ``bins`` is not explicit edges.
    """
    samples = np.asarray(samples, dtype=float).ravel()
    if samples.size == 0:
        raise ValueError("no samples")
    lo, hi = value_range if value_range is not None else (samples.min(), samples.max())
    if bins is None:
        width = freedman_diaconis_width(samples)
        count = max(1, int(math.ceil((hi - lo) / width)))
        edges = lo + width * np.arange(count + 1)
    elif np.ndim(bins) == 0:
        edges = np.linspace(lo, hi, int(bins) + 1)
    else:
        edges = np.asarray(bins, dtype=float)
        if np.any(np.diff(edges) <= 0):
            raise ValueError("bin edges must be strictly increasing")
    counts, _ = np.histogram(samples, bins=edges)
    return Histogram(edges, counts, samples.size, int(np.sum(samples < edges[0])),
                     int(np.sum(samples > edges[-1])))


def bin_masses(density: Callable[[np.ndarray], np.ndarray], edges: np.ndarray,
               order: int = 20) -> np.ndarray:
    """``int_bin density`` per bin by Gauss-Legendre."""
    x, w = ct.gauss_legendre_panels(-1.0, 1.0, 1, order)
    edges = np.asarray(edges, dtype=float)
    half = 0.5 * np.diff(edges)
    mid = 0.5 * (edges[1:] + edges[:-1])
    nodes = mid[:, None] + half[:, None] * x[None, :]
    vals = np.asarray(density(nodes.ravel())).reshape(nodes.shape)
    return np.sum(vals * w[None, :], axis=1) * half


def count_estimates(points: np.ndarray, edges: np.ndarray, predicted: np.ndarray,
                    label: str) -> list:
    """Mean number of points per sample in each bin against its prediction.

    The standard error is the binomial one under the prediction,
    ``sqrt(p (1 - p) / S)``.  Small bins rarely hold two points, so this is
    close to the exact null variance, and it does not degrade in sparse tail
    bins the way the sample variance does.

    Args:
        points: ``(S, m)`` array, one row of ``m`` points per sample.
    """
    points = np.atleast_2d(points)
    S = points.shape[0]
    idx = np.searchsorted(edges, points, side="right") - 1
    out = []
    for b in range(len(edges) - 1):
        mean = float(np.sum(idx == b)) / S
        p = min(max(float(predicted[b]), 0.0), 1.0)
        se = math.sqrt(max(p * (1 - p), 1.0 / S) / S)
        out.append(CorrelationEstimate(f"{label}[{edges[b]:.4g},{edges[b + 1]:.4g})",
                                       mean, se, S, float(predicted[b])))
    return out


def empirical_pair_correlation(points_a: np.ndarray, points_b: np.ndarray,
                               cell_a: tuple, cell_b: tuple, same_process: bool = False,
                               predicted: float = math.nan) -> CorrelationEstimate:
    """Estimate ``int_A int_B rho_2`` as ``E[N_A N_B]`` (or ``E[N_A (N_A - 1)]`` on the diagonal).

    Args:
        points_a, points_b: ``(S, m)`` arrays of points per sample.  They
            may be the same array when both cells refer to one process.
        same_process: the two arrays describe the same point set.  Then
            identical cells use ``N (N - 1)``.  Overlapping but unequal
            cells are rejected.
    """
    a = np.atleast_2d(points_a)
    b = np.atleast_2d(points_b)
    if a.shape[0] != b.shape[0]:
        raise ValueError("sample counts differ")
    na = np.sum((a >= cell_a[0]) & (a < cell_a[1]), axis=1).astype(float)
    nb = np.sum((b >= cell_b[0]) & (b < cell_b[1]), axis=1).astype(float)
    if same_process and tuple(cell_a) == tuple(cell_b):
        prod = na * (na - 1.0)
    else:
        if same_process and cell_a[0] < cell_b[1] and cell_b[0] < cell_a[1]:
            raise ValueError("cells of one process must be disjoint or identical")
        prod = na * nb
    if na.sum() == 0 or nb.sum() == 0:
        raise ValueError("empty cell: no sample has a point there")
    S = prod.size
    return CorrelationEstimate(f"pair[{cell_a}]x[{cell_b}]", float(prod.mean()),
                               float(prod.std(ddof=1) / math.sqrt(S)), S, predicted)


def integrate_pair_density(k11, k12, k21, k22, cell_a, cell_b, order: int = 16) -> float:
    """``int_A int_B det [[K(a,a), K(a,b)], [K(b,a), K(b,b)]]`` by tensor Gauss-Legendre.

    The ``k..`` callables take node arrays and return diagonals (``k11``,
    ``k22``) or full grids (``k12``, ``k21``).
    """
    xa, wa = ct.gauss_legendre_panels(cell_a[0], cell_a[1], 1, order)
    xb, wb = ct.gauss_legendre_panels(cell_b[0], cell_b[1], 1, order)
    det = np.outer(k11(xa), k22(xb)) - k12(xa, xb) * k21(xb, xa).T
    return float(wa @ det @ wb)


# ---------------------------------------------------------------------------
# identity checks
# ---------------------------------------------------------------------------

def _sample_points(rng, lo, hi, count):
    return np.sort(rng.uniform(lo, hi, size=count))


def _quad(f, a, b, panels=60, order=20):
    """``int_a^b f`` for ``f`` vectorized over a node axis appended last."""
    x, w = ct.gauss_legendre_panels(a, b, panels, order)
    return f(x) @ w


def lemma_gue(t: float, s: float, r: float, n_max: int = 5, n_points: int = 20,
              seed: int = 0) -> dict:
    """Max deviations of the four Hermitian-minor convolution identities.

    (i) ``phi * Psi^{n,t}_{n-k} = Psi^{n-1,t}_{n-1-k}``, (ii) ``T_{t,s} *
    Psi^{n,s}_{n-k} = Psi^{n,t}_{n-k}``, (iii) ``phi * T_{t,s} = T_{t,s} *
    phi``, (iv) ``T_{t,s} * T_{s,r} = T_{t,r}``, with ``phi(x, y) = 1[x <= y]``.
    """
    rng = np.random.default_rng(seed)
    out = {"i": 0.0, "ii": 0.0, "iii": 0.0, "iv": 0.0}
    half = 3.0 * math.sqrt(t)
    xs = _sample_points(rng, -half, half, n_points)
    reach = 12.0 * math.sqrt(max(t, 1.0))
    for n in range(1, n_max + 1):
        for k in range(1, n + 2):
            if n >= 2:
                for x in xs:
                    lhs = _quad(lambda y: psi_gue(n, t, n - k, y), x, x + reach)
                    rhs = psi_gue(n - 1, t, n - 1 - k, x)
                    out["i"] = max(out["i"], abs(lhs - rhs))
            w = 10.0 * math.sqrt(t - s)
            for x in xs:
                lhs = _quad(lambda y: heat_kernel(t, s, x, y) * psi_gue(n, s, n - k, y), x - w, x + w)
                out["ii"] = max(out["ii"], abs(lhs - psi_gue(n, t, n - k, x)))
    w = 10.0 * math.sqrt(t - s)
    zs = xs[::-1] + 0.37
    for x, z in zip(xs, zs):
        if abs(x - z) <= 0.01:
            continue
        lhs = _quad(lambda y: heat_kernel(t, s, y, z), x, max(x, z) + w)
        rhs = _quad(lambda y: heat_kernel(t, s, x, y), min(x, z) - w, z)
        out["iii"] = max(out["iii"], abs(lhs - rhs))
        wide = 10.0 * math.sqrt(t - r)
        lhs = _quad(lambda y: heat_kernel(t, s, x, y) * heat_kernel(s, r, y, z),
                    min(x, z) - wide, max(x, z) + wide)
        out["iv"] = max(out["iv"], abs(lhs - heat_kernel(t, r, x, z)))
    return out


def lemma_lue(t: float, s: float, r: float, p_max: int = 6, n_points: int = 20,
              seed: int = 0) -> dict:
    """Max deviations of the four Wishart-chain identities on the half line.

    (i) ``phi * Psi^{p-n,t}_{n-k} = Psi^{p-n+1,t}_{n-1-k}``, (ii)
    ``T^{p-n}_{t,s} * Psi^{p-n,s}_{n-k} = Psi^{p-n,t}_{n-k}``, (iii) ``phi *
    T^{p-n}_{t,s} = T^{p-n+1}_{t,s} * phi``, (iv) the semigroup property,
    with ``phi(x, y) = 1[x >= y]``.  Negative indices use the functions with
    the residue at ``z = 1`` included.
    """
    rng = np.random.default_rng(seed)
    out = {"i": 0.0, "ii": 0.0, "iii": 0.0, "iv": 0.0}
    xs = _sample_points(rng, 0.05, 4.0 * t, n_points)

    def upper(x, d):
        return (math.sqrt(x) + 9.0 * math.sqrt(d)) ** 2 + 10.0 * d

    for p in range(1, p_max + 1):
        for n in range(1, p + 1):
            order = p - n
            for k in range(1, n + 2):
                if n >= 2:
                    for x in xs:
                        lhs = _quad(lambda y: psi_lue(order, t, n - k, y, unit_pole=True), 0.0, x)
                        rhs = psi_lue(order + 1, t, n - 1 - k, x, unit_pole=True)
                        out["i"] = max(out["i"], abs(lhs - rhs))
                for x in xs:
                    f = lambda y: (bessel_transition(order, t, s, x, y)
                                   * psi_lue(order, s, n - k, y, unit_pole=True))
                    lhs = _quad(f, 0.0, upper(x, t - s), panels=120)
                    rhs = psi_lue(order, t, n - k, x, unit_pole=True)
                    out["ii"] = max(out["ii"], abs(lhs - rhs))
            zs = xs[::-1] * 0.9 + 0.11
            for x, z in zip(xs, zs):
                if abs(x - z) > 0.01:
                    lhs = _quad(lambda y: bessel_transition(order, t, s, y, z), 0.0, x)
                    rhs = _quad(lambda y: bessel_transition(order + 1, t, s, x, y), z,
                                upper(max(x, z), t - s), panels=120)
                    out["iii"] = max(out["iii"], abs(lhs - rhs))
                f = lambda y: bessel_transition(order, t, s, x, y) * bessel_transition(order, s, r, y, z)
                lhs = _quad(f, 0.0, upper(max(x, z), t - r), panels=120)
                out["iv"] = max(out["iv"], abs(lhs - bessel_transition(order, t, r, x, z)))
    return out


def orthogonality_hermite(n_max: int = 10) -> float:
    """Max relative deviation of ``int H_m H_n e^{-x^2} = sqrt(pi) 2^n n! delta_mn``."""
    x, w = np.polynomial.hermite.hermgauss(n_max + 2)
    h = np.array([hermite(n, x) for n in range(n_max + 1)])
    gram_ = (h * w) @ h.T
    norm = np.array([math.sqrt(math.pi) * 2.0 ** n * math.factorial(n) for n in range(n_max + 1)])
    return float(np.max(np.abs(gram_ / np.sqrt(np.outer(norm, norm)) - np.eye(n_max + 1))))


def orthogonality_laguerre(n_max: int = 10, orders=(0, 1, 2, 5, 10)) -> float:
    """Max relative deviation of ``int x^p e^{-x} L^p_k L^p_l = (k+p)!/k! delta_kl``."""
    worst = 0.0
    for p in orders:
        x, w = roots_genlaguerre(n_max + 2, p)
        lag = np.array([laguerre(k, p, x) for k in range(n_max + 1)])
        gram_ = (lag * w) @ lag.T
        norm = np.exp([log_factorial(k + p) - log_factorial(k) for k in range(n_max + 1)])
        worst = max(worst, float(np.max(np.abs(gram_ / np.sqrt(np.outer(norm, norm))
                                                - np.eye(n_max + 1)))))
    return worst


def biorthogonality_gue(n_max: int = 6, times=(0.5, 1.0, 2.0)) -> float:
    """``max |int Psi^{n,t}_k Phi^{n,t}_l - delta_{kl}|`` over ``k, l < n <= n_max``."""
    worst = 0.0
    for t in times:
        half = 12.0 * math.sqrt(t)
        x, w = ct.gauss_legendre_panels(-half, half, 80, 20)
        for n in range(1, n_max + 1):
            psi = np.array([psi_gue(n, t, k, x) for k in range(n)])
            phi = np.array([phi_gue(n, t, l, x) for l in range(n)])
            gram_ = (psi * w) @ phi.T
            worst = max(worst, float(np.max(np.abs(gram_ - np.eye(n)))))
    return worst


def biorthogonality_lue(n_max: int = 6, orders=(0, 1, 3), times=(0.5, 1.0, 2.0)) -> float:
    """Same as :func:`biorthogonality_gue` for ``int_0^inf Psi^{a,t}_k Phi^{a,t}_l``."""
    worst = 0.0
    for t in times:
        x, w = ct.gauss_legendre_panels(0.0, 120.0 * t, 200, 20)
        for a in orders:
            psi = np.array([psi_lue(a, t, k, x) for k in range(n_max)])
            phi = np.array([phi_lue(a, t, l, x) for l in range(n_max)])
            gram_ = (psi * w) @ phi.T
            worst = max(worst, float(np.max(np.abs(gram_ - np.eye(n_max)))))
    return worst


def dual_representations(seed: int = 0) -> dict:
    """Max deviations between the closed forms and both contour forms of Psi and T."""
    rng = np.random.default_rng(seed)
    psi_dev = 0.0
    for order in (0, 1, 2, 4):
        for t in (0.5, 1.0, 2.0):
            x = _sample_points(rng, 0.01, 6.0 * t, 12)
            for k in range(-3, 6):
                closed = psi_lue(order, t, k, x)
                for method in ("contour", "contour_shifted"):
                    psi_dev = max(psi_dev, float(np.max(np.abs(psi_lue(order, t, k, x, method=method) - closed))))
    t_dev = 0.0
    for order in (0, 1, 3):
        for t, s in ((2.0, 1.0), (3.0, 2.0), (1.0, 0.5)):
            x = _sample_points(rng, 0.1, 5.0, 8)
            y = _sample_points(rng, 0.1, 5.0, 8)
            closed = bessel_transition(order, t, s, x, y)
            for method in ("contour", "shifted"):
                t_dev = max(t_dev, float(np.max(np.abs(bessel_transition(order, t, s, x, y, method=method) - closed))))
    return {"psi": psi_dev, "transition": t_dev}


def trace_checks() -> dict:
    """``int K(x, x) dx - n`` for the three kernels (max absolute deviation each)."""
    out = {"gue": 0.0, "lue": 0.0, "discrete": 0.0, "discrete_tail_bound": 0.0}
    for t in (0.5, 1.0, 2.0):
        half = 8.0 * math.sqrt(t)
        x, w = ct.gauss_legendre_panels(-half, half, 40, 20)
        for n in range(1, 6):
            out["gue"] = max(out["gue"], abs(float(gue_kernel_diag(x, n, t) @ w) - n))
    for p in (3, 4):
        for n in range(1, 4):
            x, w = ct.gauss_legendre_panels(0.0, 80.0, 80, 20)
            out["lue"] = max(out["lue"], abs(float(lue_kernel_diag(x, n, 1.0, p) @ w) - n))
    for n in range(1, 4):
        xs, tail = discrete_window(n, 1.0)
        total = float(np.sum(discrete_kernel_diag(xs, n, 1.0)))
        out["discrete"] = max(out["discrete"], abs(total - n))
        out["discrete_tail_bound"] = max(out["discrete_tail_bound"], tail)
    return out


def discrete_window(n: int, t: float, tail: float = 1e-10) -> tuple[np.ndarray, float]:
    """Sites carrying all but ``tail`` of the level-``n`` particles at time ``t``.

    Positions start at ``>= -n`` and a particle moves only when some clock
    rings.  So every displacement is at most a Poisson(``P t``) count, with
    ``P = n (n + 1) / 2``.  The expected number of level-``n`` particles
    beyond the window is then at most ``n`` times that Poisson tail.
    """
    P = n * (n + 1) // 2
    reach = 1
    while n * poisson.sf(reach, P * t) > tail:
        reach += 1
    return np.arange(-n, reach), float(n * poisson.sf(reach, P * t))


def kernel_sum_vs_contour(seed: int = 0, pairs: int = 10) -> dict:
    """Relative gap between the Hermite/Laguerre sums and the double integrals."""
    rng = np.random.default_rng(seed)
    out = {"gue": 0.0, "lue": 0.0}
    for _ in range(pairs):
        n1 = int(rng.integers(1, 4))
        n2 = int(rng.integers(n1, 5))
        t2 = float(rng.uniform(0.5, 2.0))
        t1 = t2 + (float(rng.uniform(0.1, 1.0)) if rng.uniform() < 0.7 or n1 == n2 else 0.0)
        x1, x2 = rng.uniform(-1.5, 1.5, size=2)
        a = gue_kernel_grid(x1, n1, t1, x2, n2, t2, method="contour")[0, 0]
        b = gue_kernel_grid(x1, n1, t1, x2, n2, t2, method="sum")[0, 0]
        out["gue"] = max(out["gue"], abs(a - b) / max(abs(b), 1e-3))
        p = int(rng.integers(n2, 6))
        y1, y2 = rng.uniform(0.2, 4.0, size=2)
        a = lue_kernel_grid(y1, n1, t1, y2, n2, t2, p, method="contour")[0, 0]
        b = lue_kernel_grid(y1, n1, t1, y2, n2, t2, p, method="sum")[0, 0]
        out["lue"] = max(out["lue"], abs(a - b) / max(abs(b), 1e-3))
    return out


def identity_suite(tolerances: dict | None = None, quick: bool = False) -> list:
    """Run every identity check; failures are entries, never exceptions.

    Args:
        tolerances: overrides for :data:`DEFAULT_TOLERANCES`.
        quick: a reduced grid (one parameter triple, smaller indices).
    """
    tol = {**DEFAULT_TOLERANCES, **(tolerances or {})}
    results = []
    grids = ((2.0, 1.0, 0.5),) if quick else ((2.0, 1.0, 0.5), (3.0, 2.0, 1.0))
    for t, s, r in grids:
        g = lemma_gue(t, s, r, n_max=3 if quick else 5)
        l = lemma_lue(t, s, r, p_max=3 if quick else 6)
        for part in ("i", "ii", "iii", "iv"):
            results.append(CheckResult(f"lemma_gue_{part}_{t:g}_{s:g}_{r:g}", g[part] < tol["lemma"],
                                       g[part], tol["lemma"]))
            results.append(CheckResult(f"lemma_lue_{part}_{t:g}_{s:g}_{r:g}", l[part] < tol["lemma"],
                                       l[part], tol["lemma"]))
    for name, val in (("orthogonality_hermite", orthogonality_hermite()),
                      ("orthogonality_laguerre", orthogonality_laguerre())):
        results.append(CheckResult(name, val < tol["orthogonality"], val, tol["orthogonality"]))
    b = biorthogonality_gue(4 if quick else 6)
    results.append(CheckResult("biorthogonality_gue", b < tol["biorthogonality"], b, tol["biorthogonality"]))
    b = biorthogonality_lue(4 if quick else 6)
    results.append(CheckResult("biorthogonality_lue", b < tol["biorthogonality"], b, tol["biorthogonality"]))
    d = dual_representations()
    for key, val in d.items():
        results.append(CheckResult(f"dual_{key}", val < tol["dual_representation"], val,
                                   tol["dual_representation"]))
    tr = trace_checks()
    for key in ("gue", "lue", "discrete"):
        results.append(CheckResult(f"trace_{key}", tr[key] < tol["trace"], tr[key], tol["trace"],
                                   {"tail_bound": tr["discrete_tail_bound"]} if key == "discrete" else {}))
    ks = kernel_sum_vs_contour(pairs=4 if quick else 10)
    for key, val in ks.items():
        results.append(CheckResult(f"kernel_sum_vs_contour_{key}", val < tol["kernel_sum_vs_contour"],
                                   val, tol["kernel_sum_vs_contour"]))
    return results


# ---------------------------------------------------------------------------
# finite-weight oracle
# ---------------------------------------------------------------------------

def draw_eynard_spec(gen: np.random.Generator, upper: bool, complex_weights: bool = False):
    levels = int(gen.integers(2 if upper else 1, 4))
    sizes = [int(gen.integers(n, 5)) for n in range(1, levels + 1)]
    copies = [int(gen.integers(0, 2)) for _ in range(levels)]
    return ey.random_spec(gen, levels, sizes, copies, complex_weights=complex_weights,
                          upper_triangular=upper)


def random_points(gen: np.random.Generator, spec, count: int) -> list:
    sites = [ey.LevelTimePoint(n, a, float(x)) for n, a in spec.positions()
             for x in spec.sets[n - 1]]
    pick = gen.choice(len(sites), size=min(count, len(sites)), replace=False)
    return [sites[i] for i in sorted(pick)]


def eynard_suite(trials: int = 50, seed: int = 0, n_upper: int = 5,
                 points_per_spec: int = 6, tolerance: float = DEFAULT_TOLERANCES["eynard"],
                 condition_screen: float = EYNARD_CONDITION_SCREEN) -> list:
    """Kernel determinants against brute-force enumeration on random weight specs.

    The first ``n_upper`` specs have upper-triangular ``M``; for them the
    simplified biorthogonal kernel is also compared with the general one.
    Each spec is tested on ``points_per_spec`` random point sets of sizes 1 to 3.
    """
    worst = worst_tri = 0.0
    redraws = 0
    conditions = []
    for i in range(trials):
        upper = i < n_upper
        attempt = 0
        while True:
            gen = RngStream(seed, (i << 16) + attempt).generator()
            spec = draw_eynard_spec(gen, upper)
            try:
                data = ey.prepare(spec)
            except ey.IllConditionedError:
                data = None
            if data is not None and data.condition <= condition_screen:
                break
            attempt += 1
            redraws += 1
        conditions.append(data.condition)
        for _ in range(points_per_spec):
            pts = random_points(gen, spec, int(gen.integers(1, 4)))
            direct = ey.brute_force_correlations(spec, pts)
            via_kernel = ey.determinantal_correlation(spec, pts, data)
            worst = max(worst, abs(direct - via_kernel))
        if upper:
            if not ey.is_upper_triangular(data.M):
                raise AssertionError("upper-triangular construction failed")
            for a in random_points(gen, spec, 4):
                for b in random_points(gen, spec, 4):
                    diff = abs(ey.correlation_kernel_triangular(spec, a, b, data)
                               - ey.correlation_kernel(spec, a, b, data))
                    worst_tri = max(worst_tri, diff)
    details = {"trials": trials, "upper_triangular_specs": n_upper, "redraws": redraws,
               "max_condition": max(conditions), "condition_screen": condition_screen}
    return [CheckResult("eynard_bruteforce", worst < tolerance, worst, tolerance, details),
            CheckResult("eynard_triangular_form", worst_tri < tolerance, worst_tri, tolerance,
                        {"specs": n_upper})]


# ---------------------------------------------------------------------------
# HCIZ
# ---------------------------------------------------------------------------

def vandermonde(a) -> float:
    """``prod_{i<j} (a_j - a_i)``."""
    a = np.asarray(a, dtype=float)
    return float(np.prod([a[j] - a[i] for i in range(a.size) for j in range(i + 1, a.size)]))


def _check_distinct(a, name):
    if a.size > 1 and abs(vandermonde(np.sort(a))) < 1e-8:
        raise ValueError(f"entries of {name} are (nearly) degenerate")


def hciz_closed(a, b) -> float:
    """``prod_{p<N} p! det(e^{a_i b_j}) / (Delta(a) Delta(b))``."""
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    N = a.size
    _check_distinct(a, "a")
    _check_distinct(b, "b")
    const = math.prod(math.factorial(p) for p in range(1, N))
    return const * float(np.linalg.det(np.exp(np.outer(a, b)))) / (vandermonde(a) * vandermonde(b))


def hciz_rect_constant(N1: int, N2: int) -> float:
    """``prod_{j<N2} j! (N1 - N2 + j)!``.

    This equals ``prod_{p=1}^{N2-1} p! prod_{q=1}^{N1-1} q! / prod_{r=1}^{N1-N2-1} r!``
    when empty products are 1, at every ``N1 >= N2``.
    """
    nu = N1 - N2
    return float(math.prod(math.factorial(j) * math.factorial(nu + j) for j in range(N2)))


def hciz_rect_closed(N1: int, N2: int, a, b) -> float:
    """Rectangular formula with modified Bessel functions of order ``N1 - N2``."""
    if N1 < N2:
        raise ValueError("need N1 >= N2")
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    if a.size != N2 or b.size != N2 or np.any(a <= 0) or np.any(b <= 0):
        raise ValueError("a and b need N2 positive entries")
    _check_distinct(a, "a")
    _check_distinct(b, "b")
    nu = N1 - N2
    mat = np.array([[bessel_i(nu, 2.0 * math.sqrt(ai * bj)) for bj in b] for ai in a])
    denom = vandermonde(a) * vandermonde(b) * float(np.prod((a * b) ** (nu / 2.0)))
    return hciz_rect_constant(N1, N2) * float(np.linalg.det(mat)) / denom


def _chunked_mean(sample_fn, n_samples: int, seed: int, chunk: int = MC_CHUNK):
    total = total_sq = 0.0
    done = 0
    i = 0
    while done < n_samples:
        size = min(chunk, n_samples - done)
        vals = sample_fn(RngStream(seed, i), size)
        total += float(np.sum(vals))
        total_sq += float(np.sum(vals * vals))
        done += size
        i += 1
    mean = total / n_samples
    var = max(total_sq / n_samples - mean * mean, 0.0) * n_samples / max(n_samples - 1, 1)
    return mean, math.sqrt(var / n_samples)


def hciz_check(N: int, a, b, n_samples: int = 1_000_000, seed: int = 0) -> CorrelationEstimate:
    """Haar average of ``exp Tr(A U B U*)`` against the closed form.

    ``Tr(A U B U*) = sum_ij a_i b_j |U_ij|^2`` for diagonal ``A`` and ``B``.
    """
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    if a.size != N or b.size != N:
        raise ValueError("a and b need N entries")
    predicted = hciz_closed(a, b)
    weights = np.outer(a, b)

    def draw(stream, size):
        u = haar_unitary(N, stream, size=size)
        return np.exp(np.einsum("ij,sij->s", weights, np.abs(u) ** 2))

    mean, se = _chunked_mean(draw, n_samples, seed)
    return CorrelationEstimate(f"hciz N={N}", mean, se, n_samples, predicted)


def hciz_rect_check(N1: int, N2: int, a, b, n_samples: int = 1_000_000,
                    seed: int = 0) -> CorrelationEstimate:
    """Double Haar average of ``exp Tr(A U B V* + B* U* A* V)`` against the Bessel formula.

    ``A = [diag(sqrt a); 0]`` is ``N1 x N2`` and ``B = [diag(sqrt b), 0]`` is
    ``N2 x N1``.  The exponent is ``2 Re sum_{i,j<=N2} sqrt(a_i b_j) U_ij conj(V_ij)``.
    """
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    predicted = hciz_rect_closed(N1, N2, a, b)
    coeff = np.sqrt(np.outer(a, b))

    def draw(stream, size):
        gen = stream.generator()
        u = haar_unitary(N2, gen, size=size)
        v = haar_unitary(N1, gen, size=size)[:, :N2, :N2]
        return np.exp(2.0 * np.einsum("ij,sij->s", coeff, u * np.conj(v)).real)

    mean, se = _chunked_mean(draw, n_samples, seed)
    return CorrelationEstimate(f"hciz_rect N1={N1} N2={N2}", mean, se, n_samples, predicted)


HCIZ_CASES = {
    "square": [(2, (0.3, 0.9), (0.2, 0.7)), (3, (0.1, 0.5, 0.9), (0.2, 0.4, 0.8))],
    "rect": [(1, 1, (0.6,), (0.8,)), (2, 1, (0.7,), (0.9,)), (2, 2, (0.3, 0.8), (0.4, 0.9)),
             (3, 2, (0.3, 0.8), (0.4, 0.9))],
}


def hciz_suite(n_samples: int = 1_000_000, seed: int = 0, z_max: float = 4.0) -> list:
    results = []
    for i, (N, a, b) in enumerate(HCIZ_CASES["square"]):
        est = hciz_check(N, a, b, n_samples, seed + i)
        results.append(CheckResult(est.descriptor, abs(est.z) < z_max, est.z, z_max, est.to_dict()))
    for i, (N1, N2, a, b) in enumerate(HCIZ_CASES["rect"]):
        est = hciz_rect_check(N1, N2, a, b, n_samples, seed + 100 + i)
        results.append(CheckResult(est.descriptor, abs(est.z) < z_max, est.z, z_max, est.to_dict()))
    return results


# ---------------------------------------------------------------------------
# Monte Carlo against the kernels
# ---------------------------------------------------------------------------

def _chunks(n_samples: int, chunk: int = MC_CHUNK):
    i = done = 0
    while done < n_samples:
        size = min(chunk, n_samples - done)
        yield i, size
        done += size
        i += 1


def sample_gue_minors(N: int, times: Sequence[float], n_samples: int, seed: int) -> dict:
    """Minor eigenvalues ``{(n, j): (S, n)}`` at each time index ``j``."""
    out = {}
    for i, size in _chunks(n_samples):
        h = sample_hermitian_paths(N, times, size, RngStream(seed, i))
        for j in range(len(times)):
            minors = minor_eigenvalues(h[:, j], range(1, N + 1))
            if interlacing_violations(minors):
                raise AssertionError("eigenvalue interlacing violated")
            for n, lam in minors.items():
                out.setdefault((n, j), []).append(lam)
    return {k: np.concatenate(v) for k, v in out.items()}


def sample_lue_minors(p: int, N: int, times: Sequence[float], n_samples: int, seed: int) -> dict:
    """Eigenvalues of the leading minors of ``A* A`` (``A`` is ``p x N``) at each time."""
    out = {}
    for i, size in _chunks(n_samples):
        a = sample_wishart_matrices(p, N, times, RngStream(seed, i), n_paths=size)
        for j in range(len(times)):
            h = gram(a[:, j])
            for n in range(1, N + 1):
                out.setdefault((n, j), []).append(np.maximum(hermitian_eigenvalues(h[:, :n, :n]), 0.0))
    return {k: np.concatenate(v) for k, v in out.items()}


def density_check(points: np.ndarray, edges: np.ndarray, diag: Callable, label: str,
                  z_max: float = 3.0) -> CheckResult:
    predicted = bin_masses(diag, edges)
    ests = count_estimates(points, edges, predicted, label)
    worst = max(abs(e.z) for e in ests)
    return CheckResult(label, worst < z_max, worst, z_max,
                       {"bins": [e.to_dict() for e in ests]})


def gue_montecarlo(n_samples: int = 100_000, seed: int = 1, t: float = 1.0, level: int = 2,
                   z_max: float = 3.0) -> list:
    """Level density of the 3 x 3 minors and two space-like cell pairs at ``t``."""
    lam = sample_gue_minors(3, [t], n_samples, seed)
    edges = np.linspace(-3.0, 3.0, 25) * math.sqrt(t)
    results = [density_check(lam[(level, 0)], edges, lambda x: gue_kernel_diag(x, level, t),
                             f"gue_density_n{level}", z_max)]
    pairs = [((1, (-0.5, 0.0)), (2, (0.5, 1.0))),
             ((2, (-1.0, -0.5)), (2, (0.25, 0.75)))]
    for (n1, ca), (n2, cb) in pairs:
        pred = integrate_pair_density(
            lambda x: gue_kernel_diag(x, n1, t),
            lambda x, y: gue_kernel_grid(x, n1, t, y, n2, t, method="sum"),
            lambda y, x: gue_kernel_grid(y, n2, t, x, n1, t, method="sum"),
            lambda y: gue_kernel_diag(y, n2, t), ca, cb)
        est = empirical_pair_correlation(lam[(n1, 0)], lam[(n2, 0)], ca, cb,
                                         same_process=(n1 == n2), predicted=pred)
        results.append(CheckResult(f"gue_pair_n{n1}{ca}_n{n2}{cb}", abs(est.z) < z_max, est.z,
                                   z_max, est.to_dict()))
    return results


def lue_montecarlo(n_samples: int = 100_000, seed: int = 2, p: int = 2, t: float = 1.0,
                   z_max: float = 3.0) -> list:
    """Level-1 density for ``p = 2`` plus a cross-level pair read both ways.

    The pair ``(level 1, level 2)`` at a common time depends on which
    position enters the double-integral numerator.  Both readings are
    reported.  Only the ``x1`` one is expected to pass.
    """
    lam = sample_lue_minors(p, 2, [t], n_samples, seed)
    edges = np.concatenate([np.linspace(0.0, 4.0, 17), [5.0, 6.0, 8.0]]) * t
    results = [density_check(lam[(1, 0)], edges, lambda x: lue_kernel_diag(x, 1, t, p),
                             "lue_density_n1", z_max)]
    ca, cb = (0.5, 1.0), (1.5, 2.5)
    for numerator in ("x1", "x2"):
        pred = integrate_pair_density(
            lambda x: lue_kernel_diag(x, 1, t, p),
            lambda x, y: lue_kernel_grid(x, 1, t, y, 2, t, p, numerator=numerator),
            lambda y, x: lue_kernel_grid(y, 2, t, x, 1, t, p, numerator=numerator),
            lambda y: lue_kernel_diag(y, 2, t, p), ca, cb)
        est = empirical_pair_correlation(lam[(1, 0)], lam[(2, 0)], ca, cb, predicted=pred)
        name = f"lue_pair_numerator_{numerator}"
        passed = abs(est.z) < z_max
        if numerator == "x2":
            # the misprinted reading is expected to be rejected
            name += "_rejected"
            passed = not passed
        results.append(CheckResult(name, passed, est.z, z_max, est.to_dict()))
    return results


def particle_montecarlo(n_replicas: int = 100_000, seed: int = 3, n_levels: int = 3,
                        t: float = 1.0, z_max: float = 3.0, workers: int = 1) -> list:
    """Occupation probabilities against the discrete kernel and the Poisson law on level 1."""
    samples = pt.simulate(n_levels, [t], n_replicas, seed, workers=workers)[:, 0]
    results = []
    R = samples.shape[0]
    for n in range(1, n_levels + 1):
        xs = np.arange(-n, 5)
        pred = discrete_kernel_diag(xs, n, t)
        worst, details = 0.0, []
        for x, p in zip(xs, pred):
            est = float(pt.occupation(samples, n_levels, n, int(x)).mean())
            se = math.sqrt(max(p * (1 - p), 1.0 / R) / R)
            z = (est - p) / se
            worst = max(worst, abs(z))
            details.append({"x": int(x), "estimate": est, "predicted": float(p), "z": z})
        results.append(CheckResult(f"particles_occupation_n{n}", bool(worst < z_max), worst, z_max,
                                   {"sites": details}))
    jumps = samples[:, pt.flat_index(1, 1)] + 1
    worst, details = 0.0, []
    for j in range(0, 8):
        p = float(poisson.pmf(j, t))
        est = float(np.mean(jumps == j))
        z = (est - p) / math.sqrt(max(p * (1 - p), 1.0 / R) / R)
        worst = max(worst, abs(z))
        details.append({"jumps": j, "estimate": est, "predicted": p, "z": z})
    results.append(CheckResult("particles_level1_poisson", worst < z_max, worst, z_max,
                               {"counts": details}))
    return results


def diffusion_smoke(n_replicas: int = 20_000, seed: int = 4, t: float = 400.0, tau: float = 1.0,
                    z_max: float = 3.0, bias_coefficient: float = 2.0, workers: int = 1) -> list:
    """Rescaled level-1 and level-2 densities at large ``t`` against the scaled kernel.

    A bin passes when ``|estimate - predicted| <= z_max * stderr + bias``.
    The bias allowance is ``bias_coefficient * t^{-1/2} * sqrt(predicted)``
    per bin, for the ``O(t^{-1/2})`` finite-time corrections.  This
    criterion is soft: it is reported, and callers may choose not to gate
    on it.
    """
    obs = 0.5 * tau * t
    samples = pt.simulate(2, [obs], n_replicas, seed, workers=workers)[:, 0]
    results = []
    # bins aligned with the lattice: 4 sites per bin, edges between sites
    step = 1.0 / math.sqrt(t)
    edges = (np.arange(-40, 41, 4) - 0.5 - (obs % 1.0)) * step
    bias_scale = bias_coefficient / math.sqrt(t)
    for n in (1, 2):
        start = pt.flat_index(n, 1)
        xi = pt.diffusion_rescale(samples[:, start:start + n], t, tau)

        def diag(x, n=n):
            return np.array([kernel_diffusion_scaled(SpaceTimePoint(v, n, tau), SpaceTimePoint(v, n, tau))
                             for v in np.ravel(x)])

        predicted = bin_masses(diag, edges)
        ests = count_estimates(xi, edges, predicted, f"diffusion_n{n}")
        worst = 0.0
        ok = True
        for e in ests:
            allowance = z_max * e.stderr + bias_scale * math.sqrt(max(e.predicted, 0.0))
            ok &= abs(e.estimate - e.predicted) <= allowance
            worst = max(worst, abs(e.z))
        results.append(CheckResult(f"diffusion_smoke_n{n}", ok, worst, z_max,
                                   {"soft": True, "bias_allowance_coefficient": bias_coefficient,
                                    "bins": [e.to_dict() for e in ests]}))
    return results


def montecarlo_suite(scale: float = 1.0, seed: int = 0, workers: int = 1,
                     z_max: float = DEFAULT_TOLERANCES["z"]) -> list:
    """GUE, LUE and particle comparisons plus the soft diffusion check.

    ``scale`` multiplies every sample count (``1.0`` gives the full sizes).
    """
    n = max(1000, int(100_000 * scale))
    out = []
    out += gue_montecarlo(n, seed + 1, z_max=z_max)
    out += lue_montecarlo(n, seed + 2, z_max=z_max)
    out += particle_montecarlo(n, seed + 3, z_max=z_max, workers=workers)
    out += diffusion_smoke(max(1000, int(20_000 * scale)), seed + 4, z_max=z_max, workers=workers)
    return out
