"""Correlation kernel of the interlaced particle dynamics (TASEP with step start).

The kernel is a sum of a single circle integral (present only for space-like
ordered pairs) and a double circle integral.  The inner contour of the
double integral has to enclose both 0 and the outer variable ``z``; it is
realized as a circle ``|w| = r`` around 0 plus the explicit residue at
``w = z``.

Away from the origin the circle sums cancel badly (the integrands on
``|w| <= 1/2`` and ``|z - 1| = 0.4`` are of size ``2.8^x`` while the kernel
decays like ``1/x!``), so the default route evaluates every residue exactly:
each one is a polynomial in the times with rational coefficients, times a
single exponential.  The circle quadrature is kept as an independent check.
"""
from __future__ import annotations

import math
from fractions import Fraction

import numpy as np
from numpy.typing import ArrayLike

from .. import contour as ct
from .common import KernelValue, SpaceTimePoint, precedes_nt, real_part_checked

# Γ_{0,1}, Γ_1 and the largest admissible |w| for Γ_{0,z}
OUTER_CENTER, OUTER_RADIUS = 0.5, 1.2
Z_CENTER, Z_RADIUS = 1.0, 0.4
W_RADIUS_MAX = 0.5
DISCRETE_NODES = 256


def kernel_discrete(a: SpaceTimePoint, b: SpaceTimePoint) -> float:
    """``K(a, b)`` for integer positions; the diagonal is an occupation probability."""
    for pt in (a, b):
        if int(pt.x) != pt.x:
            raise ValueError(f"positions must be integers, got {pt.x}")
    return float(discrete_kernel_grid(a.x, a.n, a.t, b.x, b.n, b.t)[0, 0])


def kernel_discrete_value(a: SpaceTimePoint, b: SpaceTimePoint) -> KernelValue:
    """Same as :func:`kernel_discrete` with a node-doubling error estimate."""
    coarse = discrete_kernel_grid(a.x, a.n, a.t, b.x, b.n, b.t)[0, 0]
    fine = discrete_kernel_grid(a.x, a.n, a.t, b.x, b.n, b.t, nodes=2 * DISCRETE_NODES)[0, 0]
    return KernelValue(float(fine), float(abs(fine - coarse)))


def discrete_kernel_grid(x1: ArrayLike, n1: int, t1: float, x2: ArrayLike, n2: int, t2: float,
                         nodes: int = DISCRETE_NODES, method: str = "residue") -> np.ndarray:
    """Kernel on the integer grid ``x1 × x2``; shape ``(len(x1), len(x2))``.

    Args:
        method: ``"residue"`` (exact residue calculus) or ``"contour"``
            (circle quadrature with ``nodes`` points per circle).
    """
    if t1 < 0 or t2 < 0:
        raise ValueError("times must be >= 0")
    x1 = np.atleast_1d(np.asarray(x1, dtype=np.int64))
    x2 = np.atleast_1d(np.asarray(x2, dtype=np.int64))
    if method == "residue":
        return _residue_kernel(x1, n1, t1, x2, n2, t2)
    if method != "contour":
        raise ValueError(f"unknown method {method!r}")
    value = _double_integral(x1, n1, t1, x2, n2, t2, nodes)
    if precedes_nt(n1, t1, n2, t2):
        value = value - _single_integral(x1[:, None] - x2[None, :], n1 - n2, t1 - t2, nodes)
    return value


def discrete_kernel_diag(x: ArrayLike, n: int, t: float, method: str = "residue") -> np.ndarray:
    """Occupation probabilities ``P(some particle of level n sits at x)``."""
    x = np.atleast_1d(np.asarray(x, dtype=np.int64))
    if method == "residue":
        return np.array([_residue_kernel(x[i:i + 1], n, t, x[i:i + 1], n, t)[0, 0]
                         for i in range(x.size)])
    out = np.empty(x.shape)
    for i, xi in enumerate(x):
        out[i] = _double_integral(np.array([xi]), n, t, np.array([xi]), n, t, DISCRETE_NODES)[0, 0]
    return out


def _single_integral(dx: np.ndarray, dn: int, dt: float, nodes: int) -> np.ndarray:
    # (1/2πi) ∮_{Γ_{0,1}} (1-w)^{dn} e^{dt w} / w^{dx+dn+1} dw
    circle = ct.CircleContour(OUTER_CENTER, OUTER_RADIUS, nodes)
    w, wt = circle.nodes()
    base = (1.0 - w) ** dn * np.exp(dt * w) * wt
    powers = (dx + dn + 1)[..., None]
    vals = np.sum(base / w ** powers, axis=-1)
    return real_part_checked(vals, np.abs(vals))


def _w_radius(x1: np.ndarray, n1: int, t1: float) -> float:
    # saddle point of e^{t w} / w^N sits at |w| = N / t
    order = float(np.max(x1)) + n1 + 1
    if t1 <= 0 or order <= 0:
        return W_RADIUS_MAX
    return float(np.clip(order / t1, 0.05, W_RADIUS_MAX))


def _double_integral(x1, n1, t1, x2, n2, t2, nodes):
    zc = ct.CircleContour(Z_CENTER, Z_RADIUS, nodes)
    wc = ct.CircleContour(0.0, _w_radius(x1, n1, t1), nodes)
    z, wz = zc.nodes()
    w, ww = wc.nodes()
    if np.min(np.abs(z)) <= wc.radius:
        raise ct.ContourSeparationError("the z contour must stay outside |w| = r")

    def h(v):
        return np.exp(t1 * v) * (1.0 - v) ** n1 / v ** (x1[:, None] + n1 + 1)

    g = z ** (x2[:, None] + n2) / (np.exp(t2 * z) * (1.0 - z) ** n2) * wz
    circle_part = (h(w) * ww) @ ct.cauchy_matrix(z, w).T @ g.T
    residue_part = h(z) @ g.T
    raw = circle_part + residue_part
    return real_part_checked(raw, np.abs(raw))


def _residue_kernel(x1, n1, t1, x2, n2, t2):
    """Exact evaluation of both kernel terms by residues.

    Circle part: expanding ``1/(w - z) = -Σ_k w^k / z^{k+1}`` (valid for
    ``|w| < |z|``) gives ``-Σ_k a_k(x1) b_k(x2)`` with ``a_k`` a Taylor
    coefficient of ``e^{t1 w}(1-w)^{n1}`` and ``b_k`` a residue at ``z = 1``.
    The sum is finite because ``a_k = 0`` for ``k > x1 + n1``.
    """
    ft1, ft2 = Fraction(t1), Fraction(t2)
    dt = ft1 - ft2
    out = np.empty((x1.size, x2.size))
    kmax = max(int(np.max(x1)) + n1, -1)
    a = [_taylor_exp_times_binom(ft1, n1, int(xi) + n1, kmax) for xi in x1]
    b = [[_residue_at_one(int(xj) + n2 - k - 1, -ft2, n2) for k in range(kmax + 1)] for xj in x2]
    exp_t2, exp_dt = math.exp(-t2), math.exp(float(dt))
    spacelike = precedes_nt(n1, t1, n2, t2)
    for i, xi in enumerate(x1):
        for j, xj in enumerate(x2):
            circle = -sum(ak * bk for ak, bk in zip(a[i], b[j]))
            val = float(circle) * exp_t2
            if n1 < n2:
                # residue at w = z, integrated over z around 1
                shift = int(xj) + n2 - int(xi) - n1 - 1
                val += float(_residue_at_one(shift, dt, n2 - n1)) * exp_dt
            if spacelike:
                val -= _single_residues(int(xi) - int(xj), n1 - n2, dt)
            out[i, j] = val
    return out


def _taylor_exp_times_binom(t: Fraction, n: int, top: int, kmax: int) -> list:
    # a_k = [w^{top-k}] e^{t w} (1-w)^n for k = 0..kmax
    out = []
    for k in range(kmax + 1):
        deg = top - k
        if deg < 0:
            out.append(Fraction(0))
            continue
        out.append(sum(Fraction(math.comb(n, j) * (-1) ** j) * t ** (deg - j) / math.factorial(deg - j)
                       for j in range(min(n, deg) + 1)))
    return out


def _residue_at_one(q: int, c: Fraction, m: int) -> Fraction:
    """Rational part ``R`` of ``Res_{z=1} z^q e^{c z} (1-z)^{-m} = R e^{c}``."""
    if m <= 0:
        return Fraction(0)
    total = Fraction(0)
    falling = Fraction(1)
    for i in range(m):
        total += falling / math.factorial(i) * c ** (m - 1 - i) / math.factorial(m - 1 - i)
        falling *= q - i
    return (-1) ** m * total


def _single_residues(dx: int, dn: int, dt: Fraction) -> float:
    # (1/2πi) ∮_{Γ_{0,1}} (1-w)^{dn} e^{dt w} / w^{dx+dn+1} dw with dn <= 0
    m = -dn
    order = dx + dn + 1
    total = Fraction(0)
    if order > 0:
        deg = order - 1
        total += sum(Fraction(_neg_binom(m, j)) * dt ** (deg - j) / math.factorial(deg - j)
                     for j in range(deg + 1))
    at_one = float(_residue_at_one(-order, dt, m)) if m > 0 else 0.0
    return float(total) + at_one * math.exp(float(dt))


def _neg_binom(m: int, j: int) -> int:
    # coefficient of w^j in (1-w)^{-m}
    if m == 0:
        return 1 if j == 0 else 0
    return math.comb(m + j - 1, j)
