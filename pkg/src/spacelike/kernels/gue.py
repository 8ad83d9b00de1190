"""Building blocks and correlation kernels for Hermitian Brownian minors.

Conventions follow the Brownian matrix whose time-``t`` law is
``exp(-Tr H^2 / t)``.  The functions

    Psi^{n,t}_k(x) = 2^{k+1} t^{-(k+1)/2} (1/2πi) ∫_{iR+ε} e^{w^2 - 2wx/√t} w^k dw
    Phi^{n,t}_l(x) = t^{l/2} / (2^l l!) p_l(x/√t)

are biorthogonal on the real line for ``0 <= k, l < n``; ``Psi`` does not
depend on ``n`` but the argument is kept so call sites read like the formulas.
Negative ``k`` gives iterated tail integrals of the Gaussian.
"""
from __future__ import annotations

import math

import numpy as np
from numpy.typing import ArrayLike
from scipy import special

from .. import contour as ct
from ..specfun import hermite
from .common import KernelValue, SpaceTimePoint, precedes_nt, real_part_checked

SQRT_PI = math.sqrt(math.pi)


def iterated_erfc(order: int, z: ArrayLike) -> np.ndarray:
    """``i^order erfc(z)``: ``i^{-1}erfc = 2/√π e^{-z²}``, ``i^0 erfc = erfc``.

    Forward recurrence ``2n i^n = i^{n-2} - 2z i^{n-1}``.  Absolute accuracy is
    ~1e-15 for moderate ``|z|``, which is what every caller needs.
    """
    z = np.asarray(z, dtype=float)
    prev = 2.0 / SQRT_PI * np.exp(-z * z)
    if order == -1:
        return prev
    cur = special.erfc(z)
    for n in range(1, order + 1):
        prev, cur = cur, (prev - 2.0 * z * cur) / (2.0 * n)
    return cur


def psi_gue(n: int, t: float, k: int, x: ArrayLike, *, method: str = "closed",
            epsilon: float = ct.DEFAULT_EPSILON):
    """``Psi^{n,t}_k(x)``.

    ``method="closed"``: Hermite form for ``k >= 0``, iterated erfc for ``k < 0``.
    ``method="contour"``: the vertical-line integral itself.
    """
    if not t > 0:
        raise ValueError("psi_gue needs t > 0")
    x = np.asarray(x, dtype=float)
    if method == "contour":
        return _scalar(_psi_gue_contour(t, k, x, epsilon))
    if method != "closed":
        raise ValueError(f"unknown method {method!r}")
    u = x / math.sqrt(t)
    if k >= 0:
        out = t ** (-k / 2) * hermite(k, u) * np.exp(-u * u) / math.sqrt(math.pi * t)
    else:
        m = -k
        out = 0.5 * t ** ((m - 1) / 2) * iterated_erfc(m - 1, u)
    return _scalar(np.asarray(out))


def _psi_gue_contour(t, k, x, epsilon):
    line = ct.VerticalLineContour(epsilon, ct.vline_half_length(1.0, epsilon, max(k, 0)))
    s = 1.0 / math.sqrt(t)
    xs = x.reshape(-1, 1)

    def f(w):
        return np.exp(w * w - 2.0 * w * s * xs) * w ** k

    vals = ct.integrate_batch(f, line) * 2.0 ** (k + 1) * s ** (k + 1)
    return real_part_checked(vals, np.abs(vals)).reshape(x.shape)


def phi_gue(n: int, t: float, l: int, x: ArrayLike, *, method: str = "closed"):
    """``Phi^{n,t}_l(x) = t^{l/2} p_l(x/√t) / (2^l l!)``.

    ``method="contour"`` evaluates ``(t^{l/2}/2^l) (1/2πi)∮ e^{-z²+2zx/√t} z^{-l-1} dz``.
    """
    if not t > 0:
        raise ValueError("phi_gue needs t > 0")
    if l < 0:
        raise ValueError("phi_gue degree must be >= 0")
    x = np.asarray(x, dtype=float)
    pref = t ** (l / 2) / 2.0 ** l
    if method == "closed":
        return _scalar(pref * hermite(l, x / math.sqrt(t)) / math.factorial(l))
    circle = ct.CircleContour(0.0, 1.0, max(64, 4 * (l + 8)))
    s = 1.0 / math.sqrt(t)
    xs = x.reshape(-1, 1)
    vals = ct.integrate_batch(lambda z: np.exp(-z * z + 2.0 * z * s * xs) / z ** (l + 1), circle)
    return _scalar(pref * real_part_checked(vals, np.abs(vals)).reshape(x.shape))


def heat_kernel(t: float, s: float, x: ArrayLike, y: ArrayLike):
    """Gaussian transition ``exp(-(x-y)^2/(t-s)) / sqrt(π(t-s))``."""
    if not t > s:
        raise ValueError(f"heat_kernel needs t > s, got t={t}, s={s}")
    d = t - s
    diff = np.asarray(x, dtype=float) - np.asarray(y, dtype=float)
    return _scalar(np.exp(-diff * diff / d) / math.sqrt(math.pi * d))


def step_convolution_power(m: int, x: ArrayLike, y: ArrayLike):
    """``phi^{*m}(x, y) = (y-x)^{m-1}/(m-1)! 1[x <= y]`` for the GUE step kernel."""
    d = np.asarray(y, dtype=float) - np.asarray(x, dtype=float)
    return np.where(d >= 0, d ** (m - 1) / math.factorial(m - 1), 0.0)


def phi_spacelike_gue(a: SpaceTimePoint, b: SpaceTimePoint, *, method: str = "contour",
                      epsilon: float = ct.DEFAULT_EPSILON) -> float:
    """Transition from ``a`` to ``b`` along a space-like path (0 unless a ≺ b).

    This is the plain transition density: the step kernel when ``t_a = t_b``
    and ``n_b = n_a + 1``, the heat kernel when ``n_a = n_b``.  The kernel
    multiplies it by the gauge factor ``2^{n_b - n_a}``.
    """
    return float(_phi_spacelike_gue(a.x, a.n, a.t, b.x, b.n, b.t, method, epsilon))


def _phi_spacelike_gue(x1, n1, t1, x2, n2, t2, method="contour", epsilon=ct.DEFAULT_EPSILON):
    x1 = np.asarray(x1, dtype=float)
    x2 = np.asarray(x2, dtype=float)
    shape = np.broadcast(x1, x2).shape
    if not precedes_nt(n1, t1, n2, t2):
        return np.zeros(shape)
    m = n2 - n1
    dt = t1 - t2
    dx = np.broadcast_to(x1 - x2, shape)
    if dt == 0:
        return step_convolution_power(m, x1, x2) * np.ones(shape)
    if method == "closed":
        return psi_gue(1, dt, -m, dx) * np.ones(shape)
    half = ct.vline_half_length(dt, epsilon)
    # the pole of w^{-m} sits a distance epsilon from the line; panels of
    # width epsilon/2 resolve it
    panels = int(math.ceil(4.0 * half / epsilon))
    line = ct.VerticalLineContour(epsilon, half, max(ct.DEFAULT_LINE_NODES, 10 * panels))
    dxs = dx.reshape(-1, 1)
    vals = ct.integrate_batch(lambda w: np.exp(dt * w * w - 2.0 * w * dxs) / w ** m, line)
    vals = real_part_checked(vals, np.abs(vals)) * 2.0 ** (n1 - n2 + 1)
    return vals.reshape(shape)


def _sum_term_gue(x1, n1, t1, x2, n2, t2):
    # sum_{k=1}^{n2} Psi^{n1,t1}_{n1-k}(x1) Phi^{n2,t2}_{n2-k}(x2), on the grid x1 (rows) x x2 (cols)
    x1 = np.atleast_1d(np.asarray(x1, dtype=float))
    x2 = np.atleast_1d(np.asarray(x2, dtype=float))
    psi = np.stack([np.atleast_1d(psi_gue(n1, t1, n1 - k, x1)) for k in range(1, n2 + 1)])
    phi = np.stack([np.atleast_1d(phi_gue(n2, t2, n2 - k, x2)) for k in range(1, n2 + 1)])
    return psi.T @ phi


def _double_integral_gue(x1, n1, t1, x2, n2, t2, epsilon, circle_nodes, line_nodes):
    """``(2/(2πi)^2) ∮_{|z|=ε/2} dz ∫_{iR+ε} dw e^{t1 w² - 2x1 w} / e^{t2 z² - 2x2 z} w^n1/z^n2 /(w-z)``.

    Returns the full ``len(x1) x len(x2)`` grid.
    """
    circle = ct.CircleContour(0.0, epsilon / 2.0, circle_nodes)
    line = _resolved_line(t1, n1, epsilon, line_nodes)
    ct.check_separated(circle, line.real_part)
    z, wz = circle.nodes()
    w, ww = line.nodes()
    x1 = np.atleast_1d(np.asarray(x1, dtype=float))[:, None]
    x2 = np.atleast_1d(np.asarray(x2, dtype=float))[:, None]
    g = np.exp(t1 * w * w - 2.0 * x1 * w) * w ** n1 * ww
    h = np.exp(-t2 * z * z + 2.0 * x2 * z) / z ** n2 * wz
    ct._check_finite(g, w)
    ct._check_finite(h, z)
    cm = ct.cauchy_matrix(z, w)
    return 2.0 * (g @ cm.T) @ h.T


def _resolved_line(t, n, epsilon, line_nodes):
    # the circle |z| = epsilon/2 sits epsilon/2 from the line, so the Cauchy
    # factor 1/(w - z) needs panels no wider than epsilon/2; line_nodes is a floor
    half = ct.vline_half_length(t, epsilon, n + 1)
    panels = int(math.ceil(4.0 * half / epsilon))
    return ct.VerticalLineContour(epsilon, half, max(line_nodes, 10 * panels))


def gue_kernel_grid(x1: ArrayLike, n1: int, t1: float, x2: ArrayLike, n2: int, t2: float, *,
                    method: str = "contour", epsilon: float = ct.DEFAULT_EPSILON,
                    circle_nodes: int = ct.DEFAULT_CIRCLE_NODES,
                    line_nodes: int = ct.DEFAULT_LINE_NODES,
                    with_error: bool = False):
    """Extended GUE kernel on the grid ``x1 x x2`` (rows x columns).

    ``method="contour"`` integrates the double contour integral;
    ``method="sum"`` uses the finite Hermite sum for the same term.
    """
    if not (t1 > 0 and t2 > 0):
        raise ValueError("the extended GUE kernel needs positive times")
    x1 = np.atleast_1d(np.asarray(x1, dtype=float))
    x2 = np.atleast_1d(np.asarray(x2, dtype=float))
    err = np.zeros((x1.size, x2.size))
    if method == "contour":
        raw = _double_integral_gue(x1, n1, t1, x2, n2, t2, epsilon, circle_nodes, line_nodes)
        second = real_part_checked(raw, np.abs(raw))
        if with_error:
            fine = _double_integral_gue(x1, n1, t1, x2, n2, t2, epsilon,
                                        2 * circle_nodes, 2 * line_nodes)
            err = np.abs(fine - raw) + np.abs(raw.imag)
    elif method == "sum":
        second = 2.0 ** (n2 - n1) * _sum_term_gue(x1, n1, t1, x2, n2, t2)
    else:
        raise ValueError(f"unknown method {method!r}")
    first = np.zeros_like(second)
    if precedes_nt(n1, t1, n2, t2):
        first = -(2.0 ** (n2 - n1)) * _phi_spacelike_gue(
            x1[:, None], n1, t1, x2[None, :], n2, t2,
            "contour" if method == "contour" else "closed", epsilon)
    value = first + second
    return (value, err) if with_error else value


def gue_kernel_diag(x: ArrayLike, n: int, t: float, **kw) -> np.ndarray:
    """``K(κ, κ)`` for ``κ = (x, n, t)``, vectorized over ``x``."""
    method = kw.pop("method", "contour")
    x = np.atleast_1d(np.asarray(x, dtype=float))
    if method == "sum":
        return np.einsum("ij,ij->j", *_psi_phi_stack(x, n, t))
    epsilon = kw.get("epsilon", ct.DEFAULT_EPSILON)
    circle = ct.CircleContour(0.0, epsilon / 2.0, kw.get("circle_nodes", ct.DEFAULT_CIRCLE_NODES))
    line = _resolved_line(t, n, epsilon, kw.get("line_nodes", ct.DEFAULT_LINE_NODES))
    z, wz = circle.nodes()
    w, ww = line.nodes()
    xs = x[:, None]
    g = np.exp(t * w * w - 2.0 * xs * w) * w ** n * ww
    h = np.exp(-t * z * z + 2.0 * xs * z) / z ** n * wz
    raw = 2.0 * np.sum((g @ ct.cauchy_matrix(z, w).T) * h, axis=1)
    return real_part_checked(raw, np.abs(raw))


def _psi_phi_stack(x, n, t):
    psi = np.stack([np.atleast_1d(psi_gue(n, t, n - k, x)) for k in range(1, n + 1)])
    phi = np.stack([np.atleast_1d(phi_gue(n, t, n - k, x)) for k in range(1, n + 1)])
    return psi, phi


def kernel_gue_extended(a: SpaceTimePoint, b: SpaceTimePoint, *, method: str = "contour",
                        epsilon: float = ct.DEFAULT_EPSILON) -> KernelValue:
    """Space-like correlation kernel of the eigenvalues of Hermitian Brownian minors."""
    val, err = gue_kernel_grid(a.x, a.n, a.t, b.x, b.n, b.t, method=method,
                               epsilon=epsilon, with_error=True)
    return KernelValue(float(val[0, 0]), float(err[0, 0]))


def kernel_gue_static(x1: float, n1: int, x2: float, n2: int, **kw) -> KernelValue:
    """Fixed-time GUE-minor kernel (the extended kernel at ``t1 = t2 = 1``)."""
    return kernel_gue_extended(SpaceTimePoint(x1, n1, 1.0), SpaceTimePoint(x2, n2, 1.0), **kw)


def kernel_diffusion_scaled(a: SpaceTimePoint, b: SpaceTimePoint) -> float:
    """Diffusion-scaled kernel of the interlaced particle system.

    Points carry ``(ξ, n, τ)``.  Evaluated in closed form (Hermite polynomials
    and iterated complementary error functions), independent of the contour
    route used by :func:`kernel_gue_extended`.
    """
    xi1, n1, tau1 = a.x, a.n, a.t
    xi2, n2, tau2 = b.x, b.n, b.t
    if not (tau1 > 0 and tau2 > 0):
        raise ValueError("scaled kernel needs tau > 0")
    total = 0.0
    for k in range(1, n2 + 1):
        total += psi_gue(n1, tau1, n1 - k, xi1) * phi_gue(n2, tau2, n2 - k, xi2)
    total *= 2.0 ** (n2 - n1)
    if precedes_nt(n1, tau1, n2, tau2):
        m = n2 - n1
        if tau1 == tau2:
            first = float(step_convolution_power(m, xi1, xi2))
        else:
            first = psi_gue(n1, tau1 - tau2, -m, xi1 - xi2)
        total -= 2.0 ** m * first
    return float(total)


def _scalar(a):
    a = np.asarray(a)
    return float(a) if a.ndim == 0 else a
