"""Building blocks and correlation kernel for the Wishart (Laguerre) process.

Conventions: ``Ψ^{n,t}_k`` is a Gamma-type density times a Laguerre
polynomial for ``k >= 0`` and a finite sum for ``k < 0``; ``Φ^{n,t}_ℓ(x) =
t^ℓ L^n_ℓ(x/t)``; ``T^n_{t,s}`` is the squared-Bessel transition density
from ``y`` at time ``s`` to ``x`` at time ``t``.  Every function has a closed
form and at least one contour representation used as an oracle.

Negative-index objects come in two consistent flavours.  With the contour
around 0 only, ``Ψ_k`` (``k < 0``) and the space-like transition miss the
residue at the unit pole; with the contour around 0 and 1 they are the
genuine convolutions ``φ * Ψ`` and ``T * φ^{*m}``.  The kernel is the same
either way as long as both terms use the same flavour; the sum route uses
the convolution flavour, the double-integral route the origin flavour.
"""
from __future__ import annotations

import math

import numpy as np
from numpy.typing import ArrayLike
from scipy import special

from .. import contour as ct
from ..specfun import laguerre, log_factorial
from .common import KernelValue, LueParams, SpaceTimePoint, precedes_nt, real_part_checked

LUE_CIRCLE_NODES = 256
# largest log-growth of a circle integrand accepted before switching route
PHI_CONTOUR_MAX_GROWTH = 8.0


def psi_lue(n: int, t: float, k: int, x: ArrayLike, method: str = "closed",
            unit_pole: bool = False):
    """``Ψ^{n,t}_k(x)`` for integer ``k`` and ``x >= 0``.

    Args:
        n: Laguerre order (``p - level`` in the kernel), ``n >= 0``.
        t: time, ``t > 0``.
        k: any integer.
        x: evaluation points on the half line.
        method: ``"closed"`` (Laguerre / finite sum), ``"contour"`` (circle
            around 0 in the ``z`` variable) or ``"contour_shifted"`` (the
            representation with ``(z̃ - t)`` factors).
        unit_pole: for ``k < 0`` also take the residue at ``z = 1``.  This is
            the flavour produced by repeated convolution with the step kernel.
    """
    _check_time(t)
    x = np.asarray(x, dtype=float)
    if np.any(x < 0):
        raise ValueError("psi_lue is defined for x >= 0")
    if method == "closed":
        out = _psi_lue_closed(n, t, k, x)
        if unit_pole and k < 0:
            out = out + _psi_lue_unit_residue(n, t, k, x)
    elif method == "contour":
        out = _psi_lue_contour(n, t, k, x, unit_pole)
    elif method == "contour_shifted":
        if unit_pole and k < 0:
            raise ValueError("the shifted representation only covers the origin residue")
        out = _psi_lue_shifted(n, t, k, x)
    else:
        raise ValueError(f"unknown method {method!r}")
    return _scalar(out)


def _psi_lue_closed(n, t, k, x):
    u = x / t
    if k >= 0:
        logc = log_factorial(k) - log_factorial(n + k) - (k + 1) * math.log(t)
        with np.errstate(divide="ignore"):
            logx = np.where(u > 0, n * np.log(np.where(u > 0, u, 1.0)), 0.0 if n == 0 else -np.inf)
        return np.exp(logc + logx - u) * laguerre(k, n, u)
    # residue of (z-1)^{-m} z^{-N} e^{u(z-1)} at 0, N = n + k + 1
    m, big_n = -k, n + k + 1
    if big_n <= 0:
        return np.zeros_like(u)
    total = np.zeros_like(u)
    for j in range(big_n):
        d = big_n - 1 - j
        total = total + math.comb(m + j - 1, j) * u ** d / math.factorial(d)
    return (-1) ** m * t ** (m - 1) * np.exp(-u) * total


def _psi_lue_unit_residue(n, t, k, x):
    # Res_{z=1} of t^{-(k+1)} (z-1)^{-m} z^{-N} e^{u(z-1)}, N = n + k + 1
    m, big_n = -k, n + k + 1
    u = x / t
    total = np.zeros_like(u)
    falling = 1.0
    for i in range(m):
        total = total + falling / math.factorial(i) * u ** (m - 1 - i) / math.factorial(m - 1 - i)
        falling *= -big_n - i
    return t ** (m - 1) * total


def _psi_lue_contour(n, t, k, x, unit_pole=False):
    enclose_one = unit_pole and k < 0
    if n + k + 1 <= 0 and not enclose_one:
        return np.zeros_like(x)
    xs = x.reshape(-1, 1)
    circle = ct.CircleContour(0.0, 1.5 if enclose_one else 0.5, LUE_CIRCLE_NODES)
    vals = ct.integrate_batch(
        lambda z: (z - 1.0) ** k / z ** (n + k + 1) * np.exp(xs * (z - 1.0) / t), circle)
    return real_part_checked(vals * t ** (-(k + 1)), 1.0).reshape(x.shape)


def _psi_lue_shifted(n, t, k, x):
    if n + k + 1 <= 0:
        return np.zeros_like(x)
    xs = x.reshape(-1, 1)
    # |z̃| = t/3 keeps the essential singularity at t well outside
    circle = ct.CircleContour(0.0, t / 3.0, LUE_CIRCLE_NODES)
    vals = ct.integrate_batch(
        lambda z: -(z - t) ** (n - 1) / z ** (n + k + 1) * np.exp(xs / (z - t)), circle)
    return real_part_checked(vals, 1.0).reshape(x.shape)


def phi_lue(n: int, t: float, ell: int, x: ArrayLike, method: str = "closed"):
    """``Φ^{n,t}_ℓ(x) = t^ℓ L^n_ℓ(x/t)``, or its circle integral around ``t``."""
    _check_time(t)
    if ell < 0:
        raise ValueError("degree must be >= 0")
    x = np.asarray(x, dtype=float)
    if method == "closed":
        return _scalar(t ** ell * laguerre(ell, n, x / t))
    if method != "contour":
        raise ValueError(f"unknown method {method!r}")
    xs = x.reshape(-1, 1)
    # e^{-x/(w-t)} grows like e^{x/R} on the circle; a radius growing with x
    # keeps that growth bounded
    radius = t + 0.5 * float(np.max(x, initial=0.0))
    circle = ct.CircleContour(t, radius, LUE_CIRCLE_NODES)
    vals = ct.integrate_batch(
        lambda w: w ** (n + ell) / (w - t) ** (n + 1) * np.exp(-xs / (w - t)), circle)
    return _scalar(real_part_checked(vals, np.abs(vals)).reshape(x.shape))


def bessel_transition(n: int, t: float, s: float, x: ArrayLike, y: ArrayLike,
                      method: str = "closed"):
    """Squared-Bessel transition density ``T^n_{t,s}(x, y)``.

    ``(x/y)^{n/2} I_n(2√(xy)/(t-s)) e^{-(x+y)/(t-s)} / (t-s)``, vanishing off
    the open quadrant.  ``method`` picks the closed form, the circle integral
    around 0 (``"contour"``) or the circle integral around ``s`` (``"shifted"``).

    Raises:
        ValueError: if ``t <= s``.
    """
    if not t > s:
        raise ValueError(f"bessel_transition needs t > s, got t={t}, s={s}")
    x, y = np.broadcast_arrays(np.asarray(x, dtype=float), np.asarray(y, dtype=float))
    d = t - s
    pos = (x > 0) & (y > 0)
    xp, yp = np.where(pos, x, 1.0), np.where(pos, y, 1.0)
    if method == "closed":
        arg = 2.0 * np.sqrt(xp * yp) / d
        # scipy's scaled Bessel is vectorized; specfun.bessel_ie is its test oracle
        val = (xp / yp) ** (n / 2.0) * special.ive(n, arg) * np.exp(-(np.sqrt(xp) - np.sqrt(yp)) ** 2 / d) / d
    elif method == "contour":
        val = _transition_z_circle(n, d, xp.ravel(), yp.ravel()).reshape(x.shape)
    elif method == "shifted":
        val = _transition_s_circle(n, t, s, xp.ravel(), yp.ravel()).reshape(x.shape)
    else:
        raise ValueError(f"unknown method {method!r}")
    return _scalar(np.where(pos, val, 0.0))


def _transition_z_circle(n, d, x, y):
    out = np.empty(x.shape)
    for i, (xi, yi) in enumerate(zip(x, y)):
        # saddle point of x z + y/z sits at |z| = √(y/x)
        circle = ct.CircleContour(0.0, math.sqrt(yi / xi), LUE_CIRCLE_NODES)
        v = ct.integrate_batch(
            lambda z: np.exp(-(xi * (1.0 - z) + yi * (1.0 - 1.0 / z)) / d) / z ** (n + 1), circle)
        out[i] = real_part_checked(v / d, abs(v / d))
    return out


def _transition_s_circle(n, t, s, x, y):
    out = np.empty(x.shape)
    d = t - s
    for i, (xi, yi) in enumerate(zip(x, y)):
        # |z| = r maps under z = (w-s)/(w-t) to the circle through
        # s + d r/(1+r) and s - d r/(1-r); sample that circle directly (its
        # own equispaced nodes, so this is not the z-route in disguise).
        # r < 1 is required for the image to enclose s and exclude t.
        r = min(math.sqrt(yi / xi), 0.9)
        circle = ct.CircleContour(s - d * r * r / (1.0 - r * r), d * r / (1.0 - r * r),
                                  2 * LUE_CIRCLE_NODES)
        v = ct.integrate_batch(
            lambda w: -(w - t) ** (n - 1) / (w - s) ** (n + 1) * np.exp(xi / (w - t) - yi / (w - s)),
            circle)
        out[i] = real_part_checked(v, abs(v))
    return out


def step_convolution_power_lue(m: int, x: ArrayLike, y: ArrayLike) -> np.ndarray:
    """``φ^{*m}(x, y) = (x - y)^{m-1}/(m-1)! 1[x >= y]`` for ``m >= 1``."""
    x, y = np.broadcast_arrays(np.asarray(x, dtype=float), np.asarray(y, dtype=float))
    return np.where(x >= y, (x - y) ** (m - 1) / math.factorial(m - 1), 0.0)


def phi_spacelike_lue(a: SpaceTimePoint, b: SpaceTimePoint, p: LueParams,
                      method: str = "contour", unit_pole: bool = True) -> float:
    """Space-like transition ``φ^{(n_a,t_a;n_b,t_b)}(x_a, x_b)`` of the Wishart chain.

    With ``unit_pole=True`` (default) this is the genuine convolution
    ``T * φ^{*m}``; ``False`` keeps only the residue at ``w = 0``.
    """
    p.check_level(a.n)
    p.check_level(b.n)
    if not unit_pole:
        return float(_phi_spacelike_lue_origin(np.asarray(a.x), a.n, a.t, np.asarray(b.x),
                                               b.n, b.t, p.p))
    return float(_phi_spacelike_lue(np.asarray(a.x), a.n, a.t, np.asarray(b.x), b.n, b.t,
                                    p.p, method))


def _phi_spacelike_lue_origin(x1, n1, t1, x2, n2, t2, p):
    x1, x2 = np.broadcast_arrays(np.asarray(x1, dtype=float), np.asarray(x2, dtype=float))
    if not precedes_nt(n1, t1, n2, t2):
        return np.zeros(x1.shape)
    m, d = n2 - n1, t1 - t2
    if m == 0:
        return bessel_transition(p - n1, t1, t2, x1, x2) * np.ones(x1.shape)
    if d == 0:
        # the unit residue tends to (x-y)^{m-1}/(m-1)! as the time gap closes
        return np.where(x1 < x2, -(x1 - x2) ** (m - 1) / math.factorial(m - 1), 0.0)
    out = np.empty(x1.shape)
    for idx in np.ndindex(x1.shape):
        xi, yi = x1[idx], x2[idx]
        radius = min(math.sqrt(yi / xi), 0.8) if xi > 0 and yi > 0 else 0.8
        if xi > 0 and (xi * (radius - 1.0) - yi * (1.0 - 1.0 / radius)) / d > PHI_CONTOUR_MAX_GROWTH:
            # short time gap: take the convolution and remove the unit residue
            true = _phi_spacelike_lue_quad(np.array(xi), np.array(yi), m, d, p - n1)
            out[idx] = true - _phi_unit_residue(xi, yi, m, d, p + 1 - n2)
            continue
        circle = ct.CircleContour(0.0, radius, LUE_CIRCLE_NODES)
        v = ct.integrate_batch(
            lambda w: np.exp(-(xi * (1.0 - w) + yi * (1.0 - 1.0 / w)) / d)
            / (w ** (p + 1 - n2) * (w - 1.0) ** m), circle)
        out[idx] = real_part_checked(d ** (m - 1) * v, abs(v))
    return out


def _phi_unit_residue(x, y, m, d, a):
    """``d^{m-1} Res_{w=1} e^{-(x(1-w) + y(1-1/w))/d} w^{-a} (w-1)^{-m}``.

    With ``w = 1 + u`` the exponent is ``q(u)/d``, ``q = x u - y (1 - 1/(1+u))``,
    so the residue is ``sum_k d^{m-1-k}/k! [u^{m-1}] q^k (1+u)^{-a}``.
    """
    deg = m - 1
    q = np.zeros(deg + 1)
    if deg >= 1:
        q[1:] = [y * (-1.0) ** j for j in range(1, deg + 1)]
        q[1] += x
    # binomial series of (1+u)^{-a}
    base = np.ones(deg + 1)
    for j in range(1, deg + 1):
        base[j] = base[j - 1] * (-a - j + 1) / j
    total = 0.0
    power = base
    for k in range(deg + 1):
        total += d ** (deg - k) / math.factorial(k) * power[deg]
        power = np.polynomial.polynomial.polymul(power, q)[: deg + 1]
    return total


def _phi_spacelike_lue(x1, n1, t1, x2, n2, t2, p, method="contour"):
    x1, x2 = np.broadcast_arrays(np.asarray(x1, dtype=float), np.asarray(x2, dtype=float))
    if not precedes_nt(n1, t1, n2, t2):
        return np.zeros(x1.shape)
    m, d = n2 - n1, t1 - t2
    if d == 0:
        return step_convolution_power_lue(m, x1, x2)
    if m == 0:
        return bessel_transition(p - n1, t1, t2, x1, x2,
                                 "closed" if method == "closed" else "contour") * np.ones(x1.shape)
    if method == "closed":
        return _phi_spacelike_lue_quad(x1, x2, m, d, p - n1)
    out = np.empty(x1.shape)
    for idx in np.ndindex(x1.shape):
        xi, yi = x1[idx], x2[idx]
        if xi <= 0.0:
            out[idx] = 0.0
            continue
        # the y-integral defining this term converges only where Re(1/w) < 1,
        # so the circle must enclose both w = 0 and w = 1
        radius = max(1.5, math.sqrt(yi / xi))
        # the integrand peaks at w = radius; past e^GROWTH the circle sum
        # cancels badly (short time gaps), so convolve on the real axis
        if (xi * (radius - 1.0) - yi * (1.0 - 1.0 / radius)) / d > PHI_CONTOUR_MAX_GROWTH:
            out[idx] = _phi_spacelike_lue_quad(np.array(xi), np.array(yi), m, d, p - n1)
            continue
        circle = ct.CircleContour(0.0, radius, LUE_CIRCLE_NODES)
        v = ct.integrate_batch(
            lambda w: np.exp(-(xi * (1.0 - w) + yi * (1.0 - 1.0 / w)) / d)
            / (w ** (p + 1 - n2) * (w - 1.0) ** m), circle)
        out[idx] = real_part_checked(d ** (m - 1) * v, abs(v))
    return out


def _phi_spacelike_lue_quad(x1, x2, m, d, order):
    # T^{order}_{t1,t2} * φ^{*m} evaluated by Gauss-Legendre on [x2, ∞)
    out = np.empty(x1.shape)
    for idx in np.ndindex(x1.shape):
        xi, yi = x1[idx], x2[idx]
        if xi <= 0.0:
            out[idx] = 0.0
            continue
        # the transition from xi is concentrated where |sqrt(z) - sqrt(xi)| is
        # a few sqrt(d); the (z - yi)^{m-1} factor only matters beyond yi
        lo = max(yi, (max(math.sqrt(xi) - 12.0 * math.sqrt(d), 0.0)) ** 2, 0.0)
        hi = max((math.sqrt(xi) + 12.0 * math.sqrt(d)) ** 2, lo) + 12.0 * math.sqrt(d)
        z, wz = ct.gauss_legendre_panels(lo, hi, 64, 20)
        kern = bessel_transition(order, d, 0.0, xi, z)
        out[idx] = np.sum(wz * kern * (z - yi) ** (m - 1)) / math.factorial(m - 1)
    return out


def lue_kernel_grid(x1: ArrayLike, n1: int, t1: float, x2: ArrayLike, n2: int, t2: float,
                    p: int, method: str = "contour", numerator: str = "x1",
                    circle_nodes: int = LUE_CIRCLE_NODES) -> np.ndarray:
    """Kernel values on the grid ``x1 × x2`` (shape ``(len(x1), len(x2))``).

    Args:
        method: ``"contour"`` (nested circles) or ``"sum"`` (finite Ψ·Φ sum).
        numerator: which position enters ``e^{x/(z - t_1)}`` in the double
            integral.  ``"x1"`` is the correct kernel; ``"x2"`` reproduces the
            misprinted display and exists only so the two can be compared.
    """
    for n in (n1, n2):
        LueParams(p).check_level(n)
    _check_time(t1)
    _check_time(t2)
    x1 = np.atleast_1d(np.asarray(x1, dtype=float))
    x2 = np.atleast_1d(np.asarray(x2, dtype=float))
    if method == "contour":
        second = _double_integral_lue(x1, n1, t1, x2, n2, t2, p, numerator, circle_nodes)
        first = -_phi_spacelike_lue_origin(x1[:, None], n1, t1, x2[None, :], n2, t2, p)
    elif method == "sum":
        if numerator != "x1":
            raise ValueError("the sum route only exists for the x1 numerator")
        psi = np.stack([np.atleast_1d(psi_lue(p - n1, t1, n1 - k, x1, unit_pole=True))
                        for k in range(1, n2 + 1)])
        phi = np.stack([np.atleast_1d(phi_lue(p - n2, t2, n2 - k, x2)) for k in range(1, n2 + 1)])
        second = psi.T @ phi
        first = -_phi_spacelike_lue(x1[:, None], n1, t1, x2[None, :], n2, t2, p)
    else:
        raise ValueError(f"unknown method {method!r}")
    return first + second


def _double_integral_lue(x1, n1, t1, x2, n2, t2, p, numerator, nodes):
    # z on |z| = t1/2 (encloses 0, excludes t1); w on a circle centred at
    # t2/2 enclosing both the z circle and t2
    rz = 0.5 * t1
    xmax = float(np.max(x2, initial=0.0))
    rw = max(0.5 * t2 + rz + 0.5, 0.25 * xmax)
    zc = ct.CircleContour(0.0, rz, nodes)
    wc = ct.CircleContour(0.5 * t2, rw, 2 * nodes)
    ct.check_nested(zc, wc)
    z, wz = zc.nodes()
    w, ww = wc.nodes()
    xz = (x1 if numerator == "x1" else x2)[:, None]
    h = np.exp(xz / (z - t1)) * (z - t1) ** (p - 1 - n1) / z ** p * wz
    g = np.exp(-x2[:, None] / (w - t2)) * w ** p / (w - t2) ** (p + 1 - n2) * ww
    if numerator == "x1":
        raw = -(h @ ct.cauchy_matrix(z, w) @ g.T)
        return real_part_checked(raw, np.abs(raw))
    # misprinted reading: both exponentials depend on x2 only
    raw = -np.einsum("jk,jk->j", h @ ct.cauchy_matrix(z, w), g)
    return np.broadcast_to(raw.real, (x1.size, x2.size)).copy()


def lue_display_first_term(x1, n1, t1, x2, n2, t2, p, nodes: int = 2048) -> np.ndarray:
    """The single-integral term in its ``z`` form, leading minus sign included.

    The change of variable ``w = (z - t_2)/(z - t_1)`` sends a ``w``-circle
    around 0 (and not 1) to a circle around ``t_2`` that leaves ``t_1``
    outside; that is the contour used here.  The value equals ``+φ`` in the
    origin flavour, so the kernel needs this term with the opposite sign.
    Kept as an oracle for that sign question.
    """
    x1, x2 = np.broadcast_arrays(np.asarray(x1, dtype=float), np.asarray(x2, dtype=float))
    if not precedes_nt(n1, t1, n2, t2):
        return np.zeros(x1.shape)
    if t1 == t2:
        raise ValueError("the z form degenerates when t_1 = t_2")
    circle = ct.CircleContour(t2, 0.5 * (t1 - t2), nodes)
    out = np.empty(x1.shape)
    for idx in np.ndindex(x1.shape):
        xi, yi = x1[idx], x2[idx]
        v = ct.integrate_batch(
            lambda z: np.exp(xi / (z - t1) - yi / (z - t2))
            * (z - t1) ** (p - 1 - n1) / (z - t2) ** (p + 1 - n2), circle)
        out[idx] = -v.real
    return out


def kernel_lue(a: SpaceTimePoint, b: SpaceTimePoint, p: LueParams,
               method: str = "contour") -> KernelValue:
    """Wishart-process correlation kernel ``K(a, b)`` with an error estimate."""
    coarse = lue_kernel_grid(a.x, a.n, a.t, b.x, b.n, b.t, p.p, method)[0, 0]
    err = 0.0
    if method == "contour":
        fine = lue_kernel_grid(a.x, a.n, a.t, b.x, b.n, b.t, p.p, method,
                               circle_nodes=2 * LUE_CIRCLE_NODES)[0, 0]
        err = abs(fine - coarse)
        coarse = fine
    return KernelValue(float(coarse), float(err))


def lue_kernel_diag(x: ArrayLike, n: int, t: float, p: int, method: str = "sum") -> np.ndarray:
    """One-point density ``K(κ, κ)`` at level ``n``, time ``t``."""
    x = np.atleast_1d(np.asarray(x, dtype=float))
    if method == "sum":
        psi = np.stack([np.atleast_1d(psi_lue(p - n, t, n - k, x)) for k in range(1, n + 1)])
        phi = np.stack([np.atleast_1d(phi_lue(p - n, t, n - k, x)) for k in range(1, n + 1)])
        return np.einsum("ij,ij->j", psi, phi)
    return np.array([lue_kernel_grid(xi, n, t, xi, n, t, p, method)[0, 0] for xi in x])


def _check_time(t):
    if not t > 0:
        raise ValueError(f"time must be positive, got {t}")


def _scalar(a):
    a = np.asarray(a)
    return float(a) if a.ndim == 0 else a
