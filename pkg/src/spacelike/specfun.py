"""Special functions used by every kernel.

Hermite polynomials use the physicists' normalization

    int e^{-x^2} p_n(x) p_m(x) dx = sqrt(pi) 2^n n! delta_{nm},

generalized Laguerre polynomials the usual ``L^p_k`` with weight
``x^p e^{-x}`` on the half line.
"""
from __future__ import annotations

import math

import numpy as np
from numpy.typing import ArrayLike

# series stops once the next term is below this fraction of the running sum
BESSEL_REL_TOL = 1e-16
BESSEL_MAX_TERMS = 500


def hermite(n: int, x: ArrayLike) -> np.ndarray | float:
    """Physicists' Hermite polynomial ``p_n(x)`` by three-term recurrence.

    ``p_{k+1}(x) = 2x p_k(x) - 2k p_{k-1}(x)`` with ``p_0 = 1``, ``p_1 = 2x``.
    """
    n = _check_degree(n)
    x = np.asarray(x, dtype=float)
    prev = np.ones_like(x)
    if n == 0:
        return _scalar(prev)
    cur = 2.0 * x
    for k in range(1, n):
        prev, cur = cur, 2.0 * x * cur - 2.0 * k * prev
    return _scalar(cur)


def hermite_all(n_max: int, x: ArrayLike) -> np.ndarray:
    """Stack ``[p_0(x), ..., p_{n_max}(x)]`` along a new leading axis."""
    n_max = _check_degree(n_max)
    x = np.asarray(x, dtype=float)
    out = np.empty((n_max + 1,) + x.shape)
    out[0] = 1.0
    if n_max >= 1:
        out[1] = 2.0 * x
    for k in range(1, n_max):
        out[k + 1] = 2.0 * x * out[k] - 2.0 * k * out[k - 1]
    return out


def laguerre(k: int, p: int, x: ArrayLike) -> np.ndarray | float:
    """Generalized Laguerre polynomial ``L^p_k(x)``.

    Uses ``(j+1) L_{j+1} = (2j + 1 + p - x) L_j - (j + p) L_{j-1}``.
    """
    k = _check_degree(k)
    if p < 0:
        raise ValueError(f"Laguerre order must be >= 0, got {p}")
    x = np.asarray(x, dtype=float)
    prev = np.ones_like(x)
    if k == 0:
        return _scalar(prev)
    cur = 1.0 + p - x
    for j in range(1, k):
        prev, cur = cur, ((2 * j + 1 + p - x) * cur - (j + p) * prev) / (j + 1)
    return _scalar(cur)


def bessel_i(n: int, x: ArrayLike) -> np.ndarray | float:
    """Modified Bessel function ``I_n(x)`` of integer order from its power series.

    ``I_n(x) = sum_k (x/2)^{2k+|n|} / (k! (k+|n|)!)``; ``I_{-n} = I_n``.

    Raises:
        OverflowError: if the result is not representable as a float.
    """
    with np.errstate(over="ignore"):
        log_scale, mant = _bessel_series(abs(int(n)), x)
        out = mant * np.exp(log_scale)
    if np.any(np.isinf(out)):
        raise OverflowError(f"I_{n}(x) overflows for x up to {np.max(x)}")
    return _scalar(out)


def bessel_ie(n: int, x: ArrayLike) -> np.ndarray | float:
    """Exponentially scaled ``e^{-x} I_n(x)`` (no overflow for large x)."""
    x = np.asarray(x, dtype=float)
    log_scale, mant = _bessel_series(abs(int(n)), x)
    return _scalar(mant * np.exp(log_scale - x))


def log_bessel_i(n: int, x: ArrayLike) -> np.ndarray | float:
    """``log I_n(x)`` for ``x > 0``."""
    log_scale, mant = _bessel_series(abs(int(n)), x)
    with np.errstate(divide="ignore"):
        return _scalar(log_scale + np.log(mant))


def _bessel_series(n: int, x: ArrayLike) -> tuple[np.ndarray, np.ndarray]:
    # Returns (log_scale, mantissa) with I_n(x) = mantissa * exp(log_scale).
    # Terms are normalised by the largest one, which sits near k ~ x/2.
    x = np.asarray(x, dtype=float)
    if np.any(x < 0):
        raise ValueError("bessel_i is only defined here for x >= 0")
    flat = np.atleast_1d(x).ravel()
    log_scale = np.empty_like(flat)
    mant = np.empty_like(flat)
    for i, xi in enumerate(flat):
        h = 0.5 * xi
        if h == 0.0:
            # x == 0, or subnormal enough that x/2 underflows
            log_scale[i] = 0.0
            mant[i] = 1.0 if n == 0 else 0.0
            continue
        lh = math.log(h)
        # index of the largest term: k(k+n) ~ h^2
        kpk = int(max(0.0, (-n + math.sqrt(n * n + 4.0 * h * h)) / 2.0))
        lpeak = (2 * kpk + n) * lh - math.lgamma(kpk + 1) - math.lgamma(kpk + n + 1)
        # walk outwards from the peak in both directions
        total = 1.0
        term = 1.0
        k = kpk
        for _ in range(BESSEL_MAX_TERMS):
            term *= h * h / ((k + 1) * (k + 1 + n))
            k += 1
            total += term
            if term < BESSEL_REL_TOL * total:
                break
        term = 1.0
        k = kpk
        while k > 0:
            term *= k * (k + n) / (h * h)
            k -= 1
            total += term
            if term < BESSEL_REL_TOL * total:
                break
        log_scale[i] = lpeak
        mant[i] = total
    return log_scale.reshape(x.shape), mant.reshape(x.shape)


def log_factorial(n: int) -> float:
    """``ln(n!)`` via ``lgamma``; exact zero for ``n in {0, 1}``."""
    n = _check_degree(n)
    if n < 2:
        return 0.0
    return math.lgamma(n + 1.0)


def log_factorial_ratio(a: int, b: int) -> float:
    """``ln(a!/b!)``; used for prefactors such as ``(p+k)!/k!``."""
    return log_factorial(a) - log_factorial(b)


def _check_degree(n: int) -> int:
    if int(n) != n or n < 0:
        raise ValueError(f"degree must be a non-negative integer, got {n!r}")
    return int(n)


def _scalar(a: np.ndarray) -> np.ndarray | float:
    return float(a) if np.ndim(a) == 0 else a
