"""Quadrature for ``(1/2πi)``-normalized contour integrals.

Two shapes are supported: positively oriented circles (periodic trapezoid
rule, spectrally accurate for analytic integrands) and truncated vertical
lines ``Re w = ε`` (composite Gauss-Legendre in the imaginary coordinate).
Integrands are callables mapping a complex ndarray to a complex ndarray of
the same shape.
"""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, replace
from functools import lru_cache
from typing import Callable

import numpy as np

ComplexFunction = Callable[[np.ndarray], np.ndarray]

# e^{-2xε} cancellation at negative x grows quickly with ε; 1/4 keeps the
# double integrals accurate to ~1e-9 for |x| <= 9
DEFAULT_EPSILON = 0.25
DEFAULT_CIRCLE_NODES = 256
DEFAULT_LINE_NODES = 400
LINE_TAIL_TOL = 1e-14
SELF_CONVERGENCE_TOL = 1e-9


class QuadratureError(ArithmeticError):
    """Raised when an integrand is not finite on the contour."""

    def __init__(self, message: str, node: complex | None = None):
        super().__init__(message)
        self.node = node


class ContourSeparationError(ValueError):
    """Two contours (or a contour and a pole) are not properly separated."""


class QuadratureTailWarning(RuntimeWarning):
    """Integrand is not negligible at the ends of a truncated line."""


@dataclass(frozen=True)
class CircleContour:
    center: complex = 0.0
    radius: float = 0.5
    node_count: int = DEFAULT_CIRCLE_NODES

    def __post_init__(self):
        if not self.radius > 0:
            raise ValueError(f"radius must be positive, got {self.radius}")
        if self.node_count < 8:
            raise ValueError("a circle needs at least 8 nodes")

    def nodes(self) -> tuple[np.ndarray, np.ndarray]:
        """Nodes ``z_j`` and weights ``dz_j / (2πi)``."""
        unit = _roots_of_unity(self.node_count)
        z = self.center + self.radius * unit
        return z, self.radius * unit / self.node_count

    def refined(self) -> "CircleContour":
        return replace(self, node_count=2 * self.node_count)

    def encloses(self, point: complex) -> bool:
        return abs(point - self.center) < self.radius

    def distance_to(self, point: complex) -> float:
        return abs(abs(point - self.center) - self.radius)


@dataclass(frozen=True)
class VerticalLineContour:
    real_part: float = DEFAULT_EPSILON
    half_length: float = 10.0
    node_count: int = DEFAULT_LINE_NODES
    panel_order: int = 10

    def __post_init__(self):
        if not self.real_part > 0:
            raise ValueError(f"real_part must be positive, got {self.real_part}")
        if not self.half_length > self.real_part:
            raise ValueError("half_length must exceed real_part")

    def nodes(self) -> tuple[np.ndarray, np.ndarray]:
        """Nodes ``w_k = ε + i y_k`` and weights ``dw_k / (2πi) = dy_k / 2π``."""
        panels = max(1, -(-self.node_count // self.panel_order))
        y, wy = _composite_gauss_legendre(-self.half_length, self.half_length,
                                          panels, self.panel_order)
        return self.real_part + 1j * y, wy / (2.0 * math.pi)

    def refined(self) -> "VerticalLineContour":
        return replace(self, node_count=2 * self.node_count)


def vline_half_length(t: float, epsilon: float = DEFAULT_EPSILON, degree: int = 0,
                      tau: float = LINE_TAIL_TOL) -> float:
    """Half length making ``e^{t(ε² - y²)} |w|^degree`` drop below ``tau``.

    ``t`` is the coefficient of ``w²`` in the exponent (the smallest time scale
    in the integrand).
    """
    if not t > 0:
        raise ValueError("the Gaussian coefficient t must be positive")
    target = math.log(1.0 / tau) + t * epsilon * epsilon
    y = math.sqrt(target / t)
    # absorb the polynomial factor by fixed-point iteration
    for _ in range(20):
        y_new = math.sqrt((target + degree * math.log(max(1.0, math.hypot(epsilon, y)))) / t)
        if abs(y_new - y) < 1e-6:
            break
        y = y_new
    return epsilon + y


def integrate_circle(f: ComplexFunction, c: CircleContour, *, adaptive: bool = False,
                     tol: float = SELF_CONVERGENCE_TOL, max_doublings: int = 5,
                     return_error: bool = False):
    """``(1/2πi) ∮ f(z) dz`` over a positively oriented circle."""
    value = _circle_sum(f, c)
    err = 0.0
    if adaptive:
        value, err = _self_converge(lambda cc: _circle_sum(f, cc), c, value, tol, max_doublings)
    return (value, err) if return_error else value


def integrate_vline(f: ComplexFunction, c: VerticalLineContour, *, adaptive: bool = False,
                    tol: float = SELF_CONVERGENCE_TOL, max_doublings: int = 4,
                    return_error: bool = False):
    """``(1/2πi) ∫_{ε-iL}^{ε+iL} f(w) dw`` by composite Gauss-Legendre.

    Emits :class:`QuadratureTailWarning` when ``|f|`` at the endpoints exceeds
    ``1e-13`` times the accumulated magnitude.
    """
    value = _line_sum(f, c)
    err = 0.0
    if adaptive:
        value, err = _self_converge(lambda cc: _line_sum(f, cc), c, value, tol, max_doublings)
    return (value, err) if return_error else value


def integrate_batch(f: Callable[[np.ndarray], np.ndarray],
                    c: CircleContour | VerticalLineContour) -> np.ndarray:
    """Integrate a family of integrands at once.

    ``f`` maps the node vector (shape ``(K,)``) to values of shape ``(..., K)``;
    the result has shape ``(...)``.
    """
    nodes, wt = c.nodes()
    vals = np.asarray(f(nodes), dtype=complex)
    _check_finite(vals, nodes)
    if isinstance(c, VerticalLineContour):
        _check_tail(f, c, np.abs(vals) @ wt)
    return vals @ wt


def cauchy_matrix(z: np.ndarray, w: np.ndarray) -> np.ndarray:
    """``C[j, k] = 1 / (w_k - z_j)``; raises if a node pair coincides."""
    d = w[None, :] - z[:, None]
    if np.min(np.abs(d)) == 0.0:
        raise ContourSeparationError("inner and outer contours intersect")
    return 1.0 / d


def check_separated(inner: CircleContour, outer_real_part: float) -> None:
    """Assert a circle lies strictly left of the line ``Re w = outer_real_part``."""
    if inner.center.real + inner.radius >= outer_real_part:
        raise ContourSeparationError(
            f"circle (center {inner.center}, radius {inner.radius}) reaches "
            f"the line Re w = {outer_real_part}")


def check_nested(inner: CircleContour, outer: CircleContour) -> None:
    """Assert ``inner`` lies strictly inside ``outer``."""
    if abs(inner.center - outer.center) + inner.radius >= outer.radius:
        raise ContourSeparationError(
            f"circle (center {inner.center}, radius {inner.radius}) is not inside "
            f"circle (center {outer.center}, radius {outer.radius})")


def _circle_sum(f: ComplexFunction, c: CircleContour) -> complex:
    z, wt = c.nodes()
    vals = np.asarray(f(z), dtype=complex)
    _check_finite(vals, z)
    return complex(np.sum(vals * wt))


def _line_sum(f: ComplexFunction, c: VerticalLineContour) -> complex:
    w, wt = c.nodes()
    vals = np.asarray(f(w), dtype=complex)
    _check_finite(vals, w)
    _check_tail(f, c, np.sum(np.abs(vals) * wt))
    return complex(np.sum(vals * wt))


def _check_tail(f, c: VerticalLineContour, total) -> None:
    ends = np.array([c.real_part - 1j * c.half_length, c.real_part + 1j * c.half_length])
    end_vals = np.abs(np.asarray(f(ends)))
    end_max = np.max(end_vals, axis=-1) if end_vals.ndim else end_vals
    total = np.asarray(total)
    bad = (total > 0) & (end_max > 1e-13 * total)
    if np.any(bad):
        warnings.warn(f"integrand not negligible at |Im w| = {c.half_length}: "
                      f"{np.max(end_max):.3e} vs {np.max(total):.3e}",
                      QuadratureTailWarning, stacklevel=4)


def _self_converge(evaluate, c, value, tol, max_doublings):
    err = math.inf
    for _ in range(max_doublings):
        c = c.refined()
        new = evaluate(c)
        err = abs(new - value)
        value = new
        if err <= tol * max(1.0, abs(value)):
            break
    return value, err


def _check_finite(vals: np.ndarray, nodes: np.ndarray) -> None:
    bad = ~np.isfinite(vals)
    if np.any(bad):
        idx = np.flatnonzero(bad.ravel())[0]
        node = complex(np.broadcast_to(nodes, vals.shape).ravel()[idx])
        raise QuadratureError(f"integrand is not finite at node {node}", node=node)


@lru_cache(maxsize=64)
def _roots_of_unity(m: int) -> np.ndarray:
    out = np.exp(2j * math.pi * np.arange(m) / m)
    out.flags.writeable = False
    return out


@lru_cache(maxsize=64)
def _gauss_legendre(order: int) -> tuple[np.ndarray, np.ndarray]:
    x, w = np.polynomial.legendre.leggauss(order)
    x.flags.writeable = False
    w.flags.writeable = False
    return x, w


def _composite_gauss_legendre(a: float, b: float, panels: int, order: int):
    x, w = _gauss_legendre(order)
    edges = np.linspace(a, b, panels + 1)
    half = 0.5 * np.diff(edges)
    mid = 0.5 * (edges[1:] + edges[:-1])
    nodes = (mid[:, None] + half[:, None] * x[None, :]).ravel()
    weights = (half[:, None] * w[None, :]).ravel()
    return nodes, weights


def gauss_legendre_panels(a: float, b: float, panels: int, order: int = 20):
    """Composite Gauss-Legendre nodes/weights on ``[a, b]`` (real line)."""
    return _composite_gauss_legendre(a, b, panels, order)
