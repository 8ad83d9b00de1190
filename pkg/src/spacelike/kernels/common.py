from __future__ import annotations

from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class SpaceTimePoint:
    """A position ``x`` observed on level ``n`` at time ``t``."""

    x: float
    n: int
    t: float

    def __post_init__(self):
        if int(self.n) != self.n or self.n < 1:
            raise ValueError(f"level must be a positive integer, got {self.n}")
        if self.t < 0:
            raise ValueError(f"time must be >= 0, got {self.t}")


@dataclass(frozen=True)
class LueParams:
    """Row count ``p`` of the rectangular Brownian matrix; every level ``n <= p``."""

    p: int

    def __post_init__(self):
        if self.p < 1:
            raise ValueError("p must be a positive integer")

    def check_level(self, n: int) -> None:
        if n > self.p:
            raise ValueError(f"level {n} exceeds p = {self.p}")


@dataclass(frozen=True)
class KernelValue:
    value: float
    quadrature_error_estimate: float = 0.0

    def __float__(self) -> float:
        return self.value


def precedes(a: SpaceTimePoint, b: SpaceTimePoint) -> bool:
    """Space-like order: ``n_a <= n_b``, ``t_a >= t_b`` and ``(n_a, t_a) != (n_b, t_b)``."""
    return precedes_nt(a.n, a.t, b.n, b.t)


def precedes_nt(n1: int, t1: float, n2: int, t2: float) -> bool:
    return n1 <= n2 and t1 >= t2 and (n1, t1) != (n2, t2)


def real_part_checked(values: np.ndarray, scale: float | np.ndarray = 1.0,
                      tol: float = 1e-10) -> np.ndarray:
    """Drop the imaginary part after checking it is quadrature noise."""
    values = np.asarray(values)
    resid = np.abs(values.imag) / np.maximum(1.0, np.abs(scale))
    if np.any(resid > tol):
        raise ArithmeticError(f"kernel has imaginary residue {np.max(resid):.2e} > {tol:.0e}")
    return values.real
