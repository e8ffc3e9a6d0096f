"""Smooth cutoff functions shared by the contour mollifier, the glued warp,
the absorbing potential and the escape fields.

All functions accept numpy arrays and return derivatives in closed form, so
that callers never difference them numerically.
"""

import numpy as np
from numpy.typing import ArrayLike, NDArray
from scipy import integrate


def _flat(x: NDArray[np.float64]) -> tuple[NDArray, NDArray, NDArray]:
    """exp(-1/x) for x > 0 and its first two derivatives."""
    pos = x > 0
    xs = np.where(pos, x, 1.0)
    a = np.where(pos, np.exp(-1.0 / xs), 0.0)
    a1 = np.where(pos, a / xs**2, 0.0)
    a2 = np.where(pos, a * (1.0 / xs**4 - 2.0 / xs**3), 0.0)
    return a, a1, a2


def smooth_step(x: ArrayLike) -> tuple[NDArray, NDArray, NDArray]:
    """C-infinity step: 0 for x <= 0, 1 for x >= 1. Returns (value, d/dx, d²/dx²)."""
    x = np.asarray(x, dtype=float)
    a, a1, a2 = _flat(x)
    b, b1, b2 = _flat(1.0 - x)
    b1, b2 = -b1, b2
    s = a + b
    s1 = a1 + b1
    n = a1 * b - a * b1
    n1 = a2 * b - a * b2
    value = a / s
    d1 = n / s**2
    d2 = (n1 * s - 2.0 * n * s1) / s**3
    return value, d1, d2


def ramp(x: ArrayLike, lo: float, hi: float) -> tuple[NDArray, NDArray, NDArray]:
    """`smooth_step` rescaled to rise on [lo, hi]."""
    width = hi - lo
    v, d1, d2 = smooth_step((np.asarray(x, dtype=float) - lo) / width)
    return v, d1 / width, d2 / width**2


class Bump:
    """Normalized C-infinity bump supported on [-width, width]."""

    def __init__(self, width: float):
        self.width = width
        mass, _ = integrate.quad(lambda s: float(self._shape(np.array(s))[0]), -1.0, 1.0)
        self._norm = 1.0 / (mass * width)

    @staticmethod
    def _shape(u: NDArray) -> tuple[NDArray, NDArray, NDArray]:
        inside = np.abs(u) < 1.0
        us = np.where(inside, u, 0.0)
        d = np.where(inside, 1.0 - us**2, 1.0)
        g = np.where(inside, np.exp(-1.0 / d), 0.0)
        dg = g * (-2.0 * us) / d**2
        ddg = g * (4.0 * us**2 / d**4 - 2.0 / d**2 - 8.0 * us**2 / d**3)
        return g, dg, ddg

    def __call__(self, s: ArrayLike) -> NDArray:
        g, _, _ = self._shape(np.asarray(s, dtype=float) / self.width)
        return self._norm * g

    def derivative(self, s: ArrayLike) -> NDArray:
        _, dg, _ = self._shape(np.asarray(s, dtype=float) / self.width)
        return self._norm * dg / self.width

    def second_derivative(self, s: ArrayLike) -> NDArray:
        _, _, ddg = self._shape(np.asarray(s, dtype=float) / self.width)
        return self._norm * ddg / self.width**2
