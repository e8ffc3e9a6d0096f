"""One-dimensional operators on the line with known resonances, scaled with
the same contours as the model ends: the Pöschl–Teller barrier and the
square barrier. Used to check the discretization against closed forms and
against transfer-matrix roots."""

from __future__ import annotations

from dataclasses import dataclass, field
import math
from typing import Callable

import numpy as np
from numpy.typing import NDArray
from scipy import optimize

from .errors import ConfigError
from .geometry import End, WarpKind, WarpProfile
from .operators import Grid1D, ModeOperator, Scheme, _is_scaled, assemble_operator, zero_contour
from .scaling import ContourSpec, build_contour, eval_contour

CONSTANT_ONE = WarpProfile(WarpKind.CONSTANT_ONE)


@dataclass
class LineChart:
    """A potential analytic near the real line on [-L, L]. The contour is
    odd, g(x) = sign(x) f(|x|), so both sides are outgoing."""

    V: Callable[[NDArray], NDArray]
    c: ContourSpec
    L: float
    lo: float = field(init=False)
    hi: float = field(init=False)

    def __post_init__(self):
        if self.L <= 0:
            raise ConfigError("The line chart needs L > 0.")
        self.lo, self.hi = -self.L, self.L

    @property
    def scaled(self) -> bool:
        return _is_scaled(self.c)

    def contour(self, x):
        x = np.asarray(x, dtype=float)
        f, df, ddf = eval_contour(self.c, np.abs(x))
        s = np.sign(x)
        return s * f, df, s * ddf

    def potential(self, x, alpha, h):
        g, _, _ = self.contour(x)
        return np.asarray(self.V(x + 1j * g), dtype=complex)

    def symbol(self, x, rho, alpha):
        g, dg, _ = self.contour(x)
        return rho**2 / (1 + 1j * dg) ** 2 + self.V(x + 1j * g) - 1

    def edges(self):
        return [("left", self.lo, 1.0), ("right", self.hi, -1.0)]


def line_contour(x0: float, theta: float, *, mollifier: float = 0.05, scaled: bool = True) -> ContourSpec:
    if not scaled:
        return zero_contour(End.FUNNEL, x0, theta, 0.0)
    return build_contour(End.FUNNEL, x0, theta, 0.0, CONSTANT_ONE, mollifier=mollifier)


def line_operator(chart: LineChart, h: float, N: int, scheme: Scheme = Scheme.FD4) -> ModeOperator:
    """-h²∂²_c + V on the chart; eigenvalues are energies, not shifted by 1."""
    return assemble_operator(chart, Grid1D(chart.lo, chart.hi, N, scheme), 0.0, h, shift=0.0)


def poschl_teller(V0: float) -> Callable[[NDArray], NDArray]:
    return lambda z: V0 / np.cosh(z) ** 2


def poschl_teller_resonances(V0: float, h: float = 1.0, count: int = 3) -> list[complex]:
    """Outgoing resonances E = h²k² of -h²∂² + V0 sech² x, with
    k = √(V0/h² - 1/4) - i(j + 1/2), V0/h² > 1/4. The mirrored roots -k̄
    give the same Re E."""
    if not V0 / h**2 > 0.25:
        raise ConfigError("The closed form needs V0/h² > 1/4.")
    root = math.sqrt(V0 / h**2 - 0.25)
    return [h**2 * complex(root, -(j + 0.5)) ** 2 for j in range(count)]


def square_barrier(V0: float, a: float) -> Callable[[NDArray], NDArray]:
    return lambda z: np.where(np.abs(np.real(z)) < a, V0, 0.0) + 0j


def barrier_grid_size(a: float, L: float, cells: int) -> tuple[float, int]:
    """Half-length and node count placing x = ±a halfway between nodes,
    with `cells` nodes across the barrier."""
    dx = 2 * a / cells
    k = max(1, round((L + a) / dx - 0.5))
    return (k + 0.5) * dx - a, 2 * k - cells


def transfer_matrix(E: complex, interfaces: list[float], values: list[float], h: float = 1.0) -> NDArray:
    """Map from left to right coefficients of (e^{ikx}, e^{-ikx}) across a
    piecewise constant potential; values[j] holds left of interfaces[j]."""
    if len(values) != len(interfaces) + 1:
        raise ConfigError("A piecewise potential needs one more value than interfaces.")
    ks = [np.sqrt(complex(E - v)) / h for v in values]

    def P(k, x):
        e = np.exp(1j * k * x)
        return np.array([[e, 1 / e], [1j * k * e, -1j * k / e]])

    M = np.eye(2, dtype=complex)
    for x, k1, k2 in zip(interfaces, ks[:-1], ks[1:]):
        M = np.linalg.solve(P(k2, x), P(k1, x)) @ M
    return M


def barrier_resonance(V0: float, a: float, guess: complex, h: float = 1.0) -> complex:
    """Root of the outgoing condition M22(E) = 0 near `guess`."""
    def condition(E):
        return transfer_matrix(E, [-a, a], [0.0, V0, 0.0], h)[1, 1]

    x0 = complex(guess)
    return complex(optimize.newton(condition, x0, x1=x0 * (1 + 1e-4) + 1e-4j, tol=1e-12, maxiter=200))
