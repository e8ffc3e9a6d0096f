"""Dense discretizations of the scaled per-mode operators

    Q(α) = -h² (a ∂² + b ∂) + α e^{±2z} β(z) + h² V(z) - 1,   z = x + i g(x),

with a = (1 + ig′)⁻² and b = -ig″(1 + ig′)⁻³, which is the square of the
contour derivative (1 + ig′)⁻¹ ∂ written out. A chart is either one end on
its half line, or a glued model in its global coordinate.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum
from functools import cached_property
import math
from typing import Optional, Protocol

import numpy as np
from numpy.typing import ArrayLike, NDArray
from scipy import linalg, sparse

from .cutoffs import smooth_step
from .errors import ConfigError, EigensolveError, NonEllipticTruncation
from .geometry import End, GluedWarp, ModelSurface, WarpProfile, glued_potential_V, potential_V, warp_derivative
from .logging import logger
from .scaling import Branch, ContourSpec, Piece, PieceKind, eval_contour

log = logger()

MIN_NODES = 64
TRUNCATION_MARGIN = 5.0
CERTIFY_WIDTH = 2.0


class Scheme(Enum):
    FD4 = 1
    SPECTRAL = 2

    def __str__(self):
        return self.name.lower()


class Variant(Enum):
    SCALED = 1
    SCALED_CAP = 2
    UNSCALED_CAP = 3

    def __str__(self):
        return self.name.lower().replace("_", "+")


def chebyshev(n: int) -> tuple[NDArray, NDArray]:
    """Gauss-Lobatto points cos(πk/n) and the differentiation matrix."""
    k = np.arange(n + 1)
    x = np.cos(np.pi * k / n)
    c = np.hstack([2.0, np.ones(n - 1), 2.0]) * (-1.0) ** k
    dx = x[:, None] - x[None, :]
    D = np.outer(c, 1.0 / c) / (dx + np.eye(n + 1))
    return x, D - np.diag(D.sum(axis=1))


@dataclass
class Grid1D:
    """Interior nodes of [lo, hi] with Dirichlet conditions at both ends."""

    lo: float
    hi: float
    N: int = 1024
    scheme: Scheme = Scheme.FD4

    def __post_init__(self):
        if self.N < MIN_NODES:
            raise ConfigError(f"A grid needs at least {MIN_NODES} nodes, got {self.N}.")
        if not self.hi > self.lo:
            raise ConfigError(f"Empty truncation interval [{self.lo}, {self.hi}].")

    @property
    def length(self) -> float:
        return self.hi - self.lo

    @property
    def dx(self) -> float:
        return self.length / (self.N + 1)

    @cached_property
    def nodes(self) -> NDArray[np.float64]:
        if self.scheme is Scheme.FD4:
            return self.lo + self.dx * np.arange(1, self.N + 1)
        x, _ = chebyshev(self.N + 1)
        return (self.lo + self.hi) / 2 + self.length / 2 * x[1:-1]

    @cached_property
    def derivatives(self) -> tuple[NDArray, NDArray]:
        """(D1, D2) acting on interior values."""
        if self.scheme is Scheme.SPECTRAL:
            _, D = chebyshev(self.N + 1)
            D = D * (2 / self.length)
            return D[1:-1, 1:-1], (D @ D)[1:-1, 1:-1]
        # ghost values u_{-1} = -u_1 and u_{N+2} = -u_N
        n, dx = self.N, self.dx
        D1 = sparse.diags([1, -8, 8, -1], [-2, -1, 1, 2], shape=(n, n)).toarray()
        D2 = sparse.diags([-1, 16, -30, 16, -1], [-2, -1, 0, 1, 2], shape=(n, n)).toarray()
        D1[0, 0] -= 1
        D1[-1, -1] += 1
        D2[0, 0] += 1
        D2[-1, -1] += 1
        return D1 / (12 * dx), D2 / (12 * dx**2)


def dirichlet_reference(grid: Grid1D, h: float, count: int) -> NDArray[np.float64]:
    """Lowest eigenvalues of -h²∂² - 1 with Dirichlet ends: the exact
    spectrum of the discrete stencil for FD4, the continuum one otherwise."""
    k = np.arange(1, count + 1)
    if grid.scheme is Scheme.FD4:
        t = k * np.pi * grid.dx / grid.length
        return -1 + h**2 * (30 - 32 * np.cos(t) + 2 * np.cos(2 * t)) / (12 * grid.dx**2)
    return -1 + h**2 * (k * np.pi / grid.length) ** 2


def kinetic_coefficients(dg: NDArray, ddg: NDArray) -> tuple[NDArray, NDArray]:
    """Coefficients (a, b) of ∂² and ∂ in ((1 + ig′)⁻¹ ∂)²."""
    w = 1 / (1 + 1j * dg)
    return w**2, -1j * ddg * w**3


def chain_rule_residual(x: NDArray, g: NDArray, dg: NDArray, ddg: NDArray) -> float:
    """Largest error of a∂²U + b∂U against U_zz for U = z and U = z², with
    z = x + ig(x). Both are exact in z, so (a, b) must reproduce 0 and 2."""
    a, b = kinetic_coefficients(dg, ddg)
    z, dz, ddz = x + 1j * g, 1 + 1j * dg, 1j * ddg
    linear = a * ddz + b * dz
    square = a * (2 * dz**2 + 2 * z * ddz) + b * 2 * z * dz - 2
    scale = 1 + np.abs(z) * np.abs(ddg)
    return float(np.max(np.maximum(np.abs(linear), np.abs(square)) / scale, initial=0.0))


def zero_contour(end: End, R: float, theta: float, alpha: float) -> ContourSpec:
    return ContourSpec(
        end, R, theta, alpha, Branch.IDENTICALLY_ZERO,
        (Piece(PieceKind.ZERO, -math.inf, math.inf, tag="zero"),), math.inf)


def truncation_radius(c: ContourSpec) -> float:
    """Outer edge: the last breakpoint plus a margin, or where the
    exponential term of an unscaled cusp contour dominates."""
    if len(c.pieces) > 1:
        return c.pieces[-1].lo + TRUNCATION_MARGIN
    if c.end is End.CUSP and c.alpha > 0:
        return max(c.R + TRUNCATION_MARGIN, 0.5 * math.log(2 / c.alpha) + CERTIFY_WIDTH)
    return c.R + TRUNCATION_MARGIN


def _is_scaled(c: ContourSpec) -> bool:
    return len(c.pieces) > 1


class OperatorChart(Protocol):
    lo: float
    hi: float

    def contour(self, x: NDArray) -> tuple[NDArray, NDArray, NDArray]: ...
    def potential(self, x: NDArray, alpha: float, h: float) -> NDArray: ...
    def symbol(self, x: NDArray, rho: NDArray, alpha: float) -> NDArray: ...
    def edges(self) -> list[tuple[str, float, float]]: ...
    @property
    def scaled(self) -> bool: ...


@dataclass
class EndChart:
    """One end on [0, r_hi] in its own radial coordinate."""

    end: End
    profile: WarpProfile
    c: ContourSpec
    n: int = 2
    lo: float = 0.0
    hi: float = field(init=False)

    def __post_init__(self):
        self.hi = truncation_radius(self.c)

    @property
    def scaled(self) -> bool:
        return _is_scaled(self.c)

    def contour(self, x):
        return eval_contour(self.c, x)

    def _exponential(self, x, alpha):
        f, _, _ = self.contour(x)
        z = x + 1j * f
        return z, alpha * np.exp(2 * self.end.sign * z) * warp_derivative(self.profile, z)

    def potential(self, x, alpha, h):
        z, term = self._exponential(x, alpha)
        return term + h**2 * potential_V(self.end, self.profile, self.n, z)

    def symbol(self, x, rho, alpha):
        _, df, _ = self.contour(x)
        _, term = self._exponential(x, alpha)
        return rho**2 / (1 + 1j * df) ** 2 + term - 1

    def edges(self):
        elliptic_tail = self.end is End.CUSP and self.c.alpha > 0
        return [("outer", self.hi, -1.0)] if self.scaled or elliptic_tail else []


@dataclass
class GluedChart:
    """Global coordinate t ∈ [-L_F, L_C]: the cusp contour acts through t,
    the funnel contour through -t, and the collar is unscaled."""

    model: ModelSurface
    cusp: ContourSpec
    funnel: ContourSpec
    lo: float = field(init=False)
    hi: float = field(init=False)

    def __post_init__(self):
        self.lo = -truncation_radius(self.funnel)
        self.hi = truncation_radius(self.cusp)
        p = self.model.perturbation
        if p is not None:
            reach = min(self.cusp.R, self.funnel.R) - self.cusp.mollifier
            if p.support[0] < -reach or p.support[1] > reach:
                raise ConfigError("The perturbation must be supported where the contours vanish.")

    @property
    def scaled(self) -> bool:
        return _is_scaled(self.cusp) or _is_scaled(self.funnel)

    @property
    def warp(self) -> GluedWarp:
        return self.model.warp

    def contour(self, x):
        x = np.asarray(x, dtype=float)
        fc, dfc, ddfc = eval_contour(self.cusp, np.abs(x))
        ff, dff, ddff = eval_contour(self.funnel, np.abs(x))
        right = x > 0
        return (np.where(right, fc, -ff), np.where(right, dfc, dff), np.where(right, ddfc, -ddff))

    def _exponential(self, x, alpha):
        g, _, _ = self.contour(x)
        z = x + 1j * g
        return z, alpha * np.exp(2 * z) * self.warp.derivative(z)

    def potential(self, x, alpha, h):
        z, term = self._exponential(x, alpha)
        V = glued_potential_V(self.warp, self.model.n, z)
        out = term + h**2 * V
        if self.model.perturbation is not None:
            out = out + h**2 * self.model.perturbation(x)
        return out

    def symbol(self, x, rho, alpha):
        _, dg, _ = self.contour(x)
        _, term = self._exponential(x, alpha)
        return rho**2 / (1 + 1j * dg) ** 2 + term - 1

    def edges(self):
        return [("funnel", self.lo, 1.0), ("cusp", self.hi, -1.0)]


def make_chart(m: ModelSurface, c_cusp: Optional[ContourSpec], c_funnel: Optional[ContourSpec]) -> OperatorChart:
    if c_cusp is not None and c_funnel is not None:
        if not m.glue:
            raise ConfigError("Both contours given for a model without a global chart.")
        return GluedChart(m, c_cusp, c_funnel)
    if c_cusp is not None:
        return EndChart(End.CUSP, m.cusp, c_cusp, m.n)
    if c_funnel is not None:
        return EndChart(End.FUNNEL, m.funnel, c_funnel, m.n)
    raise ConfigError("At least one contour is needed to build a mode operator.")


@dataclass
class ModeOperator:
    matrix: NDArray[np.complex128]
    h: float
    alpha: float
    mode: int
    variant: Variant
    grid: Grid1D
    chart: OperatorChart
    second_order: NDArray[np.complex128]
    first_order: NDArray[np.complex128]
    potential: NDArray[np.complex128]
    _schur: Optional[tuple[NDArray, NDArray]] = field(default=None, init=False, repr=False)

    @property
    def nodes(self) -> NDArray[np.float64]:
        return self.grid.nodes


def certify_truncation(
    chart: OperatorChart, alpha: float, *, radius: float = 0.0, floor: float = 0.05,
    absorption=None, rho_max: float = 3.0,
) -> dict[str, dict[str, float]]:
    """min |q - iW| - radius over the last stretch before each truncation
    edge; raises `NonEllipticTruncation` below `floor`."""
    out = {}
    rho = np.linspace(-rho_max, rho_max, 121)[None, :]
    for name, edge, inward in chart.edges():
        x = edge + inward * np.linspace(0.0, CERTIFY_WIDTH, 81)
        q = chart.symbol(x[:, None], rho, alpha)
        if absorption is not None:
            q = q - 1j * absorption(x)[:, None]
        cert = float(np.min(np.abs(q))) - radius
        record = {"edge": edge, "min_abs_q": cert + radius, "radius": radius, "floor": floor}
        if cert < floor:
            raise NonEllipticTruncation(name, record)
        out[name] = record
    return out


def build_mode_operator(
    m: ModelSurface,
    c_cusp: Optional[ContourSpec],
    c_funnel: Optional[ContourSpec],
    alpha: float,
    h: float,
    grid: Grid1D,
    *,
    mode: int = 0,
    window_radius: float = 0.0,
    floor: float = 0.05,
    certify: bool = True,
) -> ModeOperator:
    """Assemble -h²(a D2 + b D1) + potential - 1 on the interior nodes."""
    if not 0 < h < 1:
        raise ConfigError(f"h must lie in (0, 1), got {h}.")
    chart = make_chart(m, c_cusp, c_funnel)
    if abs(grid.lo - chart.lo) > 1e-9 or abs(grid.hi - chart.hi) > 1e-9:
        raise ConfigError(
            f"Grid [{grid.lo:.6g}, {grid.hi:.6g}] does not match the chart [{chart.lo:.6g}, {chart.hi:.6g}].")
    if certify and chart.scaled:
        certify_truncation(chart, alpha, radius=window_radius, floor=floor)

    return assemble_operator(chart, grid, alpha, h, mode=mode)


def assemble_operator(
    chart: OperatorChart, grid: Grid1D, alpha: float, h: float, *, mode: int = 0, shift: float = 1.0
) -> ModeOperator:
    """-h²(a D2 + b D1) + potential - shift on the grid nodes of `chart`."""
    x = grid.nodes
    g, dg, ddg = chart.contour(x)
    # in hD = -ih∂ the first-order part is -h g″(1 + ig′)⁻³ (hD)
    a, b = kinetic_coefficients(dg, ddg)
    assert chain_rule_residual(x, g, dg, ddg) < 1e-10
    D1, D2 = grid.derivatives
    pot = chart.potential(x, alpha, h)
    matrix = -h**2 * (a[:, None] * D2 + b[:, None] * D1) + np.diag(pot - shift)
    if not np.all(np.isfinite(matrix)):
        raise EigensolveError("non-finite matrix entries", math.inf)
    log.debug(f"mode {mode}: α = {alpha:.4g}, h = {h}, N = {grid.N}, chart [{chart.lo:.3f}, {chart.hi:.3f}]")
    return ModeOperator(matrix, h, alpha, mode, Variant.SCALED, grid, chart, -h**2 * a, -h**2 * b, pot)


def chart_grid(m: ModelSurface, c_cusp, c_funnel, N: int, scheme: Scheme = Scheme.FD4) -> Grid1D:
    chart = make_chart(m, c_cusp, c_funnel)
    return Grid1D(chart.lo, chart.hi, N, scheme)


class CapPlacement(Enum):
    INTERIOR = 1
    EXTERIOR = 2


@dataclass
class CapProfile:
    """Absorbing potential W. `interior`: W = amplitude on x ≤ 0, smoothly
    down to 0 at x = 1, placed at W(r - R - R_j). `exterior`: quadratic ramp
    strength·((|x| - start)/(edge - start))² beyond `start`."""

    placement: CapPlacement = CapPlacement.INTERIOR
    amplitude: float = 1.0
    start: float = 0.0
    strength: float = 1.0

    def __post_init__(self):
        if self.placement is CapPlacement.INTERIOR and self.amplitude < 1:
            raise ConfigError("An interior absorbing potential needs W ≥ 1 on (-∞, 0].")
        if self.strength < 0:
            raise ConfigError("Absorbing strength must be nonnegative.")

    def shape(self, x: ArrayLike) -> NDArray[np.float64]:
        v, _, _ = smooth_step(x)
        return self.amplitude * (1 - v)


def cap_values(op: ModeOperator, W: CapProfile, R: float, R_j) -> NDArray[np.float64]:
    x = op.nodes
    glued = isinstance(op.chart, GluedChart)
    if W.placement is CapPlacement.EXTERIOR:
        edge = max(abs(op.grid.lo), abs(op.grid.hi))
        if not W.start < edge:
            raise ConfigError("Exterior absorption must start inside the grid.")
        s = np.clip((np.abs(x) - W.start) / (edge - W.start), 0.0, None)
        return W.strength * s**2
    if glued:
        rc, rf = R_j if isinstance(R_j, tuple) else (R_j, R_j)
        return W.shape(np.maximum(x - R - rc, -x - R - rf))
    return W.shape(x - R - float(R_j))


def build_cap_operator(base: ModeOperator, W: CapProfile, R: float, R_j: float | tuple[float, float]) -> ModeOperator:
    """Q - iW on the diagonal at the nodes."""
    w = cap_values(base, W, R, R_j)
    variant = Variant.SCALED_CAP if base.chart.scaled else Variant.UNSCALED_CAP
    return ModeOperator(
        base.matrix - 1j * np.diag(w), base.h, base.alpha, base.mode, variant, base.grid,
        base.chart, base.second_order, base.first_order, base.potential - 1j * w)


def schur_form(op: ModeOperator) -> tuple[NDArray, NDArray]:
    if op._schur is None:
        try:
            T, Z = linalg.schur(op.matrix, output="complex")
        except (linalg.LinAlgError, ValueError) as e:
            raise EigensolveError(f"Schur decomposition failed: {e}", float(np.linalg.cond(op.matrix))) from e
        op._schur = (T, Z)
    return op._schur


def mode_eigenvalues(op: ModeOperator) -> NDArray[np.complex128]:
    """All eigenvalues, ordered by (re, im)."""
    T, _ = schur_form(op)
    ev = np.diag(T).copy()
    return ev[np.lexsort((ev.imag, ev.real))]


def smallest_singular_value(
    op: ModeOperator, zeta: complex, *, tol: float = 1e-10, iterations: int = 200, exact: bool = False
) -> float:
    """σ_min(Q - ζ) from the triangular Schur factor A = T - ζ.

    Inverse iteration on (AᴴA)⁻¹ stops once the Rayleigh residual is below
    `tol` relative to the Rayleigh quotient ν, and returns 1/√ν. Without
    convergence, or with `exact`, the full singular values of A are used."""
    T, _ = schur_form(op)
    A = T - zeta * np.eye(T.shape[0])
    if not exact:
        x = np.ones(A.shape[0], dtype=complex) / math.sqrt(A.shape[0])
        try:
            for _ in range(iterations):
                v = linalg.solve_triangular(A, x, trans="C", lower=False)
                w = linalg.solve_triangular(A, v, lower=False)
                if not np.all(np.isfinite(w)):
                    return 0.0
                nu = float(np.vdot(x, w).real)
                if np.linalg.norm(w - nu * x) <= tol * nu:
                    return 1 / math.sqrt(nu)
                x = w / np.linalg.norm(w)
        except linalg.LinAlgError:
            return 0.0
        log.debug(f"σ_min at ζ = {zeta:.4g}: inverse iteration did not settle, using the full SVD")
    return float(linalg.svdvals(A)[-1])


def resolvent_floor(op: ModeOperator, zetas, *, exact: bool = False) -> list[tuple[complex, float]]:
    return [(complex(z), smallest_singular_value(op, z, exact=exact)) for z in zetas]


def resolvent_trend(op: ModeOperator, im_values, re: float = 0.0) -> list[dict[str, float]]:
    """σ_min(Q - ζ) along ζ = re + i·t with its ratio to 1 + t."""
    rows = []
    for t in im_values:
        s = smallest_singular_value(op, complex(re, t))
        rows.append({"im_zeta": float(t), "sigma_min": s, "ratio": s / (1 + float(t))})
    return rows


def fourier_laplacian(points: int, length: float) -> NDArray[np.float64]:
    """-∂²_y on a circle of given length, spectral on an odd number of points."""
    if points % 2 == 0:
        raise ConfigError("The Fourier grid needs an odd number of points.")
    k = 2 * np.pi / length * np.fft.fftfreq(points, 1.0 / points)
    return np.real(np.fft.ifft(k[:, None] ** 2 * np.fft.fft(np.eye(points), axis=0), axis=0))


def tensor_operator(m: ModelSurface, h: float, grid: Grid1D, points: int) -> tuple[NDArray, NDArray]:
    """Unscaled 2-D operator on a glued model over [lo, hi] × circle, with
    the mode weight e^{2t}B(t) multiplying h²(-∂²_y). Returns the matrix and
    the circle Laplacian's eigenvalues."""
    if m.cross_section.circle_length is None:
        raise ConfigError("The tensor operator needs a circle cross-section.")
    x = grid.nodes
    D1, D2 = grid.derivatives
    warp = m.warp
    radial = -h**2 * D2 + np.diag(h**2 * glued_potential_V(warp, m.n, x).real - 1)
    weight = np.exp(2 * x) * warp.derivative(x).real
    L = fourier_laplacian(points, m.cross_section.circle_length)
    k = 2 * np.pi / m.cross_section.circle_length * np.fft.fftfreq(points, 1.0 / points)
    full = np.kron(np.eye(points), radial) + np.kron(h**2 * L, np.diag(weight))
    return full, k**2


def radial_operator(m: ModelSurface, h: float, grid: Grid1D, lam: float) -> NDArray:
    """The unscaled mode operator matching `tensor_operator` for one λ."""
    x = grid.nodes
    _, D2 = grid.derivatives
    warp = m.warp
    weight = np.exp(2 * x) * warp.derivative(x).real
    return -h**2 * D2 + np.diag(h**2 * glued_potential_V(warp, m.n, x).real + h**2 * lam * weight - 1)
