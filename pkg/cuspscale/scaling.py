"""Complex-scaling contours r ↦ r + i f(r) for the cusp and funnel ends.

A contour is built piecewise from three kinds of pieces (zero, an
exponentially flat start C₁e^{-C₂/(r-R)}, and straight lines), then
mollified by convolution with a smooth bump. The scaled principal symbol

    q = ρ²/(1 + if′)² + e^{±2(r+if)} α β(r+if) - 1

is evaluated on the mollified contour and four inequalities are certified
on grids:

- `scaling-ellipticity`: |re q| ≤ δ ⇒ im q ≤ -δ beyond the scaled collar,
- `no-bad-sign`: |re q| ≤ δ ⇒ im q ≤ 0 everywhere,
- `smallness-of-contour`: |q| ≤ δ′ ⇒ |f| + |f′| + |f″| ≤ ε′,
- `exponential-ellipticity`: im q ≤ -(2/3) α e^{2r} on the cusp plateau.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from enum import Enum
from functools import cache
import math
from typing import Optional

import numpy as np
from numpy.typing import ArrayLike, NDArray
from numpy.polynomial.legendre import leggauss
from scipy.interpolate import BPoly

from .cutoffs import Bump
from .errors import ConfigError, ContourConstructionError
from .geometry import End, WarpProfile, warp_derivative
from .logging import logger, log_finding

log = logger()

C2_DOUBLINGS = 10
NO_BAD_SIGN_TOL = 1e-14
MOLLIFIER_ORDER = 64
MOLLIFIER_NODES = 20


class Branch(Enum):
    IDENTICALLY_ZERO = 1
    SMALL = 2
    STANDARD = 3
    LARGE = 4

    def __str__(self):
        return self.name.lower().replace("_", "-")


class PieceKind(Enum):
    ZERO = 0
    FLAT = 1
    LINE = 2


@dataclass(frozen=True)
class Piece:
    """One piece of a raw contour on [lo, hi). FLAT is a·exp(-b/(r - lo)),
    LINE is a + b·(r - lo)."""

    kind: PieceKind
    lo: float
    hi: float
    a: float = 0.0
    b: float = 0.0
    tag: str = ""

    def evaluate(self, r: NDArray) -> tuple[NDArray, NDArray, NDArray]:
        match self.kind:
            case PieceKind.ZERO:
                z = np.zeros_like(r)
                return z, z, z
            case PieceKind.LINE:
                return self.a + self.b * (r - self.lo), np.full_like(r, self.b), np.zeros_like(r)
            case PieceKind.FLAT:
                # below 1e-3 the exponential underflows to 0 for b ≥ 1
                s = np.maximum(r - self.lo, 1e-3)
                e = np.where(r > self.lo, self.a * np.exp(-self.b / s), 0.0)
                d1 = e * self.b / s**2
                d2 = e * (self.b**2 / s**4 - 2 * self.b / s**3)
                return e, d1, d2


def default_target_delta(theta: float) -> float:
    return min(1 / 6, math.tan(theta) / 12) * 0.9


def cusp_threshold(R: float, theta: float) -> float:
    """α above which the cusp contour is identically zero."""
    tan = math.tan(theta)
    return tan / 4 * math.exp(-2 * (R + math.pi / tan))


def funnel_threshold(R: float) -> float:
    """α above which the funnel uses the three-region contour."""
    return 6 * math.exp(2 * R)


@dataclass(frozen=True)
class ContourSpec:
    end: End
    R: float
    theta: float
    alpha: float
    branch: Branch
    pieces: tuple[Piece, ...]
    region_start: float
    mollifier: float = 0.05
    C1: float = 0.0
    C2: float = 0.0
    slope: float = 0.0
    level_k: Optional[int] = None
    plateau_start: Optional[float] = None
    _f: Optional[BPoly] = field(default=None, repr=False, compare=False)
    _df: Optional[BPoly] = field(default=None, repr=False, compare=False)
    _span: tuple[float, float] = field(default=(0.0, 0.0), repr=False, compare=False)

    @property
    def breakpoints(self) -> list[float]:
        return [p.lo for p in self.pieces[1:]]

    def raw(self, r: ArrayLike) -> tuple[NDArray, NDArray, NDArray]:
        """The piecewise contour before mollification."""
        r = np.asarray(r, dtype=float)
        out = [np.zeros_like(r) for _ in range(3)]
        for p in self.pieces:
            mask = (r >= p.lo) & (r < p.hi)
            if np.any(mask):
                for o, v in zip(out, p.evaluate(r[mask])):
                    o[mask] = v
        return out[0], out[1], out[2]

    def region(self, r: float) -> str:
        for p in self.pieces:
            if p.lo <= r < p.hi:
                return p.tag
        return self.pieces[-1].tag


def eval_contour(c: ContourSpec, r: ArrayLike) -> tuple[NDArray, NDArray, NDArray]:
    """Mollified (f, f′, f″); exactly zero for r ≤ R - width and the
    analytic tail beyond the last breakpoint."""
    r = np.asarray(r, dtype=float)
    if c._f is None or c._df is None:
        return c.raw(r)
    lo, hi = c._span
    f, d1, d2 = c.raw(r)
    mid = (r > lo) & (r < hi)
    f = np.where(r <= lo, 0.0, f)
    d1 = np.where(r <= lo, 0.0, d1)
    d2 = np.where(r <= lo, 0.0, d2)
    if np.any(mid):
        x = r[mid]
        f[mid] = c._f(x)
        d1[mid] = c._df(x)
        d2[mid] = c._df.derivative()(x)
    return f, d1, d2


def _convolved_slope(c: ContourSpec, r: NDArray, order: int) -> NDArray:
    """(f′ * φ, f′ * φ′, f′ * φ″) at `r`, one row per node.

    The window [-w, w] is split where r - u crosses a breakpoint, and the
    Gauss-Legendre weights of each node are scaled to give the bump unit
    mass. Since φ′ and φ″ integrate to zero, f′(r) is subtracted before
    weighting them."""
    w = c.mollifier
    bump = Bump(w)
    bps = np.array(c.breakpoints)
    cuts = np.clip(r[:, None] - bps[None, :], -w, w)
    edge = np.full((len(r), 1), w)
    knots = np.sort(np.concatenate([-edge, cuts, edge], axis=1), axis=1)
    x, wts = leggauss(order)
    a, b = knots[:, :-1], knots[:, 1:]
    half = (b - a) / 2
    u = (a + b)[..., None] / 2 + half[..., None] * x
    weight = half[..., None] * wts
    _, slope, _ = c.raw((r[:, None, None] - u).ravel())
    slope = slope.reshape(u.shape)
    _, at_r, _ = c.raw(r)
    rest = slope - at_r[:, None, None]
    mass = np.sum(weight * bump(u), axis=(1, 2))
    d1 = np.sum(weight * slope * bump(u), axis=(1, 2)) / mass
    d2 = np.sum(weight * rest * bump.derivative(u), axis=(1, 2)) / mass
    d3 = np.sum(weight * rest * bump.second_derivative(u), axis=(1, 2)) / mass
    return np.column_stack([d1, d2, d3])


def _hermite_integral(x: NDArray, y: NDArray) -> float:
    """Exact integral of the quintic Hermite interpolant of rows (y, y′, y″)."""
    h = np.diff(x)
    y0, y1 = y[:-1], y[1:]
    return float(np.sum(
        h * (y0[:, 0] + y1[:, 0]) / 2 - h**2 * (y1[:, 1] - y0[:, 1]) / 10 + h**3 * (y0[:, 2] + y1[:, 2]) / 120))


def _mollify(c: ContourSpec, order: int = MOLLIFIER_ORDER) -> ContourSpec:
    """Mollify f′ and integrate it back.

    f′ is the quintic Hermite interpolant of the convolved slope and its two
    derivatives, and f is its exact antiderivative from lo = R - w, so f, f′
    and f″ are derivatives of one piecewise polynomial. At hi = last
    breakpoint + w the slope is pinned to the final line, and the rounding
    left in f(hi) is spread over the span by a wide bump."""
    w = c.mollifier
    lo, hi = c.R - w, c.pieces[-1].lo + w
    r = np.linspace(lo, hi, int(math.ceil((hi - lo) * MOLLIFIER_NODES / w)) + 1)
    slopes = _convolved_slope(c, r, order)
    slopes[0] = 0.0
    slopes[-1] = (c.pieces[-1].b, 0.0, 0.0)

    spread = Bump((hi - lo) / 2)
    s = r - (lo + hi) / 2
    correction = np.column_stack([spread(s), spread.derivative(s), spread.second_derivative(s)])
    end, _, _ = c.raw(np.array([hi]))
    gap = float(end[0]) - _hermite_integral(r, slopes)
    slopes += gap / _hermite_integral(r, correction) * correction

    df = BPoly.from_derivatives(r, slopes)
    return replace(c, _f=df.antiderivative(), _df=df, _span=(lo, hi))


def symbol_parts(
    end: End, f: NDArray, df: NDArray, profile: WarpProfile, r: NDArray, rho: NDArray, alpha: float
) -> tuple[NDArray, NDArray]:
    """re q and im q from the split of the exponential term into cos 2f and
    sin 2f against re β and im β."""
    beta = warp_derivative(profile, r + 1j * f)
    modulus = (1 + df**2) ** 2
    A = np.exp(2 * end.sign * r) * alpha
    c2, s2 = np.cos(2 * f), np.sin(2 * f)
    kinetic_re = (1 - df**2) * rho**2 / modulus
    kinetic_im = -2 * df * rho**2 / modulus
    if end is End.CUSP:
        re = kinetic_re + A * (c2 * beta.real - s2 * beta.imag) - 1
        im = kinetic_im + A * (c2 * beta.imag + s2 * beta.real)
    else:
        re = kinetic_re + A * (c2 * beta.real + s2 * beta.imag) - 1
        im = kinetic_im + A * (c2 * beta.imag - s2 * beta.real)
    return re, im


def _symbol(end: End, f, df, profile: WarpProfile, r, rho, alpha) -> NDArray[np.complex128]:
    z = r + 1j * f
    beta = warp_derivative(profile, z)
    return rho**2 / (1 + 1j * df) ** 2 + np.exp(2 * end.sign * z) * alpha * beta - 1


def scaled_symbol(
    end: End, c: ContourSpec, profile: WarpProfile, r: ArrayLike, rho: ArrayLike, alpha: float
) -> NDArray[np.complex128]:
    r, rho = np.broadcast_arrays(np.asarray(r, dtype=float), np.asarray(rho, dtype=float))
    f, df, _ = eval_contour(c, r)
    return _symbol(end, f, df, profile, r, rho, alpha)


@dataclass
class SymbolSample:
    r: NDArray[np.float64]
    rho: NDArray[np.float64]
    alpha: float
    q: NDArray[np.complex128]
    re: NDArray[np.float64]
    im: NDArray[np.float64]

    @property
    def split_error(self) -> float:
        return float(np.max(np.abs(self.q - (self.re + 1j * self.im)), initial=0.0))


def sample_symbol(
    c: ContourSpec, profile: WarpProfile, r: ArrayLike, rho: ArrayLike, *, mollified: bool = True
) -> SymbolSample:
    r, rho = np.broadcast_arrays(np.asarray(r, dtype=float), np.asarray(rho, dtype=float))
    f, df, _ = eval_contour(c, r) if mollified else c.raw(r)
    q = _symbol(c.end, f, df, profile, r, rho, c.alpha)
    re, im = symbol_parts(c.end, f, df, profile, r, rho, c.alpha)
    return SymbolSample(r, rho, c.alpha, q, re, im)


def _no_bad_sign(q: NDArray[np.complex128], delta: float) -> bool:
    active = np.abs(q.real) <= delta
    return not np.any(q.imag[active] > NO_BAD_SIGN_TOL)


def _flat_start(
    end: End, R: float, length: float, C1_of, profile: WarpProfile, alpha: float,
    delta: float, rho_max: float,
) -> tuple[float, float]:
    """Smallest C₂ in a doubling search for which the flat start keeps
    `no-bad-sign` on its own region. `C1_of(C2)` fixes the anchor."""
    r = np.linspace(R, R + length, 200)[:, None]
    rho = np.linspace(-rho_max, rho_max, 121)[None, :]
    for j in range(1, C2_DOUBLINGS + 1):
        C2 = 2.0**j
        C1 = C1_of(C2)
        f, df, _ = Piece(PieceKind.FLAT, R, R + length, C1, C2).evaluate(r)
        q = _symbol(end, f, df, profile, r, rho, alpha)
        if _no_bad_sign(q, delta):
            log.debug(f"flat start: C₂ = {C2}, C₁ = {C1:.6g}")
            return C1, C2
    raise ContourConstructionError(R, "no admissible C₂ for the exponentially flat start")


@cache
def _note_plateau_sine():
    log.info(
        "cusp plateau: the level 3π/4 + πk gives sin(2f) = -1; im q follows the "
        "displayed cos/sin split, not a sin(f) reading")


def _build_cusp(R, theta, alpha, profile, delta, rho_max) -> dict:
    tan = math.tan(theta)
    if alpha > cusp_threshold(R, theta):
        return dict(
            branch=Branch.IDENTICALLY_ZERO,
            pieces=(Piece(PieceKind.ZERO, -math.inf, math.inf, tag="zero"),),
            region_start=R + 0.5 * math.log(12 / tan) + math.pi / tan)

    C1, C2 = _flat_start(End.CUSP, R, 1.0, lambda c2: tan * math.exp(c2) / c2,
                         profile, alpha, delta, rho_max)
    zero = Piece(PieceKind.ZERO, -math.inf, R, tag="zero")
    if alpha == 0:
        return dict(
            branch=Branch.SMALL, C1=C1, C2=C2, slope=tan, region_start=R + 1,
            pieces=(zero, Piece(PieceKind.FLAT, R, R + 1, C1, C2, "I"),
                    Piece(PieceKind.LINE, R + 1, math.inf, tan / C2, tan, "II")))

    r_lo = 0.5 * math.log(tan / (8 * alpha))
    r_hi = 0.5 * math.log(3 * tan / (8 * alpha))
    f1 = tan / C2

    def line(r):
        return f1 + tan * (r - R - 1)

    def level(k):
        return 3 * math.pi / 4 + math.pi * k

    k = max(0, math.ceil((line(r_lo) - level(0)) / math.pi))
    if level(k) <= line(r_hi):
        slope = tan
        plateau = R + 1 + (level(k) - f1) / tan
    else:
        k = math.floor((line(r_lo) - level(0)) / math.pi)
        if k < 0:
            raise ContourConstructionError(r_lo, "contour cannot reach the level 3π/4 by R_C^α")
        slope = level(k) / (r_lo - R - 1 + 1 / C2)
        plateau = r_lo
        C1 = slope * math.exp(C2) / C2
        log.debug(f"cusp: level {k} outside the locating window; slope reduced to {slope:.6g}")
    _note_plateau_sine()
    return dict(
        branch=Branch.SMALL, C1=C1, C2=C2, slope=slope, level_k=k, plateau_start=plateau,
        region_start=R + 1,
        pieces=(zero, Piece(PieceKind.FLAT, R, R + 1, C1, C2, "I"),
                Piece(PieceKind.LINE, R + 1, plateau, slope / C2, slope, "II"),
                Piece(PieceKind.LINE, plateau, math.inf, level(k), 0.0, "III")))


def _build_funnel(R, theta, alpha, profile, delta, rho_max) -> dict:
    tan = math.tan(theta)
    zero = Piece(PieceKind.ZERO, -math.inf, R, tag="zero")
    R_F = 0.5 * math.log(12 / tan) + 1
    if alpha <= funnel_threshold(R):
        C1, C2 = _flat_start(End.FUNNEL, R, 1.0, lambda c2: tan * math.exp(c2) / c2,
                             profile, alpha, delta, rho_max)
        return dict(
            branch=Branch.STANDARD, C1=C1, C2=C2, slope=tan, region_start=R + R_F,
            pieces=(zero, Piece(PieceKind.FLAT, R, R + 1, C1, C2, "I"),
                    Piece(PieceKind.LINE, R + 1, math.inf, tan / C2, tan, "II")))

    r1 = 0.5 * math.log(alpha / 5)
    r_plateau_end = 0.5 * math.log(2 * alpha / tan)
    length = r1 - R
    C1, C2 = _flat_start(End.FUNNEL, R, length, lambda c2: math.pi / 8 * math.exp(c2 / length),
                         profile, alpha, delta, rho_max)
    return dict(
        branch=Branch.LARGE, C1=C1, C2=C2, slope=tan, region_start=R + R_F,
        plateau_start=r1,
        pieces=(zero, Piece(PieceKind.FLAT, R, r1, C1, C2, "I"),
                Piece(PieceKind.LINE, r1, r_plateau_end, math.pi / 8, 0.0, "II"),
                Piece(PieceKind.LINE, r_plateau_end, math.inf, math.pi / 8, tan, "III")))


def build_contour(
    end: End,
    R: float,
    theta: float,
    alpha: float,
    profile: WarpProfile,
    *,
    mollifier: float = 0.05,
    target_delta: Optional[float] = None,
    rho_max: float = 3.0,
) -> ContourSpec:
    """Construct and mollify the contour for one end and one mode value α."""
    if R < 1:
        raise ConfigError(f"Contour radius R must be at least 1, got {R}.")
    if not 0 < math.tan(theta) <= 0.5 + 1e-12:
        raise ConfigError(f"Scaling angle needs 0 < tan θ ≤ 1/2, got θ = {theta}.")
    if alpha < 0:
        raise ConfigError(f"Mode value α must be nonnegative, got {alpha}.")
    if mollifier <= 0:
        raise ConfigError("Mollifier width must be positive.")
    delta = target_delta or default_target_delta(theta)
    builder = _build_cusp if end is End.CUSP else _build_funnel
    parts = builder(R, theta, alpha, profile, delta, rho_max)
    raw = ContourSpec(end, R, theta, alpha, mollifier=mollifier, **parts)
    if raw.branch is Branch.IDENTICALLY_ZERO:
        return raw

    c = _mollify(raw)
    lo, hi = c._span
    r = np.linspace(max(lo, 1e-9), hi + 1, 2000)
    f, _, _ = eval_contour(c, r)
    bad = np.arctan2(f, r) >= profile.theta_max
    if np.any(bad):
        where = float(r[bad][0])
        raise ContourConstructionError(
            where, f"arg(r + if) leaves the cone |arg z| < {profile.theta_max:.4f}; enlarge R")
    log.debug(f"{end} contour, α = {alpha:.4g}: {c.branch}, breakpoints {c.breakpoints}")
    return c


def sweep_alphas(end: End, R: float, theta: float, count: int = 40) -> dict[Branch, list[float]]:
    """Log-uniform α values per branch, `count` each."""
    if end is End.CUSP:
        thr = cusp_threshold(R, theta)
        small = [0.0] + list(np.geomspace(thr * 1e-6, thr, count - 1))
        zero = list(np.geomspace(thr * (1 + 1e-9), 1e3, count))
        return {Branch.SMALL: small, Branch.IDENTICALLY_ZERO: zero}
    thr = funnel_threshold(R)
    standard = [0.0] + list(np.geomspace(1e-3, thr, count - 1))
    large = list(np.geomspace(thr * (1 + 1e-9), thr * 1e4, count))
    return {Branch.STANDARD: standard, Branch.LARGE: large}


@dataclass
class SymbolGrid:
    r_max: Optional[float] = None
    r_points: int = 4000
    rho_max: float = 3.0
    rho_points: int = 600
    target_delta: Optional[float] = None
    epsilons: tuple[float, ...] = (0.5, 0.2, 0.1, 0.05)
    mollified: bool = True

    def axes(self, c: ContourSpec) -> tuple[NDArray, NDArray]:
        last = max([p.lo for p in c.pieces[1:]] + [c.region_start, c.R])
        r_max = self.r_max or max(last + 10, c.R + 20)
        r = np.linspace(0.0, r_max, self.r_points)
        rho = np.linspace(-self.rho_max, self.rho_max, self.rho_points)
        return r, rho


@dataclass
class BoundEntry:
    id: str
    passed: bool
    delta: float
    margin: float
    active: dict[str, float]
    witness: dict[str, float]
    detail: dict[str, float] = field(default_factory=dict)


@dataclass
class BoundReport:
    end: End
    alpha: float
    branch: Branch
    target_delta: float
    entries: list[BoundEntry]
    split_error: float

    @property
    def passed(self) -> bool:
        return all(e.passed for e in self.entries)

    def entry(self, id: str) -> BoundEntry:
        return next(e for e in self.entries if e.id == id)

    def to_dict(self) -> dict:
        return {
            "end": str(self.end), "alpha": self.alpha, "branch": str(self.branch),
            "target_delta": self.target_delta, "split_error": self.split_error,
            "entries": [vars(e) for e in self.entries],
        }


def _active_region(r: NDArray, mask: NDArray) -> dict[str, float]:
    if not np.any(mask):
        return {"count": 0}
    rows = r[mask]
    return {"count": int(mask.sum()), "r_min": float(rows.min()), "r_max": float(rows.max())}


def _witness(s: SymbolSample, idx) -> dict[str, float]:
    return {"r": float(s.r[idx]), "rho": float(s.rho[idx]),
            "re_q": float(s.re[idx]), "im_q": float(s.im[idx])}


def verify_symbol_bounds(
    end: End, c: ContourSpec, profile: WarpProfile, grid: SymbolGrid | None = None
) -> BoundReport:
    """Empirical δ for each inequality over the (r, ρ) grid, compared with
    the target δ*. Failures are findings, not exceptions."""
    grid = grid or SymbolGrid()
    delta = grid.target_delta or default_target_delta(c.theta)
    r_axis, rho_axis = grid.axes(c)
    s = sample_symbol(c, profile, r_axis[:, None], rho_axis[None, :], mollified=grid.mollified)
    a, b = np.abs(s.re), s.im
    entries = []

    # |re q| ≤ δ ⇒ im q ≤ -δ holds exactly for δ < min max(|re q|, -im q)
    region = s.r >= c.region_start
    score = np.where(region, np.maximum(a, -b), np.inf)
    idx = np.unravel_index(np.argmin(score), score.shape)
    emp = float(score[idx])
    entries.append(BoundEntry(
        "scaling-ellipticity", emp >= delta, emp, emp - delta,
        _active_region(s.r, region & (a <= delta)), _witness(s, idx),
        {"region_start": c.region_start}))

    # |re q| ≤ δ ⇒ im q ≤ 0 holds for δ < min |re q| over bad-sign samples
    bad = b > NO_BAD_SIGN_TOL
    score = np.where(bad, a, np.inf)
    idx = np.unravel_index(np.argmin(score), score.shape)
    emp = float(score[idx])
    entries.append(BoundEntry(
        "no-bad-sign", emp >= delta, emp, emp - delta,
        _active_region(s.r, a <= delta), _witness(s, idx) if math.isfinite(emp) else {}))

    f, df, ddf = eval_contour(c, s.r) if grid.mollified else c.raw(s.r)
    size = np.abs(f) + np.abs(df) + np.abs(ddf)
    modulus = np.abs(s.q)
    table = {
        f"{eps:g}": float(np.min(np.where(size > eps, modulus, np.inf)))
        for eps in grid.epsilons
    }
    entries.append(BoundEntry(
        "smallness-of-contour", all(v > 0 for v in table.values()),
        min(table.values()), min(table.values()), {}, {}, table))

    if end is End.CUSP:
        if c.plateau_start is None or c.alpha == 0:
            entries.append(BoundEntry(
                "exponential-ellipticity", True, math.nan, math.nan, {}, {},
                {"applicable": 0.0}))
        else:
            region = s.r >= c.plateau_start
            scale = np.exp(2 * s.r) * c.alpha
            slack = np.where(region, (-2 / 3 * scale - b) / scale, np.inf)
            idx = np.unravel_index(np.argmin(slack), slack.shape)
            emp = float(slack[idx])
            entries.append(BoundEntry(
                "exponential-ellipticity", emp >= -1e-12, emp, emp,
                _active_region(s.r, region), _witness(s, idx), {"applicable": 1.0}))

    for e in entries:
        log_finding(f"{e.id}[{end}, α={c.alpha:.3g}]", e.passed, e.margin, e.witness)
    return BoundReport(end, c.alpha, c.branch, delta, entries, s.split_error)


def mollification_loss(end: End, c: ContourSpec, profile: WarpProfile, grid: SymbolGrid | None = None) -> dict[str, float]:
    """Relative loss of the empirical δ of each inequality when the raw
    contour is replaced by the mollified one."""
    grid = grid or SymbolGrid()
    raw = verify_symbol_bounds(end, c, profile, SymbolGrid(**{**vars(grid), "mollified": False}))
    smooth = verify_symbol_bounds(end, c, profile, SymbolGrid(**{**vars(grid), "mollified": True}))
    loss = {}
    for e in raw.entries:
        if e.id == "smallness-of-contour" or not math.isfinite(e.delta) or e.delta <= 0:
            continue
        loss[e.id] = max(0.0, (e.delta - smooth.entry(e.id).delta) / e.delta)
    return loss
