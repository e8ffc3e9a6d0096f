"""Resonance scans of a glued model in the window {|ζ| ≤ C h log(1/h)}.

Modes below a certified cutoff are solved as dense eigenproblems; modes
above it are skipped because their scaled symbol stays away from the
window. Eigenvalues that move under N → 2N refinement are flagged spurious.
"""

from __future__ import annotations

import cmath
from dataclasses import dataclass, field
from functools import lru_cache
import math
from typing import Optional

import numpy as np
from numpy.typing import NDArray

from .errors import CutoffNotFound, UnsupportedModelError
from .geometry import End, ModelSurface, WarpProfile
from .logging import logger
from .operators import (
    Grid1D, ModeOperator, Scheme, build_mode_operator, make_chart, mode_eigenvalues, smallest_singular_value,
)
from .scaling import ContourSpec, build_contour

log = logger()


def zeta_to_s(zeta: complex, h: float, n: int) -> tuple[complex, complex]:
    """Both roots of s(n - 1 - s) = λ with λ = (ζ + 1)/h² + (n - 1)²/4,
    smaller real part first."""
    lam = (zeta + 1) / h**2 + (n - 1) ** 2 / 4
    root = cmath.sqrt((n - 1) ** 2 - 4 * lam)
    a, b = ((n - 1) - root) / 2, ((n - 1) + root) / 2
    return (a, b) if a.real <= b.real else (b, a)


def s_to_zeta(s: complex, h: float, n: int) -> complex:
    return h**2 * (s * (n - 1 - s) - (n - 1) ** 2 / 4) - 1


def window_radius(C: float, h: float) -> float:
    return C * h * math.log(1 / h)


def boundary_samples(radius: float, count: int = 64) -> NDArray[np.complex128]:
    return radius * np.exp(2j * np.pi * np.arange(count) / count)


@dataclass
class ScanPlan:
    R: float = 5.0
    theta: Optional[float] = None
    mollifier: float = 0.05
    points: int = 1024
    scheme: Scheme = Scheme.FD4
    refine: bool = True
    rel_tol: float = 1e-3
    confirm_tol: float = 1e-4
    boundary: int = 64
    scan_radius: float = 1.5
    cutoff_floor: float = 0.01
    certify_floor: float = 0.05
    max_modes: int = 64
    rho_max: float = 3.0
    sigma_tol: float = 1e-10


@lru_cache(maxsize=512)
def _contour(end: End, R: float, theta: float, alpha: float, profile: WarpProfile, mollifier: float) -> ContourSpec:
    return build_contour(end, R, theta, alpha, profile, mollifier=mollifier)


def mode_contours(m: ModelSurface, plan: ScanPlan, alpha: float) -> tuple[ContourSpec, ContourSpec]:
    theta = plan.theta or m.theta
    return (_contour(End.CUSP, plan.R, theta, alpha, m.cusp, plan.mollifier),
            _contour(End.FUNNEL, plan.R, theta, alpha, m.funnel, plan.mollifier))


def mode_floor(m: ModelSurface, plan: ScanPlan, alpha: float, radius: float) -> float:
    """min |q| - window radius over the chart, a lower bound for
    min |q - ζ| with ζ in the window."""
    chart = make_chart(m, *mode_contours(m, plan, alpha))
    t = np.linspace(chart.lo, chart.hi, 801)[:, None]
    rho = np.linspace(-plan.rho_max, plan.rho_max, 241)[None, :]
    return float(np.min(np.abs(chart.symbol(t, rho, alpha)))) - radius


@dataclass
class ModeCutoff:
    M: int
    floors: list[dict[str, float]]


def estimate_mode_cutoff(m: ModelSurface, h: float, C: float, plan: ScanPlan | None = None) -> ModeCutoff:
    """Smallest M such that every mode from M on has a positive symbol
    floor over the window, checked on the listed modes and on α up to 100
    times the cutoff value."""
    plan = plan or ScanPlan()
    if not m.glue:
        raise UnsupportedModelError("Resonance scans need a glued (global chart) model.")
    radius = window_radius(C, h)
    levels = m.cross_section.levels()[: plan.max_modes]
    floors = []
    for j, (lam, mult) in enumerate(levels):
        alpha = h**2 * lam
        floors.append({"mode": j, "lambda": lam, "alpha": alpha,
                       "floor": mode_floor(m, plan, alpha, radius)})
    M = len(levels)
    for row in reversed(floors):
        if row["floor"] <= plan.cutoff_floor:
            break
        M = int(row["mode"])
    if M == len(levels):
        raise CutoffNotFound(len(levels), floors[-1]["floor"] if floors else math.nan)
    alpha_M = floors[M]["alpha"]
    if alpha_M > 0:
        for alpha in np.geomspace(alpha_M, 100 * alpha_M, 6):
            f = mode_floor(m, plan, float(alpha), radius)
            if f <= plan.cutoff_floor:
                raise CutoffNotFound(len(levels), f)
    log.info(f"h = {h}: mode cutoff M = {M}")
    return ModeCutoff(M, floors)


@dataclass
class ModeResult:
    mode: int
    lam: float
    alpha: float
    multiplicity: int
    N: int
    eigenvalues: NDArray[np.complex128]
    stable: NDArray[np.bool_]
    deltas: NDArray[np.float64]
    confirmed: dict[int, bool]
    boundary: list[tuple[complex, float]]
    certificate: dict = field(default_factory=dict)


def solve_mode(
    m: ModelSurface, h: float, mode: int, lam: float, multiplicity: int, plan: ScanPlan, radius: float
) -> ModeResult:
    """Eigenvalues of one mode near the window. Those within twice the
    window radius are confirmed against an independent discretization: the
    2N operator when refining, the other scheme at N otherwise."""
    alpha = h**2 * lam
    cc, cf = mode_contours(m, plan, alpha)
    chart = make_chart(m, cc, cf)

    def operator(N, scheme=plan.scheme):
        grid = Grid1D(chart.lo, chart.hi, N, scheme)
        return build_mode_operator(m, cc, cf, alpha, h, grid, mode=mode,
                                   window_radius=radius, floor=plan.certify_floor)

    op = operator(plan.points)
    ev = mode_eigenvalues(op)
    ev = ev[np.abs(ev) <= plan.scan_radius]
    deltas = np.zeros(len(ev))
    check: Optional[ModeOperator] = None
    if plan.refine and len(ev):
        check = operator(2 * plan.points)
        fine = mode_eigenvalues(check)
        deltas = np.array([np.min(np.abs(fine - z)) / max(1.0, abs(z)) for z in ev])
    stable = deltas < plan.rel_tol
    confirmed: dict[int, bool] = {}
    near = [i for i, z in enumerate(ev) if abs(z) <= 2 * radius]
    if near:
        other = Scheme.SPECTRAL if plan.scheme is Scheme.FD4 else Scheme.FD4
        reference = check if check is not None else operator(plan.points, other)
        for i in near:
            s = smallest_singular_value(reference, ev[i], tol=plan.sigma_tol)
            confirmed[i] = s <= plan.confirm_tol * max(1.0, abs(ev[i]))
    boundary = [
        (z, smallest_singular_value(op, z, tol=plan.sigma_tol))
        for z in boundary_samples(radius, plan.boundary)
    ]
    return ModeResult(mode, lam, alpha, multiplicity, plan.points, ev, stable, deltas, confirmed, boundary)


@dataclass
class ResonanceReport:
    h: float
    C: float
    n: int
    radius: float
    cutoff: ModeCutoff
    modes: list[ModeResult]
    verdict: str
    witnesses: list[complex]
    floor: float
    kappa: float
    max_delta: float
    spurious: int

    def rows(self) -> list[dict]:
        out = []
        for r in self.modes:
            for z, ok, d in zip(r.eigenvalues, r.stable, r.deltas):
                s, _ = zeta_to_s(complex(z), self.h, self.n)
                out.append({
                    "re_zeta": float(z.real), "im_zeta": float(z.imag),
                    "re_s": s.real, "im_s": s.imag, "mode": r.mode, "N": r.N,
                    "h": self.h, "stable": bool(ok), "delta": float(d),
                })
        return out

    def to_dict(self) -> dict:
        return {
            "h": self.h, "C": self.C, "n": self.n, "radius": self.radius,
            "cutoff": self.cutoff.M, "cutoff_floors": self.cutoff.floors,
            "verdict": self.verdict,
            "witnesses": [[z.real, z.imag] for z in self.witnesses],
            "resolvent_floor": self.floor, "kappa": self.kappa,
            "max_delta": self.max_delta, "spurious": self.spurious,
            "modes": [
                {"mode": r.mode, "lambda": r.lam, "alpha": r.alpha, "multiplicity": r.multiplicity,
                 "count": len(r.eigenvalues),
                 "boundary_min": min((s for _, s in r.boundary), default=math.nan)}
                for r in self.modes
            ],
        }


def assemble_report(m: ModelSurface, h: float, C: float, cutoff: ModeCutoff, results: list[ModeResult]) -> ResonanceReport:
    radius = window_radius(C, h)
    results = sorted(results, key=lambda r: r.mode)
    witnesses, spurious = [], 0
    for r in results:
        for i, z in enumerate(r.eigenvalues):
            if abs(z) > radius:
                continue
            if r.stable[i] and r.confirmed.get(i, False):
                witnesses.append(complex(z))
            else:
                spurious += 1
    if spurious:
        log.warning(f"h = {h}: {spurious} spurious eigenvalue(s) inside the window")
    floor = min((s for r in results for _, s in r.boundary), default=math.nan)
    stable_deltas = [float(d) for r in results for d, ok in zip(r.deltas, r.stable) if ok]
    verdict = "occupied" if witnesses else "empty"
    log.info(f"h = {h}: window |ζ| ≤ {radius:.4g} is {verdict}; resolvent floor {floor:.4g}")
    return ResonanceReport(
        h, C, m.n, radius, cutoff, results, verdict, witnesses, floor,
        floor / (h * math.log(1 / h)), max(stable_deltas, default=0.0), spurious)


def resonance_scan(m: ModelSurface, h: float, C: float, plan: ScanPlan | None = None) -> ResonanceReport:
    plan = plan or ScanPlan()
    cutoff = estimate_mode_cutoff(m, h, C, plan)
    radius = window_radius(C, h)
    levels = m.cross_section.levels()
    results = [solve_mode(m, h, j, lam, mult, plan, radius)
               for j, (lam, mult) in enumerate(levels[: cutoff.M])]
    return assemble_report(m, h, C, cutoff, results)


def fitted_kappa(reports: list[ResonanceReport]) -> float:
    """One constant κ with σ_min ≥ κ h log(1/h) across all scanned h."""
    return min((r.kappa for r in reports), default=math.nan)


__all__ = [
    "zeta_to_s", "s_to_zeta", "window_radius", "boundary_samples", "ScanPlan", "ModeCutoff",
    "estimate_mode_cutoff", "ModeResult", "solve_mode", "ResonanceReport", "assemble_report",
    "resonance_scan", "fitted_kappa",
]
