"""Escape functions G = -ρ X(t) ψ(p) in the global chart of a glued model.

The weight X is a sum of three pieces: the funnel piece C_F χ_F(-t), the
cusp piece C_C χ_C(t) on t ≥ 0 and its continuation into the core on t < 0,
which is cut off by a smooth step on [-3, -2]. Only the sum of the cusp and
core pieces is smooth across t = 0.

On the energy shell the unscaled derivative is

    H_p G = ψ(p) (-2ρ² X′(t) + ∂_t p · X(t)),   ∂_t p = 2α e^{2t} B (B′ + B),

and on the scaled collars the bracket is taken with re q instead of p.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from enum import Enum
import math
from typing import Optional

import numpy as np
from numpy.typing import ArrayLike, NDArray

from .cutoffs import ramp, smooth_step
from .dynamics import Chart, PhasePoint, flow
from .errors import UnsupportedModelError
from .geometry import End, GluedWarp, ModelSurface
from .logging import log_finding, logger
from .operators import GluedChart, make_chart
from .scaling import ContourSpec, build_contour

log = logger()

P_SPACING = 0.005


class Component(Enum):
    FUNNEL = 1
    CUSP = 2
    CORE = 3

    def __str__(self):
        return self.name.lower()


def funnel_offset(theta: float) -> float:
    """R_F, the distance past R where the funnel contour reaches its slope."""
    return 0.5 * math.log(12 / math.tan(theta)) + 1


@dataclass(frozen=True)
class EscapeField:
    component: Component
    constant: float
    R_C: float = 1.0
    R_F: float = 2.6

    def _cusp_weight(self, t: NDArray) -> tuple[NDArray, NDArray]:
        L = 2 * (self.R_C + 5)
        A, dA = 1 - t / L, -1 / L
        fall, dfall, _ = ramp(t, self.R_C + 5, self.R_C + 6)
        kappa, dkappa, _ = ramp(t, -3.0, -2.0)
        w = A * (1 - fall) * kappa
        dw = dA * (1 - fall) * kappa - A * dfall * kappa + A * (1 - fall) * dkappa
        return w, dw

    def chi_funnel(self, r: ArrayLike) -> tuple[NDArray, NDArray]:
        """χ_F on the funnel radius: rises on [1, 2], equals r - 1 up to
        R_F + 5, then falls to zero by R_F + 6."""
        r = np.asarray(r, dtype=float)
        rise, drise, _ = ramp(r, 1.0, 2.0)
        fall, dfall, _ = ramp(r, self.R_F + 5, self.R_F + 6)
        line = r - 1
        chi = rise * line * (1 - fall)
        dchi = drise * line * (1 - fall) + rise * (1 - fall) - rise * line * dfall
        return chi, dchi

    def weight(self, t: ArrayLike) -> tuple[NDArray, NDArray]:
        """X(t) and X′(t)."""
        t = np.asarray(t, dtype=float)
        match self.component:
            case Component.FUNNEL:
                chi, dchi = self.chi_funnel(-t)
                return self.constant * chi, -self.constant * dchi
            case Component.CUSP | Component.CORE:
                w, dw = self._cusp_weight(t)
                keep = t >= 0 if self.component is Component.CUSP else t < 0
                return (np.where(keep, self.constant * w, 0.0),
                        np.where(keep, self.constant * dw, 0.0))

    def scaled(self, s: float) -> EscapeField:
        return replace(self, constant=s * self.constant)


@dataclass(frozen=True)
class EscapeSet:
    fields: tuple[EscapeField, ...]
    warp: GluedWarp
    delta_p: float = 0.05

    @property
    def constants(self) -> dict[str, float]:
        out: dict[str, float] = {}
        for f in self.fields:
            out.setdefault(str(f.component), f.constant)
        return out

    @property
    def target_delta(self) -> float:
        return 0.1 * min(self.constants.values())

    def weight(self, t: ArrayLike) -> tuple[NDArray, NDArray]:
        t = np.asarray(t, dtype=float)
        X, dX = np.zeros_like(t), np.zeros_like(t)
        for f in self.fields:
            w, dw = f.weight(t)
            X, dX = X + w, dX + dw
        return X, dX

    def psi(self, p: ArrayLike) -> tuple[NDArray, NDArray]:
        """ψ ≡ 1 on |p - 1| ≤ δ_p, zero beyond 2δ_p."""
        p = np.asarray(p, dtype=float)
        s, ds, _ = smooth_step((np.abs(p - 1) - self.delta_p) / self.delta_p)
        return 1 - s, -ds / self.delta_p * np.sign(p - 1)

    def energy(self, t, rho, alpha) -> tuple[NDArray, NDArray]:
        """p and ∂_t p."""
        t = np.asarray(t, dtype=float)
        B = self.warp.derivative(t).real
        dB = self.warp.derivative(t, 1).real
        e = alpha * np.exp(2 * t)
        return rho**2 + e * B**2, 2 * e * B * (dB + B)

    def __call__(self, t, rho, alpha) -> NDArray:
        X, _ = self.weight(t)
        p, _ = self.energy(t, rho, alpha)
        psi, _ = self.psi(p)
        return -rho * X * psi

    def partials(self, t, rho, alpha) -> tuple[NDArray, NDArray]:
        """(∂_t G, ∂_ρ G)."""
        X, dX = self.weight(t)
        p, dp = self.energy(t, rho, alpha)
        psi, dpsi = self.psi(p)
        return -rho * (dX * psi + X * dpsi * dp), -X * (psi + 2 * rho**2 * dpsi)

    def scaled(self, s: float) -> EscapeSet:
        return replace(self, fields=tuple(f.scaled(s) for f in self.fields))


def _core_excursion(cusp: EscapeField, t: NDArray, band: float) -> float:
    """Largest negative contribution of -2ρ²X′ from the cusp and core pieces."""
    dX = sum(replace(cusp, component=c).weight(t)[1] for c in (Component.CUSP, Component.CORE))
    return float(max(0.0, np.max(2 * dX))) * (1 + 2 * band)


def build_escape(
    m: ModelSurface, R: float = 5.0, *, delta_p: float = 0.05, C_C: float = 1.0, C_F: Optional[float] = None
) -> EscapeSet:
    if not m.glue:
        raise UnsupportedModelError("Escape fields are built in the global chart of a glued model.")
    R_F = funnel_offset(m.theta)
    cusp = EscapeField(Component.CUSP, C_C, R_F=R_F)
    if C_F is None:
        t = np.linspace(-(R_F + 5), R, 2001)
        C_F = 8 * _core_excursion(cusp, t, delta_p) or C_C
        log.debug(f"funnel escape constant calibrated to C_F = {C_F:.4g}")
    return EscapeSet(
        (EscapeField(Component.FUNNEL, C_F, R_F=R_F), cusp, replace(cusp, component=Component.CORE)),
        m.warp, delta_p)


def escape_contours(m: ModelSurface, R: float = 5.0, alpha: float = 0.0) -> GluedChart:
    """Glued chart of the contours the collar certificate is taken with."""
    c = build_contour(End.CUSP, R, m.theta, alpha, m.cusp)
    f = build_contour(End.FUNNEL, R, m.theta, alpha, m.funnel)
    chart = make_chart(m, c, f)
    assert isinstance(chart, GluedChart)
    return chart


def poisson_derivative(fields: EscapeSet, t, rho, alpha, chart: Optional[GluedChart] = None) -> NDArray:
    """H_p G without a chart; H_{re q} G with the contours of `chart`."""
    t = np.asarray(t, dtype=float)
    if chart is None:
        X, dX = fields.weight(t)
        p, dp = fields.energy(t, rho, alpha)
        psi, _ = fields.psi(p)
        return psi * (-2 * rho**2 * dX + dp * X)

    g, dg, ddg = chart.contour(t)
    z = t + 1j * g
    w = 1 / (1 + 1j * dg)
    B, dB = chart.warp.derivative(z), chart.warp.derivative(z, 1)
    E_t = alpha * np.exp(2 * z) * (2 * B + dB) * (1 + 1j * dg)
    a_t = -2j * ddg * w**3
    q_rho = 2 * rho * (w**2).real
    q_t = rho**2 * a_t.real + E_t.real
    G_t, G_rho = fields.partials(t, rho, alpha)
    return q_rho * G_t - q_t * G_rho


def flow_derivative(fields: EscapeSet, m: ModelSurface, t: float, rho: float, alpha: float, dt: float = 1e-4) -> float:
    """d/ds G along the integrated flow, by a central difference."""
    x = PhasePoint(t, rho, alpha, Chart.GLOBAL)
    fwd, bwd = flow(x, m, dt), flow(x, m, -dt)
    return float((fields(fwd.r, fwd.rho, alpha) - fields(bwd.r, bwd.rho, alpha)) / (2 * dt))


@dataclass
class ShellGrid:
    """Samples of {|p - 1| ≤ band}: t on a line, ρ = √p cos φ, p on a fixed
    lattice around 1, α solved from the other three."""

    t_points: int = 400
    phi_points: int = 61
    spacing: float = P_SPACING

    def samples(self, fields: EscapeSet, lo: float, hi: float, band: float) -> tuple[NDArray, NDArray, NDArray, NDArray]:
        k = int(math.floor(band / self.spacing + 1e-9))
        p = 1 + self.spacing * np.arange(-k, k + 1)
        t = np.linspace(lo, hi, self.t_points)
        phi = np.linspace(0, math.pi, self.phi_points)
        T, P, PHI = np.meshgrid(t, p, phi, indexing="ij")
        rho = np.sqrt(P) * np.cos(PHI)
        B = fields.warp.derivative(T).real
        alpha = (P - rho**2) / (np.exp(2 * T) * B**2)
        return T.ravel(), rho.ravel(), np.clip(alpha.ravel(), 0.0, None), P.ravel()


@dataclass
class EscapeEntry:
    id: str
    passed: bool
    margin: float
    minimum: float
    samples: int
    witness: Optional[dict[str, float]] = None


@dataclass
class EscapeReport:
    target_delta: float
    band: float
    delta_f: float
    entries: list[EscapeEntry] = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return all(e.passed for e in self.entries)

    def entry(self, id: str) -> EscapeEntry:
        return next(e for e in self.entries if e.id == id)

    def to_dict(self) -> dict:
        return {
            "target_delta": self.target_delta, "band": self.band, "delta_f": self.delta_f,
            "passed": self.passed,
            "entries": [e.__dict__ for e in self.entries],
        }


def _entry(id: str, values: NDArray, t, rho, alpha, p, target: float) -> EscapeEntry:
    if values.size == 0:
        return EscapeEntry(id, True, math.inf, math.inf, 0)
    i = int(np.argmin(values))
    lowest = float(values[i])
    witness = {"t": float(t[i]), "rho": float(rho[i]), "alpha": float(alpha[i]), "p": float(p[i]), "value": lowest}
    entry = EscapeEntry(id, lowest >= target, lowest - target, lowest, int(values.size), witness)
    log_finding(id, entry.passed, entry.margin, witness)
    return entry


def verify_escape(
    fields: EscapeSet,
    chart: GluedChart,
    grid: ShellGrid | None = None,
    *,
    delta0: Optional[float] = None,
    band: Optional[float] = None,
    delta_f: float = 0.05,
) -> EscapeReport:
    """Worst H_p G over the unscaled region |t| ≤ R, and worst H_{re q} G
    over the collars 3 ≤ r ≤ R_j + 5 where Σ|f^{(k)}| ≤ δ_f."""
    grid = grid or ShellGrid()
    target = fields.target_delta if delta0 is None else delta0
    band = fields.delta_p if band is None else band
    R = min(chart.cusp.R, chart.funnel.R)
    report = EscapeReport(target, band, delta_f)

    t, rho, alpha, p = grid.samples(fields, -R, R, band)
    report.entries.append(_entry("escape-core", poisson_derivative(fields, t, rho, alpha), t, rho, alpha, p, target))

    cusp = next(f for f in fields.fields if f.component is Component.CUSP)
    collars = {"cusp": (3.0, cusp.R_C + 5), "funnel": (-(cusp.R_F + 5), -3.0)}
    for name, (lo, hi) in collars.items():
        t, rho, alpha, p = grid.samples(fields, lo, hi, band)
        g, dg, ddg = chart.contour(t)
        keep = np.abs(g) + np.abs(dg) + np.abs(ddg) <= delta_f
        t, rho, alpha, p = t[keep], rho[keep], alpha[keep], p[keep]
        values = poisson_derivative(fields, t, rho, alpha, chart)
        report.entries.append(_entry(f"escape-collar[{name}]", values, t, rho, alpha, p, target))
    return report


def field_table(fields: EscapeSet, t: ArrayLike, rho: float, alpha: float) -> list[dict[str, float]]:
    """Rows (t, ρ, G, H_pG) along a line of fixed ρ and α."""
    t = np.asarray(t, dtype=float)
    G = fields(t, rho, alpha)
    H = poisson_derivative(fields, t, rho, alpha)
    return [{"t": float(a), "rho": rho, "G": float(b), "HpG": float(c)} for a, b, c in zip(t, G, H)]
