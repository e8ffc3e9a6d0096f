"""Geodesic flow on the ends and on glued models.

On an end the geodesic Hamiltonian separates as

    p = ρ² + β(r)² e^{±2r} α,

(cusp +, funnel -), where α is the conserved value of the cross-section
Hamiltonian. Glued models use the global coordinate `t` with the warp B(t)
and the cusp sign. All integration is classical fixed-step RK4.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum
import math
from typing import Callable, Optional

import numpy as np
from numpy.typing import NDArray
from scipy.integrate import cumulative_trapezoid

from .errors import InputError, UnsupportedModelError
from .geometry import End, ModelSurface, WarpKind, WarpProfile
from .logging import logger

log = logger()


class Chart(Enum):
    CUSP = 1
    FUNNEL = -1
    GLOBAL = 0

    def __str__(self):
        return self.name.lower()


class Exit(Enum):
    ESCAPED_CUSP = 1
    ESCAPED_FUNNEL = 2
    STILL_BOUNDED = 3
    LEFT_END = 4

    def __str__(self):
        return self.name.lower().replace("_", "-")


@dataclass(frozen=True)
class PhasePoint:
    r: float
    rho: float
    alpha: float = 0.0
    chart: Chart = Chart.GLOBAL

    def __post_init__(self):
        if self.alpha < 0:
            raise InputError("α ≥ 0", self.alpha)


def reverse(x: PhasePoint) -> PhasePoint:
    """Time reversal (r, ρ) ↦ (r, -ρ)."""
    return PhasePoint(x.r, -x.rho, x.alpha, x.chart)


WarpFn = Callable[[NDArray, int], NDArray]


def _chart_warp(chart: Chart, m: ModelSurface) -> tuple[WarpFn, int]:
    match chart:
        case Chart.CUSP:
            return (lambda r, k: m.cusp.raw(r, k).real), 1
        case Chart.FUNNEL:
            return (lambda r, k: m.funnel.raw(r, k).real), -1
        case Chart.GLOBAL:
            warp = m.warp
            return (lambda t, k: warp.derivative(t, k).real), 1


def _energy(beta: WarpFn, sign: int, r, rho, alpha):
    return rho**2 + beta(np.asarray(r, dtype=float), 0) ** 2 * np.exp(2 * sign * r) * alpha


def _vector_field(beta: WarpFn, sign: int):
    def f(r, rho, alpha):
        r = np.asarray(r, dtype=float)
        b, db = beta(r, 0), beta(r, 1)
        return 2 * rho, -2 * alpha * b * np.exp(2 * sign * r) * (db + sign * b)
    return f


def _rk4_step(f, r, rho, alpha, dt):
    k1r, k1p = f(r, rho, alpha)
    k2r, k2p = f(r + dt / 2 * k1r, rho + dt / 2 * k1p, alpha)
    k3r, k3p = f(r + dt / 2 * k2r, rho + dt / 2 * k2p, alpha)
    k4r, k4p = f(r + dt * k3r, rho + dt * k3p, alpha)
    return (r + dt / 6 * (k1r + 2 * k2r + 2 * k3r + k4r),
            rho + dt / 6 * (k1p + 2 * k2p + 2 * k3p + k4p))


def hamiltonian(x: PhasePoint, m: ModelSurface) -> float:
    beta, sign = _chart_warp(x.chart, m)
    return float(_energy(beta, sign, x.r, x.rho, x.alpha))


def flow(x: PhasePoint, m: ModelSurface, s: float, steps: int = 1) -> PhasePoint:
    """Time-`s` map of the flow in `steps` RK4 steps; `s` may be negative."""
    beta, sign = _chart_warp(x.chart, m)
    f = _vector_field(beta, sign)
    r, rho = x.r, x.rho
    for _ in range(steps):
        r, rho = _rk4_step(f, r, rho, x.alpha, s / steps)
    return PhasePoint(float(r), float(rho), x.alpha, x.chart)


@dataclass
class Trajectory:
    t: NDArray[np.float64]
    r: NDArray[np.float64]
    rho: NDArray[np.float64]
    p: NDArray[np.float64]
    alpha: float
    chart: Chart
    exit: Exit
    energy_drift: float
    flagged: bool = False
    separatrix: bool = False
    left_end_at: Optional[float] = None
    cusp_visits: int = 0
    rho_increase_in_cusp: float = 0.0

    @property
    def final(self) -> PhasePoint:
        return PhasePoint(float(self.r[-1]), float(self.rho[-1]), self.alpha, self.chart)


def _cusp_coordinate(chart: Chart, r):
    return -r if chart is Chart.FUNNEL else r


def _count_visits(c: NDArray, band: float, inside: NDArray) -> tuple[NDArray, NDArray]:
    """One hysteresis update: enter the cusp above +band, leave below -band.
    Returns the updated `inside` flags and which entries are new."""
    entered = ~inside & (c > band)
    left = inside & (c < -band)
    return (inside | entered) & ~left, entered


def integrate(
    x0: PhasePoint,
    m: ModelSurface,
    T: float,
    dt: float,
    *,
    escape_radius: float = 30.0,
    hysteresis: float = 0.1,
    drift_tol: float = 1e-7,
) -> Trajectory:
    """RK4 trajectory of the separated geodesic flow starting at `x0`.

    Integration stops at time `T`, when the coordinate leaves
    [-escape_radius, escape_radius], or when the energy drift exceeds
    `drift_tol` per unit time (the partial trajectory is then `flagged`).
    End charts are continued through r < 0 with the same formula.
    """
    if not (dt > 0 and T > 0):
        raise InputError("positive T and dt", (T, dt))
    beta, sign = _chart_warp(x0.chart, m)
    f = _vector_field(beta, sign)
    analytic_line = x0.chart is Chart.GLOBAL or \
        m.profile(End(x0.chart.value)).kind is not WarpKind.USER_ANALYTIC

    p0 = hamiltonian(x0, m)
    separatrix = x0.alpha == 0 or abs(x0.rho) >= math.sqrt(p0)
    steps = int(math.ceil(T / dt))
    ts = np.empty(steps + 1)
    rs = np.empty(steps + 1)
    rhos = np.empty(steps + 1)
    ts[0], rs[0], rhos[0] = 0.0, x0.r, x0.rho

    c0 = _cusp_coordinate(x0.chart, np.array([x0.r]))
    inside = c0 > 0
    visits = int(inside[0])
    left_end_at = None
    rho_rise = 0.0
    exit = Exit.STILL_BOUNDED
    flagged = False
    n = steps
    for k in range(steps):
        r, rho = _rk4_step(f, rs[k], rhos[k], x0.alpha, dt)
        ts[k + 1], rs[k + 1], rhos[k + 1] = (k + 1) * dt, float(r), float(rho)
        if x0.chart is not Chart.GLOBAL and left_end_at is None and r < 0:
            left_end_at = ts[k + 1]
        c = _cusp_coordinate(x0.chart, np.array([rs[k], rs[k + 1]]))
        if x0.chart is not Chart.FUNNEL and c[0] > 0 and c[1] > 0:
            rho_rise = max(rho_rise, rhos[k + 1] - rhos[k])
        inside, entered = _count_visits(c[1:], hysteresis, inside)
        visits += int(entered[0])

        drift = abs(float(_energy(beta, sign, rs[k + 1], rhos[k + 1], x0.alpha)) - p0)
        if drift > drift_tol * max(1.0, ts[k + 1]) * max(1.0, p0):
            log.warning(f"energy drift {drift:.3e} at t = {ts[k + 1]:.4g}; trajectory truncated")
            flagged, n = True, k + 1
            break
        if c[1] >= escape_radius:
            exit, n = Exit.ESCAPED_CUSP, k + 1
            break
        if c[1] <= -escape_radius:
            exit, n = Exit.ESCAPED_FUNNEL, k + 1
            break
        if not analytic_line and r < 0:
            exit, n = Exit.LEFT_END, k + 1
            break

    sl = slice(0, n + 1)
    p = np.asarray(_energy(beta, sign, rs[sl], rhos[sl], x0.alpha), dtype=float)
    return Trajectory(
        ts[sl], rs[sl], rhos[sl], p, x0.alpha, x0.chart, exit,
        float(np.max(np.abs(p - p0))), flagged, separatrix, left_end_at, visits, rho_rise)


def closed_form_rho(
    end: End,
    t,
    p: float,
    rho0: float,
    profile: WarpProfile,
    *,
    r0: float = 0.0,
    dt: float = 1e-3,
):
    """ρ(t) from the tanh solution of the separated flow on one end:

        funnel: ρ = √p tanh[2√p (t - I(t)) + artanh(ρ0/√p)],
        cusp:   ρ = √p tanh[-2√p (t + I(t)) + artanh(ρ0/√p)],

    with I(t) = ∫₀ᵗ β′/β(r(s)) ds along the trajectory from (r0, ρ0). For
    β ≡ 1 the integral vanishes. On the separatrix |ρ0| ≥ √p the flow is
    the linear ray and ρ ≡ ρ0.
    """
    t_arr = np.asarray(t, dtype=float)
    sq = math.sqrt(p)
    if abs(rho0) >= sq:
        log.debug("separatrix initial data; using the linear solution")
        return np.full_like(t_arr, rho0) if t_arr.ndim else rho0

    if profile.kind is WarpKind.CONSTANT_ONE:
        integral = np.zeros_like(t_arr)
    else:
        if np.any(t_arr < 0):
            raise InputError("t ≥ 0", t)
        beta = profile.raw(r0).real
        alpha = (p - rho0**2) / (beta**2 * math.exp(2 * end.sign * r0))
        m = ModelSurface(cusp=profile, funnel=profile)
        chart = Chart.CUSP if end is End.CUSP else Chart.FUNNEL
        traj = integrate(PhasePoint(r0, rho0, float(alpha), chart), m,
                         max(float(np.max(t_arr)), dt), dt, escape_radius=math.inf)
        ratio = profile.raw(traj.r, 1).real / profile.raw(traj.r, 0).real
        cumulative = cumulative_trapezoid(ratio, traj.t, initial=0.0)
        integral = np.interp(t_arr, traj.t, cumulative)

    phase = 2 * sq * (t_arr - integral) if end is End.FUNNEL else -2 * sq * (t_arr + integral)
    rho = sq * np.tanh(phase + np.arctanh(rho0 / sq))
    return rho if t_arr.ndim else float(rho)


@dataclass
class DynamicsReport:
    count: int
    horizon: float
    seed: int
    escaped: int
    escaped_cusp: int
    escaped_funnel: int
    max_cusp_visits: int
    max_energy_drift: float
    bounded: list[dict[str, float]] = field(default_factory=list)

    @property
    def nontrapping(self) -> bool:
        return self.escaped == self.count

    def to_dict(self) -> dict:
        return {
            "count": self.count, "horizon": self.horizon, "seed": self.seed,
            "escaped": self.escaped, "escaped_cusp": self.escaped_cusp,
            "escaped_funnel": self.escaped_funnel, "max_cusp_visits": self.max_cusp_visits,
            "max_energy_drift": self.max_energy_drift, "bounded": self.bounded,
        }


def unit_energy_sample(m: ModelSurface, count: int, seed: int) -> tuple[NDArray, NDArray, NDArray]:
    """Initial data on {p = 1} in the global chart: t0 uniform in [-2, 2],
    ρ = cos φ and α = sin²φ / (B(t0)² e^{2t0}) with φ uniform."""
    rng = np.random.default_rng(seed)
    t0 = rng.uniform(-2.0, 2.0, count)
    phi = rng.uniform(0.0, 2 * math.pi, count)
    B = m.warp.derivative(t0).real
    return t0, np.cos(phi), np.sin(phi) ** 2 / (B**2 * np.exp(2 * t0))


def classify_batch(
    m: ModelSurface,
    N: int,
    T: float,
    seed: int,
    *,
    dt: float = 1e-2,
    escape_radius: float = 30.0,
    hysteresis: float = 0.1,
) -> DynamicsReport:
    """Integrate `N` pseudo-random unit-energy geodesics of a glued model
    together and classify how they leave."""
    if not m.glue:
        raise UnsupportedModelError("Batch classification needs a glued (global chart) model.")
    beta, sign = _chart_warp(Chart.GLOBAL, m)
    f = _vector_field(beta, sign)
    t, rho, alpha = unit_energy_sample(m, N, seed)
    t0, rho0 = t.copy(), rho.copy()
    p0 = _energy(beta, sign, t, rho, alpha)

    active = np.ones(N, dtype=bool)
    inside = t > 0
    visits = inside.astype(int)
    drift = np.zeros(N)
    for _ in range(int(math.ceil(T / dt))):
        if not active.any():
            break
        idx = np.flatnonzero(active)
        tn, rn = _rk4_step(f, t[idx], rho[idx], alpha[idx], dt)
        t[idx], rho[idx] = tn, rn
        drift[idx] = np.abs(_energy(beta, sign, tn, rn, alpha[idx]) - p0[idx])
        ins, entered = _count_visits(tn, hysteresis, inside[idx])
        inside[idx] = ins
        visits[idx] += entered
        active[idx] = np.abs(tn) < escape_radius

    to_cusp = t >= escape_radius
    to_funnel = t <= -escape_radius
    bounded = [
        {"t0": float(t0[i]), "rho0": float(rho0[i]), "alpha": float(alpha[i])}
        for i in np.flatnonzero(active)
    ]
    report = DynamicsReport(
        N, T, seed, int(np.sum(to_cusp | to_funnel)), int(np.sum(to_cusp)),
        int(np.sum(to_funnel)), int(visits.max(initial=0)), float(drift.max(initial=0.0)), bounded)
    if bounded:
        log.warning(f"{len(bounded)} trajectories still bounded at T = {T}")
    else:
        log.info(f"all {N} trajectories escaped; at most {report.max_cusp_visits} cusp visit(s)")
    return report
