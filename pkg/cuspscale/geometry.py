"""Metric data of a surface with one cusp and one funnel end.

The ends are warped products over compact cross-sections,

    cusp:   dr² + e^{-2r} β_C(r)^{-2} σ_C,
    funnel: dr² + e^{+2r} β_F(r)^{-2} σ_F,

where each warp profile β extends holomorphically to a cone around the
positive real axis. A glued model uses one global coordinate `t`, with the
cusp at `t → +∞` (r = t) and the funnel at `t → -∞` (r = -t).
"""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum
import math
from typing import Optional

import numpy as np
from numpy.typing import ArrayLike, NDArray
from numpy.polynomial.legendre import leggauss
from scipy.interpolate import CubicSpline

from .cutoffs import ramp
from .errors import ConfigError, DivergentIntegral, DomainError, UnsupportedModelError
from .logging import logger, log_finding

log = logger()


class End(Enum):
    CUSP = 1
    FUNNEL = -1

    @property
    def sign(self) -> int:
        """Sign of the exponent in e^{±2r}: cusp +, funnel -."""
        return self.value

    def __str__(self):
        return self.name.lower()


class WarpKind(Enum):
    CONSTANT_ONE = 1
    HYPERBOLIC_FUNNEL = 2
    USER_ANALYTIC = 3


CAUCHY_NODES = 64


@dataclass(frozen=True)
class WarpProfile:
    """An analytic warp β on the cone |arg z| < `theta_max`.

    - `constant-one`: β ≡ 1.
    - `hyperbolic-funnel`: β(z) = e^{w} sech w = 1 + tanh w with w = z + `shift`;
      with `normalized` set, β = (1 + tanh w)/2, which is the same funnel with
      the cross-section scaled by four.
    - `user-analytic`: β(z) = 1 + Σ_k c_k (z + `shift`)^{-(k+1)}.
    """

    kind: WarpKind = WarpKind.CONSTANT_ONE
    theta_max: float = 1.0
    shift: float = 1.0
    normalized: bool = False
    coefficients: tuple[float, ...] = ()

    def __post_init__(self):
        if not 0 < self.theta_max < math.pi / 2:
            raise ConfigError(f"Cone half-angle must lie in (0, π/2), got {self.theta_max}.")
        if self.kind is WarpKind.USER_ANALYTIC and self.shift <= 0.5:
            raise ConfigError("A user-analytic profile needs `shift` > 1/2.")

    def in_domain(self, z: NDArray[np.complex128]) -> NDArray[np.bool_]:
        on_axis = (z.imag == 0) & (z.real >= 0)
        in_cone = (np.abs(z) > 0) & (np.abs(np.angle(z)) < self.theta_max)
        return on_axis | in_cone

    def check_domain(self, z: NDArray[np.complex128]):
        ok = self.in_domain(z)
        if not np.all(ok):
            bad = complex(z[~ok].flat[0])
            raise DomainError(bad, self.theta_max)

    def raw(self, z: ArrayLike, k: int = 0) -> NDArray[np.complex128]:
        """k-th derivative of β without the cone check."""
        z = np.asarray(z, dtype=complex)
        match self.kind:
            case WarpKind.CONSTANT_ONE:
                return np.full_like(z, 1.0 if k == 0 else 0.0)
            case WarpKind.HYPERBOLIC_FUNNEL:
                s = 0.5 if self.normalized else 1.0
                t = np.tanh(z + self.shift)
                sech2 = 1.0 - t**2
                if k == 0:
                    return s * (1.0 + t)
                if k == 1:
                    return s * sech2
                if k == 2:
                    return -2.0 * s * sech2 * t
                raise ValueError(f"derivative order {k} not supported")
            case WarpKind.USER_ANALYTIC:
                if k == 0:
                    return self._series(z)
                return self._cauchy(z, k)

    def _series(self, z: NDArray[np.complex128]) -> NDArray[np.complex128]:
        w = z + self.shift
        value = np.ones_like(z)
        for j, c in enumerate(self.coefficients):
            value = value + c * w ** (-(j + 1))
        return value

    def _cauchy(self, z: NDArray[np.complex128], k: int) -> NDArray[np.complex128]:
        """Cauchy-integral derivative on the circle of radius
        min(|z| sin θ_max, 1)/2, trapezoidal rule on `CAUCHY_NODES` points."""
        radius = np.minimum(np.abs(z) * math.sin(self.theta_max), 1.0) / 2
        radius = np.maximum(radius, min(0.05, self.shift / 4))
        phase = np.exp(2j * np.pi * np.arange(CAUCHY_NODES) / CAUCHY_NODES)
        nodes = z[..., None] + radius[..., None] * phase
        mean = np.mean(self._series(nodes) * phase ** (-k), axis=-1)
        return math.factorial(k) * mean / radius**k


def warp_derivative(profile: WarpProfile, z: ArrayLike, k: int = 0) -> NDArray[np.complex128]:
    z = np.asarray(z, dtype=complex)
    profile.check_domain(z)
    return profile.raw(z, k)


def eval_warp(profile: WarpProfile, z: ArrayLike) -> NDArray[np.complex128] | complex:
    """β(z); raises `DomainError` outside the cone. Scalars in, scalar out."""
    value = warp_derivative(profile, z, 0)
    return complex(value) if value.ndim == 0 else value


@dataclass(frozen=True)
class GluedWarp:
    """Warp B(t) of a glued model in the global coordinate: β_C(t) for
    t ≥ 1/2, β_F(-t) for t ≤ -1/2, and a smooth blend on the real collar."""

    cusp: WarpProfile
    funnel: WarpProfile

    def derivative(self, t: ArrayLike, k: int = 0) -> NDArray[np.complex128]:
        t = np.asarray(t, dtype=complex)
        out = np.empty_like(t)
        right = t.real >= 0.5
        left = t.real <= -0.5
        mid = ~(right | left)
        if np.any(right):
            out[right] = warp_derivative(self.cusp, t[right], k)
        if np.any(left):
            out[left] = (-1) ** k * warp_derivative(self.funnel, -t[left], k)
        if np.any(mid):
            x = t[mid].real
            c = [self.cusp.raw(x, j) for j in range(k + 1)]
            f = [(-1) ** j * self.funnel.raw(-x, j) for j in range(k + 1)]
            w = ramp(x, -0.5, 0.5)
            diff = [c[j] - f[j] for j in range(k + 1)]
            if k == 0:
                out[mid] = f[0] + w[0] * diff[0]
            elif k == 1:
                out[mid] = f[1] + w[0] * diff[1] + w[1] * diff[0]
            else:
                out[mid] = f[2] + w[0] * diff[2] + 2 * w[1] * diff[1] + w[2] * diff[0]
        return out


@dataclass
class CrossSection:
    """Spectrum of the cross-section Laplacian. Either a circle of length
    `circle_length` (λ_m = (2πm/ℓ)², multiplicity 1 then 2) truncated to
    `modes` levels, or an explicit sorted list of eigenvalues."""

    circle_length: Optional[float] = 1.0
    modes: int = 64
    eigenvalues: Optional[list[float]] = None
    multiplicities: Optional[list[int]] = None
    curvature: float = 0.0

    def __post_init__(self):
        if self.eigenvalues is None:
            if self.circle_length is None or self.circle_length <= 0:
                raise ConfigError("Cross-section needs a positive `circle_length` or eigenvalues.")
            return
        lam = self.eigenvalues
        if any(b < a for a, b in zip(lam, lam[1:])):
            raise ConfigError("Cross-section eigenvalues must be sorted nondecreasing.")
        if any(x < 0 for x in lam):
            raise ConfigError("Cross-section eigenvalues must be nonnegative.")
        if sum(1 for x in lam if x == 0) != 1:
            raise ConfigError("A connected cross-section has the eigenvalue 0 exactly once.")
        if self.multiplicities is not None and len(self.multiplicities) != len(lam):
            raise ConfigError("`multiplicities` must match `eigenvalues` in length.")

    def levels(self) -> list[tuple[float, int]]:
        """Distinct eigenvalues with multiplicities, in increasing order."""
        if self.eigenvalues is None:
            assert self.circle_length is not None
            return [
                ((2 * math.pi * m / self.circle_length) ** 2, 1 if m == 0 else 2)
                for m in range(self.modes)
            ]
        mult = self.multiplicities or [1] * len(self.eigenvalues)
        return list(zip(self.eigenvalues, mult))


@dataclass
class Perturbation:
    """Compactly supported radial potential on the core, in the global
    coordinate. Either `amplitude` times a smooth bump, or a clamped cubic
    spline through `samples` at equally spaced interior points."""

    support: tuple[float, float] = (-1.0, 1.0)
    amplitude: float = 0.0
    samples: Optional[list[float]] = None

    def __post_init__(self):
        a, b = self.support
        if not (math.isfinite(a) and math.isfinite(b) and a < b):
            raise ConfigError(f"Perturbation support must be a compact interval, got {self.support}.")
        self._spline = None
        if self.samples:
            knots = np.linspace(a, b, len(self.samples) + 2)
            values = np.concatenate([[0.0], self.samples, [0.0]])
            self._spline = CubicSpline(knots, values, bc_type="clamped")

    def __call__(self, t: ArrayLike) -> NDArray[np.float64]:
        t = np.asarray(t, dtype=float)
        a, b = self.support
        inside = (t > a) & (t < b)
        if self._spline is not None:
            return np.where(inside, self._spline(np.clip(t, a, b)), 0.0)
        u = np.where(inside, (2 * t - a - b) / (b - a), 0.0)
        bump = np.where(inside, np.exp(1.0 - 1.0 / np.where(inside, 1.0 - u**2, 1.0)), 0.0)
        return self.amplitude * bump


@dataclass
class ModelSurface:
    n: int = 2
    theta: float = math.atan(0.5)
    glue: bool = True
    core_halfwidth: float = 1.0
    core_area: Optional[float] = None
    cusp: WarpProfile = field(default_factory=WarpProfile)
    funnel: WarpProfile = field(default_factory=WarpProfile)
    cross_section: CrossSection = field(default_factory=CrossSection)
    perturbation: Optional[Perturbation] = None

    def __post_init__(self):
        if self.n < 2:
            raise ConfigError(f"Dimension must be at least 2, got {self.n}.")
        if not 0 < self.theta < math.pi / 2 or math.tan(self.theta) > 0.5 + 1e-12:
            raise ConfigError(f"Scaling angle needs 0 < tan θ ≤ 1/2, got θ = {self.theta}.")
        if self.core_halfwidth < 0:
            raise ConfigError("`core_halfwidth` must be nonnegative.")
        if self.n > 2 and self.cross_section.eigenvalues is None:
            raise ConfigError("For n > 2 the cross-section eigenvalues must be listed.")

    @property
    def warp(self) -> GluedWarp:
        return GluedWarp(self.cusp, self.funnel)

    def profile(self, end: End) -> WarpProfile:
        return self.cusp if end is End.CUSP else self.funnel


def _log_derivatives(beta: NDArray, d1: NDArray, d2: NDArray, n: int, sign: int) -> NDArray:
    l1 = d1 / beta
    l2 = d2 / beta
    return sign * (n - 1) ** 2 / 2 * l1 - (n - 1) / 2 * l2 + (n**2 - 1) / 4 * l1**2


def potential_V(end: End, profile: WarpProfile, n: int, z: ArrayLike) -> NDArray[np.complex128]:
    """Lower-order potential V_j left over after conjugating the Laplacian by
    e^{φ} and removing (n-1)²/4."""
    z = np.asarray(z, dtype=complex)
    beta, d1, d2 = (warp_derivative(profile, z, k) for k in range(3))
    return _log_derivatives(beta, d1, d2, n, end.sign)


def glued_potential_V(warp: GluedWarp, n: int, t: ArrayLike) -> NDArray[np.complex128]:
    """V in the global coordinate, which is the cusp formula for B(t)."""
    beta, d1, d2 = (warp.derivative(t, k) for k in range(3))
    return _log_derivatives(beta, d1, d2, n, End.CUSP.sign)


def conjugation_weight(end: End, profile: WarpProfile, n: int, r: float) -> float:
    if r < 0:
        raise DomainError(complex(r), profile.theta_max)
    beta = eval_warp(profile, r)
    assert isinstance(beta, complex)
    return (n - 1) / 2 * (end.sign * r + math.log(beta.real))


@dataclass
class CurvatureQuery:
    f: float
    df: float
    ddf: float
    tangential: float = 0.0

    def __post_init__(self):
        if not self.f > 0:
            raise ConfigError(f"Warp value must be positive, got {self.f}.")


def sectional_curvature(q: CurvatureQuery) -> tuple[float, float]:
    """Curvatures of dr² + f(r)² g̃: planes containing ∂_r, then planes
    tangent to the cross-section (which has curvature K̃)."""
    return -q.ddf / q.f, (q.tangential - q.df**2) / q.f**2


def end_metric(end: End, profile: WarpProfile, r: ArrayLike) -> tuple[NDArray, NDArray, NDArray]:
    """f = e^{∓r}/β and its first two derivatives on the real axis."""
    r = np.asarray(r, dtype=float)
    beta, d1, d2 = (warp_derivative(profile, r, k).real for k in range(3))
    s = -end.sign
    f = np.exp(s * r) / beta
    lg = s - d1 / beta
    dlg = -(d2 / beta - (d1 / beta) ** 2)
    return f, f * lg, f * (lg**2 + dlg)


@dataclass
class SamplingPlan:
    r_min: float = 1e-3
    r_max: float = 1e3
    points: int = 2048
    rays: int = 32
    cone_fraction: float = 0.9
    curvature_r_max: float = 30.0


@dataclass
class HypothesisEntry:
    id: str
    passed: bool
    margin: float
    witness: dict[str, float]
    detail: dict[str, float] = field(default_factory=dict)


@dataclass
class ValidationReport:
    entries: list[HypothesisEntry]

    @property
    def passed(self) -> bool:
        return all(e.passed for e in self.entries)

    def entry(self, id: str) -> HypothesisEntry:
        return next(e for e in self.entries if e.id == id)


def _cone_samples(profile: WarpProfile, plan: SamplingPlan) -> NDArray[np.complex128]:
    radii = np.geomspace(plan.r_min, plan.r_max, plan.points)
    angles = np.linspace(-1, 1, plan.rays) * profile.theta_max * plan.cone_fraction
    return (radii[:, None] * np.exp(1j * angles[None, :])).ravel()


def _witness_z(z: complex) -> dict[str, float]:
    return {"re": float(z.real), "im": float(z.imag)}


def _check_profile(end: End, profile: WarpProfile, n: int, plan: SamplingPlan) -> list[HypothesisEntry]:
    tag = str(end)
    z = _cone_samples(profile, plan)
    beta = profile.raw(z)
    dev = np.abs(beta - 1)
    worst = int(np.argmax(dev))
    entries = [HypothesisEntry(
        f"warp-near-one[{tag}]", bool(dev[worst] <= 1 / 3), float(1 / 3 - dev[worst]),
        _witness_z(z[worst]))]

    constants = {}
    for k in (1, 2):
        bound = np.abs(profile.raw(z, k)) * np.abs(z) ** k
        constants[f"C{k}"] = float(np.max(bound))
    finite = all(math.isfinite(c) for c in constants.values())
    entries.append(HypothesisEntry(
        f"cauchy-bounds[{tag}]", finite, max(constants.values()), {}, constants))

    r = np.concatenate([[0.0], np.geomspace(plan.r_min, plan.r_max, plan.points)])
    b, d1, d2 = (profile.raw(r, k).real for k in range(3))
    slack = b / 2 - np.abs(d1) - np.abs(d2)
    worst = int(np.argmin(slack))
    entries.append(HypothesisEntry(
        f"warp-derivatives-small[{tag}]", bool(slack[worst] >= 0), float(slack[worst]),
        {"r": float(r[worst])}))

    V = potential_V(end, profile, n, r[1:]).real
    dV = np.gradient(V, r[1:])
    envelope = {
        "V0": float(np.max(np.abs(V) * r[1:])),
        "V1": float(np.max(np.abs(dV) * r[1:] ** 2)),
    }
    entries.append(HypothesisEntry(
        f"potential-envelope[{tag}]", all(math.isfinite(v) for v in envelope.values()),
        max(envelope.values()), {}, envelope))
    return entries


def _check_curvature(end: End, m: ModelSurface, plan: SamplingPlan) -> HypothesisEntry:
    r = np.linspace(0.0, plan.curvature_r_max, plan.points)
    f, df, ddf = end_metric(end, m.profile(end), r)
    radial = -ddf / f
    tangential = (m.cross_section.curvature - df**2) / f**2
    top = np.maximum(radial, tangential)
    worst = int(np.argmax(top))
    detail = {
        "radial_min": float(radial.min()), "radial_max": float(radial.max()),
        "tangential_min": float(tangential.min()), "tangential_max": float(tangential.max()),
    }
    return HypothesisEntry(
        f"curvature-nonpositive[{end}]", bool(top[worst] <= 1e-12), float(-top[worst]),
        {"r": float(r[worst])}, detail)


def validate_surface(m: ModelSurface, plan: SamplingPlan | None = None) -> ValidationReport:
    """Grid check of the standing hypotheses on both warp profiles, the
    scaling angle, and the sign of the end-metric curvatures. Failures are
    entries of the report."""
    plan = plan or SamplingPlan()
    entries = [HypothesisEntry(
        "angle-small", math.tan(m.theta) <= 0.5 + 1e-12, 0.5 - math.tan(m.theta),
        {"theta": m.theta})]
    for end in End:
        entries.extend(_check_profile(end, m.profile(end), m.n, plan))
        entries.append(_check_curvature(end, m, plan))
    for e in entries:
        log_finding(e.id, e.passed, e.margin, e.witness)
    return ValidationReport(entries)


@dataclass
class QuadraturePlan:
    panels: int = 64
    order: int = 16
    truncation: float = 60.0


@dataclass
class ZeroVolume:
    total: float
    core: float
    cusp: float
    funnel_defect: float
    refinement_delta: float


def _composite(func, a: float, b: float, panels: int, order: int) -> float:
    x, w = leggauss(order)
    edges = np.linspace(a, b, panels + 1)
    mid = (edges[1:] + edges[:-1]) / 2
    half = (edges[1:] - edges[:-1]) / 2
    nodes = mid[:, None] + half[:, None] * x[None, :]
    return float(np.sum(half[:, None] * w[None, :] * func(nodes)))


def _pieces(m: ModelSurface, plan: QuadraturePlan, panels: int) -> tuple[float, float, float]:
    ell = m.cross_section.circle_length
    assert ell is not None
    c = m.core_halfwidth
    warp = m.warp

    def density(t):
        return ell * np.exp(-t) / warp.derivative(t).real

    end = c + plan.truncation
    cusp = _composite(density, c, end, panels, plan.order)
    tail = float(density(np.array([end]))[0])
    if not math.isfinite(cusp) or tail > 1e-12 * max(abs(cusp), 1.0):
        raise DivergentIntegral("cusp", f"area density {tail:.3e} at t = {end}")

    if m.core_area is not None:
        core = m.core_area
    elif c > 0:
        core = _composite(density, -c, c, panels, plan.order)
    else:
        core = 0.0

    f = m.funnel
    if f.kind is not WarpKind.HYPERBOLIC_FUNNEL:
        raise UnsupportedModelError(
            "The 0-volume needs a hyperbolic funnel end to compare against.")
    length = ell * math.exp(-f.shift) * (2.0 if f.normalized else 1.0)
    defect = _composite(lambda r: length * np.cosh(r), 0.0, c + f.shift, panels, plan.order)
    return core, cusp, defect


def zero_volume(m: ModelSurface, plan: QuadraturePlan | None = None) -> ZeroVolume:
    """vol(X₀) + vol(X_C) - vol(X_F⁰ \\ X_F) for a surface (n = 2) whose
    cross-section is a circle, where X_F⁰ is the hyperbolic funnel that
    X_F is the tail of."""
    plan = plan or QuadraturePlan()
    if m.n != 2 or m.cross_section.circle_length is None:
        raise UnsupportedModelError("The 0-volume is defined for surfaces with circle cross-sections.")
    core, cusp, defect = _pieces(m, plan, plan.panels)
    fine = _pieces(m, plan, 2 * plan.panels)
    total = core + cusp - defect
    delta = abs((fine[0] + fine[1] - fine[2]) - total)
    log.debug(f"0-volume pieces: core {core:.12g}, cusp {cusp:.12g}, funnel {defect:.12g}")
    return ZeroVolume(total, core, cusp, defect, delta)
