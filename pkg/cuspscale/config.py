"""Run configuration and model files.

A run file is TOML with a `[run]` section naming the model file and the
command, plus optional sections per pipeline. Model paths are resolved
relative to the run file.

```toml
[run]
model = "../models/parabolic_cylinder.toml"
command = "compute-resonances"
h = [0.2, 0.1, 0.05]
window = 0.5

[grid]
points = 1024
```
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from enum import Enum
from pathlib import Path
from typing import Optional

from .construct import read_from_file
from .errors import ConfigError
from .geometry import End, ModelSurface, QuadraturePlan, SamplingPlan
from .operators import CapPlacement, Scheme
from .resonances import ScanPlan


class Command(Enum):
    VALIDATE_GEOMETRY = 1
    TRACE_GEODESICS = 2
    BUILD_CONTOUR = 3
    VERIFY_SYMBOLS = 4
    VERIFY_ESCAPE = 5
    COMPUTE_RESONANCES = 6
    SCAN_RESOLVENT = 7
    ZERO_VOLUME = 8

    def __str__(self):
        return self.name.lower().replace("_", "-")


@dataclass
class RunSection:
    model: Path
    command: Command = Command.VALIDATE_GEOMETRY
    h: list[float] = field(default_factory=lambda: [0.1])
    window: float = 0.5
    out: Path = Path("out")
    seed: int = 0
    jobs: Optional[int] = None

    def __post_init__(self):
        if not self.h or any(not 0 < h < 1 for h in self.h):
            raise ConfigError(f"Every h must lie in (0, 1), got {self.h}.")
        if self.window <= 0:
            raise ConfigError(f"The window constant must be positive, got {self.window}.")
        if self.jobs is not None and self.jobs < 1:
            raise ConfigError("`jobs` must be at least 1.")


@dataclass
class ContourSection:
    R: float = 5.0
    theta: Optional[float] = None
    mollifier: float = 0.05
    target_delta: Optional[float] = None
    end: End = End.CUSP
    alphas: list[float] = field(default_factory=lambda: [0.0])


@dataclass
class GridSection:
    points: int = 1024
    scheme: Scheme = Scheme.FD4
    refine: bool = True
    rho_max: float = 3.0
    max_modes: int = 64
    scan_radius: float = 1.5
    boundary: int = 64


@dataclass
class SymbolsSection:
    r_points: int = 4000
    rho_points: int = 600
    alphas: list[float] = field(default_factory=list)
    sweep: int = 8
    epsilons: tuple[float, ...] = (0.5, 0.2, 0.1, 0.05)


@dataclass
class DynamicsSection:
    count: int = 100
    horizon: float = 40.0
    dt: float = 1e-2
    escape_radius: float = 30.0
    hysteresis: float = 0.1
    representatives: int = 4


@dataclass
class EscapeSection:
    delta_p: float = 0.05
    delta_f: float = 0.05
    psi_width: Optional[float] = None
    cusp_constant: float = 1.0
    escape_R: float = 5.0


@dataclass
class CapSection:
    amplitude: float = 1.0
    placement: CapPlacement = CapPlacement.INTERIOR
    start: float = 0.0
    strength: float = 1.0
    offsets: tuple[float, float] = (1.0, 1.0)
    trend_points: int = 11


@dataclass
class RunConfig:
    run: RunSection
    contour: ContourSection = field(default_factory=ContourSection)
    grid: GridSection = field(default_factory=GridSection)
    symbols: SymbolsSection = field(default_factory=SymbolsSection)
    dynamics: DynamicsSection = field(default_factory=DynamicsSection)
    escape: EscapeSection = field(default_factory=EscapeSection)
    cap: CapSection = field(default_factory=CapSection)
    volume: QuadraturePlan = field(default_factory=QuadraturePlan)
    sampling: SamplingPlan = field(default_factory=SamplingPlan)

    def scan_plan(self) -> ScanPlan:
        return ScanPlan(
            R=self.contour.R, theta=self.contour.theta, mollifier=self.contour.mollifier,
            points=self.grid.points, scheme=self.grid.scheme, refine=self.grid.refine,
            boundary=self.grid.boundary, scan_radius=self.grid.scan_radius,
            max_modes=self.grid.max_modes, rho_max=self.grid.rho_max)


def read_model(path: Path) -> ModelSurface:
    return read_from_file(ModelSurface, path)


def read_config(path: Path, section: Optional[str] = None) -> RunConfig:
    """Read a run file; the model path becomes relative to the working
    directory and must exist."""
    config = read_from_file(RunConfig, path, section)
    model = config.run.model if config.run.model.is_absolute() else path.parent / config.run.model
    if not model.exists():
        raise ConfigError(f"Model file not found: {model}")
    return replace(config, run=replace(config.run, model=model))
