"""
Numerical companion for resonance-free regions on surfaces with one cusp end
and one funnel end. From the command line, `cuspscale --config run.toml`
runs one pipeline and writes its artifacts. From Python, the pieces are:

- `geometry`: warp profiles, model surfaces, hypothesis checks, 0-volume.
- `dynamics`: the separated geodesic flow and escape classification.
- `scaling`: scaling contours per end and mode, and their symbol bounds.
- `operators`: discretized per-mode operators, CAP variants, resolvents.
- `resonances`: mode cutoffs and window scans.
- `escape`: escape functions and their positivity certificates.

    m = read_model(Path("models/parabolic_cylinder.toml"))
    report = resonance_scan(m, h=0.1, C=0.5, plan=ScanPlan(R=2.0))
    print(report.verdict)
"""

from .config import RunConfig, read_config, read_model
from .construct import construct
from .dynamics import PhasePoint, classify_batch, integrate
from .escape import build_escape, poisson_derivative, verify_escape
from .geometry import End, ModelSurface, WarpKind, WarpProfile, eval_warp, validate_surface, zero_volume
from .operators import build_cap_operator, build_mode_operator, mode_eigenvalues
from .resonances import ScanPlan, estimate_mode_cutoff, resonance_scan, s_to_zeta, zeta_to_s
from .scaling import build_contour, verify_symbol_bounds

__all__ = [
    "End", "ModelSurface", "PhasePoint", "RunConfig", "ScanPlan", "WarpKind", "WarpProfile",
    "build_cap_operator", "build_contour", "build_escape", "build_mode_operator", "classify_batch",
    "construct", "estimate_mode_cutoff", "eval_warp", "integrate", "mode_eigenvalues",
    "poisson_derivative", "read_config", "read_model", "resonance_scan", "s_to_zeta",
    "validate_surface", "verify_escape", "verify_symbol_bounds", "zero_volume", "zeta_to_s",
]
