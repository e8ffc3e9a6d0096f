import math

import numpy as np
import pytest

from cuspscale.errors import ConfigError, DomainError, UnsupportedModelError
from cuspscale.geometry import (
    CrossSection, CurvatureQuery, End, ModelSurface, Perturbation, WarpKind, WarpProfile, conjugation_weight,
    end_metric, eval_warp, glued_potential_V, potential_V, sectional_curvature, validate_surface,
    warp_derivative, zero_volume,
)

HYPERBOLIC = WarpProfile(WarpKind.HYPERBOLIC_FUNNEL, shift=2.0, normalized=True)


def test_hyperbolic_funnel_profile():
    profile = WarpProfile(WarpKind.HYPERBOLIC_FUNNEL, shift=1.0)
    assert eval_warp(profile, 2.0) == pytest.approx(math.exp(3) / math.cosh(3))
    values = eval_warp(HYPERBOLIC, np.array([0.0, 1.0]))
    assert np.allclose(values, (1 + np.tanh([2.0, 3.0])) / 2)


def test_domain():
    profile = WarpProfile(theta_max=0.5)
    assert eval_warp(profile, 0.0) == 1.0
    assert eval_warp(profile, 1 + 0.2j) == 1.0
    with pytest.raises(DomainError):
        eval_warp(profile, 1 + 1j)
    with pytest.raises(DomainError):
        eval_warp(profile, -1.0)
    with pytest.raises(ConfigError):
        WarpProfile(theta_max=2.0)


@pytest.mark.parametrize("z", [1.0, 3.0 + 0.5j, 10.0 - 2.0j])
def test_user_analytic_derivatives(z):
    profile = WarpProfile(WarpKind.USER_ANALYTIC, shift=2.0, coefficients=(0.5, -0.25))
    w = z + 2.0
    assert complex(warp_derivative(profile, z, 0)) == pytest.approx(1 + 0.5 / w - 0.25 / w**2)
    assert complex(warp_derivative(profile, z, 1)) == pytest.approx(-0.5 / w**2 + 0.5 / w**3, rel=1e-10)
    assert complex(warp_derivative(profile, z, 2)) == pytest.approx(1.0 / w**3 - 1.5 / w**4, rel=1e-8)


def test_constant_warp_potential_vanishes():
    r = np.linspace(0.1, 5.0, 11)
    assert np.allclose(potential_V(End.CUSP, WarpProfile(), 2, r), 0.0)
    assert np.allclose(glued_potential_V(ModelSurface().warp, 2, r - 2.5), 0.0)


def test_glued_warp_continuity():
    warp = ModelSurface(funnel=HYPERBOLIC).warp
    for k in range(3):
        left = warp.derivative(np.array([-0.5 - 1e-9, -0.5 + 1e-9]), k).real
        right = warp.derivative(np.array([0.5 - 1e-9, 0.5 + 1e-9]), k).real
        assert left[0] == pytest.approx(left[1], abs=1e-6)
        assert right[0] == pytest.approx(right[1], abs=1e-6)


def test_curvature_of_exact_ends():
    for end in End:
        f, df, ddf = end_metric(end, WarpProfile(), np.array([0.0, 1.0, 4.0]))
        for args in zip(f, df, ddf):
            assert sectional_curvature(CurvatureQuery(*map(float, args))) == pytest.approx((-1.0, -1.0))
    with pytest.raises(ConfigError):
        CurvatureQuery(0.0, 1.0, 1.0)


def test_model_checks():
    with pytest.raises(ConfigError):
        ModelSurface(theta=0.6)
    with pytest.raises(ConfigError):
        ModelSurface(n=1)
    with pytest.raises(ConfigError):
        ModelSurface(n=3)
    with pytest.raises(ConfigError):
        CrossSection(eigenvalues=[0.0, 0.0, 1.0])
    with pytest.raises(ConfigError):
        Perturbation(support=(1.0, -1.0))


def test_cross_section_levels():
    levels = CrossSection(circle_length=1.0, modes=3).levels()
    assert [m for _, m in levels] == [1, 2, 2]
    assert levels[2][0] == pytest.approx((4 * math.pi) ** 2)
    listed = CrossSection(circle_length=None, eigenvalues=[0.0, 2.0, 6.0], multiplicities=[1, 3, 5])
    assert listed.levels() == [(0.0, 1), (2.0, 3), (6.0, 5)]


def test_perturbation():
    bump = Perturbation(support=(-1.5, 1.5), amplitude=4.0)
    assert bump(0.0) == pytest.approx(4.0)
    assert bump(np.array([-2.0, 1.5, 3.0])).tolist() == [0.0, 0.0, 0.0]
    spline = Perturbation(support=(0.0, 3.0), samples=[1.0, 2.0])
    assert spline(np.array([1.0, 2.0])).tolist() == pytest.approx([1.0, 2.0])


def test_validate_parabolic_cylinder():
    report = validate_surface(ModelSurface())
    assert report.passed
    assert report.entry("curvature-nonpositive[funnel]").detail["radial_max"] == pytest.approx(-1.0)


def test_validation_failures_are_findings():
    bad = WarpProfile(WarpKind.USER_ANALYTIC, shift=0.6, coefficients=(2.0,))
    report = validate_surface(ModelSurface(cusp=bad))
    assert not report.passed
    assert not report.entry("warp-near-one[cusp]").passed
    assert report.entry("warp-near-one[funnel]").passed


def test_zero_volume_hyperbolic_funnel():
    m = ModelSurface(core_halfwidth=0.0, funnel=HYPERBOLIC)
    vol = zero_volume(m)
    assert vol.core == 0.0
    assert vol.funnel_defect == pytest.approx(1 - math.exp(-4), rel=1e-12)
    assert 1.0 <= vol.cusp <= 1.02
    assert vol.total == pytest.approx(vol.cusp - vol.funnel_defect)
    assert vol.refinement_delta < 1e-5


def test_zero_volume_needs_hyperbolic_funnel():
    with pytest.raises(UnsupportedModelError):
        zero_volume(ModelSurface())


def test_conjugation_weight():
    assert conjugation_weight(End.FUNNEL, WarpProfile(), 2, 4.0) == pytest.approx(-2.0)
    assert conjugation_weight(End.CUSP, WarpProfile(), 3, 1.0) == pytest.approx(1.0)
    raw = WarpProfile(WarpKind.HYPERBOLIC_FUNNEL, shift=1.0)
    assert conjugation_weight(End.FUNNEL, raw, 2, 2.0) == pytest.approx(0.5 * (-2 + math.log(1 + math.tanh(3))))
    with pytest.raises(DomainError):
        conjugation_weight(End.CUSP, WarpProfile(), 2, -1.0)
