import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis.strategies import floats

from cuspscale.errors import ConfigError, NonEllipticTruncation
from cuspscale.geometry import End, ModelSurface
from cuspscale.operators import (
    CapPlacement, CapProfile, Grid1D, Scheme, Variant, build_cap_operator, build_mode_operator,
    cap_values, chain_rule_residual, chart_grid, dirichlet_reference, fourier_laplacian,
    kinetic_coefficients, mode_eigenvalues, radial_operator, resolvent_floor, resolvent_trend,
    smallest_singular_value, tensor_operator,
    zero_contour,
)
from cuspscale.resonances import window_radius
from cuspscale.scaling import build_contour

THETA = math.atan(0.5)


@pytest.fixture
def cylinder():
    return ModelSurface()


def unscaled(m, N=200, R=2.0):
    zc, zf = zero_contour(End.CUSP, R, THETA, 0.0), zero_contour(End.FUNNEL, R, THETA, 0.0)
    return build_mode_operator(m, zc, zf, 0.0, 0.1, chart_grid(m, zc, zf, N))


@given(
    floats(min_value=-5, max_value=5), floats(min_value=-20, max_value=20),
    floats(min_value=-30, max_value=30), floats(min_value=-15, max_value=15),
)
def test_chain_rule(dg, ddg, x, g):
    x, g, dg, ddg = (np.array([v]) for v in (x, g, dg, ddg))
    assert chain_rule_residual(x, g, dg, ddg) < 1e-12


def test_first_order_sign():
    dg, ddg = np.array([0.5]), np.array([2.0])
    a, b = kinetic_coefficients(dg, ddg)
    # -h²b∂ = -h g″(1 + ig′)⁻³ (hD) with hD = -ih∂
    assert -b[0] * 1j == pytest.approx(-ddg[0] / (1 + 0.5j) ** 3)
    # the opposite sign would not annihilate U = z
    assert abs(a[0] * 1j * ddg[0] - b[0] * (1 + 1j * dg[0])) > 0.1


def test_dirichlet_reference(cylinder):
    op = unscaled(cylinder)
    assert op.variant is Variant.SCALED
    ev = mode_eigenvalues(op)
    assert np.max(np.abs(ev.imag)) < 1e-10
    assert np.allclose(ev.real[:10], dirichlet_reference(op.grid, 0.1, 10), rtol=1e-10, atol=1e-12)


def test_spectral_grid():
    grid = Grid1D(0.0, math.pi, 64, Scheme.SPECTRAL)
    D1, D2 = grid.derivatives
    x = grid.nodes
    assert np.allclose(D2 @ np.sin(x), -np.sin(x), atol=1e-6)
    assert np.allclose(D1 @ np.sin(x), np.cos(x), atol=1e-8)


def test_grid_arguments(cylinder):
    with pytest.raises(ConfigError):
        Grid1D(0.0, 1.0, 10)
    with pytest.raises(ConfigError):
        Grid1D(1.0, 0.0, 100)
    zc, zf = zero_contour(End.CUSP, 2.0, THETA, 0.0), zero_contour(End.FUNNEL, 2.0, THETA, 0.0)
    with pytest.raises(ConfigError):
        build_mode_operator(cylinder, zc, zf, 0.0, 0.1, Grid1D(-1.0, 1.0, 100))
    with pytest.raises(ConfigError):
        build_mode_operator(cylinder, zc, zf, 0.0, 1.5, chart_grid(cylinder, zc, zf, 100))


def test_non_elliptic_truncation(cylinder):
    cc = build_contour(End.CUSP, 2.0, THETA, 0.0, cylinder.cusp)
    cf = build_contour(End.FUNNEL, 2.0, THETA, 0.0, cylinder.funnel)
    grid = chart_grid(cylinder, cc, cf, 128)
    op = build_mode_operator(cylinder, cc, cf, 0.0, 0.1, grid, window_radius=0.1)
    assert op.chart.scaled
    with pytest.raises(NonEllipticTruncation):
        build_mode_operator(cylinder, cc, cf, 0.0, 0.1, grid, window_radius=0.1, floor=2.0)


def test_unscaled_cap(cylinder):
    base = unscaled(cylinder)
    W = CapProfile(CapPlacement.INTERIOR, amplitude=2.0)
    cap = build_cap_operator(base, W, 2.0, (1.0, 1.0))
    assert cap.variant is Variant.UNSCALED_CAP
    w = cap_values(base, W, 2.0, (1.0, 1.0))
    assert np.array_equal(cap.matrix, base.matrix - 1j * np.diag(w))
    assert w[len(w) // 2] == 2.0
    assert np.max(mode_eigenvalues(cap).imag) < 1e-10


def test_exterior_cap(cylinder):
    base = unscaled(cylinder)
    W = CapProfile(CapPlacement.EXTERIOR, start=4.0, strength=3.0)
    w = cap_values(base, W, 2.0, 1.0)
    assert w[len(w) // 2] == 0.0
    assert w.max() <= 3.0 and w.max() > 2.5
    with pytest.raises(ConfigError):
        cap_values(base, CapProfile(CapPlacement.EXTERIOR, start=10.0), 2.0, 1.0)
    with pytest.raises(ConfigError):
        CapProfile(CapPlacement.INTERIOR, amplitude=0.5)


def test_smallest_singular_value(cylinder):
    op = unscaled(cylinder, N=100)
    ev = mode_eigenvalues(op)
    assert smallest_singular_value(op, ev[3]) < 1e-8
    zeta = complex(-0.5, 0.2)
    exact = smallest_singular_value(op, zeta, exact=True)
    assert smallest_singular_value(op, zeta) >= exact * (1 - 1e-9)
    # normal operator: σ_min is the distance to the spectrum
    assert exact == pytest.approx(float(np.min(np.abs(ev - zeta))), rel=1e-8)


def test_fourier_laplacian():
    L = fourier_laplacian(9, 2 * math.pi)
    y = 2 * math.pi * np.arange(9) / 9
    assert np.allclose(L @ np.cos(3 * y), 9 * np.cos(3 * y))
    with pytest.raises(ConfigError):
        fourier_laplacian(8, 1.0)


def test_tensor_operator_decouples(cylinder):
    grid = Grid1D(-3.0, 3.0, 64)
    full, k2 = tensor_operator(cylinder, 0.1, grid, 5)
    tensor = np.sort(np.linalg.eigvalsh(full))
    modes = np.sort(np.concatenate([np.linalg.eigvalsh(radial_operator(cylinder, 0.1, grid, lam)) for lam in k2]))
    assert np.allclose(tensor, modes, atol=1e-8)


def test_resolvent_floor_and_trend(cylinder):
    op = unscaled(cylinder, N=100)
    (z, s), (zbar, sbar) = resolvent_floor(op, [0.3 + 0.4j, 0.3 - 0.4j], exact=True)
    assert zbar == z.conjugate()
    assert sbar == pytest.approx(s, rel=1e-10)
    rows = resolvent_trend(op, [0.0, 1.0, 5.0], re=-0.5)
    assert [r["im_zeta"] for r in rows] == [0.0, 1.0, 5.0]
    for r in rows[1:]:
        assert r["sigma_min"] >= r["im_zeta"] * (1 - 1e-9)
        assert r["ratio"] == pytest.approx(r["sigma_min"] / (1 + r["im_zeta"]))


def scaled(m, N=128, R=2.0, alpha=0.0):
    cc = build_contour(End.CUSP, R, THETA, alpha, m.cusp)
    cf = build_contour(End.FUNNEL, R, THETA, alpha, m.funnel)
    return build_mode_operator(m, cc, cf, alpha, 0.1, chart_grid(m, cc, cf, N), certify=False)


@pytest.mark.parametrize("zeta", [0.0, 0.2 - 0.1j, -0.5 + 0.3j])
def test_singular_value_nonnormal(cylinder, zeta):
    op = scaled(cylinder)
    exact = smallest_singular_value(op, zeta, exact=True)
    assert smallest_singular_value(op, zeta) == pytest.approx(exact, rel=1e-8)
    # too few iterations falls back to the full decomposition
    assert smallest_singular_value(op, zeta, iterations=1) == pytest.approx(exact, rel=1e-9)


@pytest.mark.timeout(300)
@pytest.mark.parametrize("mode", [0, 1])
def test_absorbing_variant_agrees_in_window(cylinder, mode):
    h = 0.1
    lam, _ = cylinder.cross_section.levels()[mode]
    op = scaled(cylinder, N=400, alpha=h**2 * lam)
    edge = max(abs(op.grid.lo), abs(op.grid.hi))
    absorbing = build_cap_operator(op, CapProfile(CapPlacement.EXTERIOR, start=edge - 2.0), 2.0, 1.0)
    assert absorbing.variant is Variant.SCALED_CAP
    radius = window_radius(0.5, h)
    for variant in (op, absorbing):
        assert np.min(np.abs(mode_eigenvalues(variant))) > radius
