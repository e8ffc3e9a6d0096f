import math

import numpy as np
import pytest

from cuspscale.errors import ConfigError
from cuspscale.geometry import End, WarpProfile
from cuspscale.scaling import (
    Branch, SymbolGrid, build_contour, cusp_threshold, eval_contour, funnel_threshold,
    mollification_loss, sample_symbol, scaled_symbol, sweep_alphas, verify_symbol_bounds,
)

THETA = math.atan(0.5)
PROFILE = WarpProfile()
GRID = SymbolGrid(r_points=800, rho_points=121)


def test_cusp_zero_branch():
    c = build_contour(End.CUSP, 5.0, THETA, 1.0, PROFILE)
    assert c.branch is Branch.IDENTICALLY_ZERO
    f, df, ddf = eval_contour(c, np.linspace(0, 50, 101))
    assert not f.any() and not df.any() and not ddf.any()
    assert verify_symbol_bounds(End.CUSP, c, PROFILE, GRID).entry("no-bad-sign").passed


def test_cusp_unperturbed_mode():
    c = build_contour(End.CUSP, 5.0, THETA, 0.0, PROFILE)
    assert c.branch is Branch.SMALL
    assert c.slope == pytest.approx(0.5)
    assert c.plateau_start is None
    f, df, _ = eval_contour(c, np.array([4.9, 8.0, 12.0]))
    assert f[0] == 0.0
    assert np.allclose(df[1:], 0.5)
    assert f[2] - f[1] == pytest.approx(2.0)

    report = verify_symbol_bounds(End.CUSP, c, PROFILE, GRID)
    assert report.passed
    assert report.split_error < 1e-12
    assert report.entry("scaling-ellipticity").delta > report.target_delta


def test_cusp_plateau():
    alpha = cusp_threshold(5.0, THETA) * 1e-3
    c = build_contour(End.CUSP, 5.0, THETA, alpha, PROFILE)
    assert c.branch is Branch.SMALL
    assert c.plateau_start is not None and c.level_k is not None
    assert c.slope <= 0.5

    r = np.array([c.plateau_start + 1, c.plateau_start + 4])
    f, df, _ = eval_contour(c, r)
    level = 3 * math.pi / 4 + math.pi * c.level_k
    assert np.allclose(f, level, rtol=1e-12)
    assert np.allclose(np.sin(2 * f), -1.0)
    assert not df.any()

    report = verify_symbol_bounds(End.CUSP, c, PROFILE, GRID)
    entry = report.entry("exponential-ellipticity")
    assert entry.passed and entry.detail["applicable"] == 1.0


def test_funnel_branches():
    standard = build_contour(End.FUNNEL, 5.0, THETA, 1.0, PROFILE)
    assert standard.branch is Branch.STANDARD
    assert standard.region_start == pytest.approx(5.0 + 0.5 * math.log(24) + 1)

    alpha = 1e6
    assert alpha > funnel_threshold(5.0)
    large = build_contour(End.FUNNEL, 5.0, THETA, alpha, PROFILE)
    assert large.branch is Branch.LARGE
    f, _, _ = eval_contour(large, np.array([7.0, 9.0]))
    end = 0.5 * math.log(2 * alpha / 0.5)
    assert f[0] == pytest.approx(math.pi / 8, rel=1e-3)
    assert f[1] == pytest.approx(math.pi / 8 + 0.5 * (9.0 - end))


def test_symbol_split():
    c = build_contour(End.FUNNEL, 2.0, THETA, 0.3, PROFILE)
    r, rho = np.meshgrid(np.linspace(0, 10, 51), np.linspace(-2, 2, 21), indexing="ij")
    s = sample_symbol(c, PROFILE, r, rho)
    assert s.split_error < 1e-12


def test_sweep_alphas():
    sweep = sweep_alphas(End.CUSP, 5.0, THETA, count=6)
    threshold = cusp_threshold(5.0, THETA)
    assert len(sweep[Branch.SMALL]) == len(sweep[Branch.IDENTICALLY_ZERO]) == 6
    assert max(sweep[Branch.SMALL]) <= threshold * (1 + 1e-12)
    assert min(sweep[Branch.IDENTICALLY_ZERO]) > threshold
    assert set(sweep_alphas(End.FUNNEL, 5.0, THETA, count=3)) == {Branch.STANDARD, Branch.LARGE}


def test_mollification_loss():
    c = build_contour(End.CUSP, 5.0, THETA, 0.0, PROFILE)
    loss = mollification_loss(End.CUSP, c, PROFILE, GRID)
    assert set(loss) <= {"scaling-ellipticity", "exponential-ellipticity"}
    assert all(0 <= v < 0.1 for v in loss.values())


@pytest.mark.parametrize("R, theta, alpha, width", [
    (0.5, THETA, 0.0, 0.05), (5.0, 0.6, 0.0, 0.05), (5.0, THETA, -1.0, 0.05), (5.0, THETA, 0.0, 0.0),
])
def test_contour_arguments(R, theta, alpha, width):
    with pytest.raises(ConfigError):
        build_contour(End.CUSP, R, theta, alpha, PROFILE, mollifier=width)


def test_scaled_symbol_unscaled_contour():
    c = build_contour(End.CUSP, 5.0, THETA, 1.0, PROFILE)
    r = np.linspace(0, 10, 41)
    assert np.allclose(scaled_symbol(End.CUSP, c, PROFILE, r, 1.0, 0.0), 0.0)
    q = scaled_symbol(End.CUSP, c, PROFILE, r[r >= math.log(3) / 2], 0.3, 1.0)
    assert np.all(q.imag == 0) and np.all(q.real >= 1)


@pytest.mark.timeout(600)
@pytest.mark.parametrize("end", [End.CUSP, End.FUNNEL])
@pytest.mark.parametrize("R", [1.0, 5.0, 10.0])
def test_symbol_bounds_sweep(end, R):
    for branch, alphas in sweep_alphas(end, R, THETA, count=3).items():
        for alpha in alphas:
            c = build_contour(end, R, THETA, alpha, PROFILE)
            assert c.branch is branch
            report = verify_symbol_bounds(end, c, PROFILE, GRID)
            assert report.passed, [e.id for e in report.entries if not e.passed]
            assert report.split_error < 1e-9


def finite_difference(c, r, step=1e-5):
    f = [eval_contour(c, r + k * step) for k in (-1, 1)]
    return [(b - a) / (2 * step) for a, b in zip(f[0][:2], f[1][:2])]


@pytest.mark.parametrize("end, R, alpha", [
    (End.FUNNEL, 3.0, 0.0), (End.FUNNEL, 5.0, 1e6), (End.CUSP, 5.0, 0.0),
])
def test_mollified_derivatives_are_consistent(end, R, alpha):
    c = build_contour(end, R, THETA, alpha, PROFILE)
    lo, hi = c._span
    r = np.linspace(lo + 1e-3, hi - 1e-3, 2001)
    f, df, ddf = eval_contour(c, r)
    fd_f, fd_df = finite_difference(c, r)
    assert np.max(np.abs(df - fd_f)) < 1e-6
    assert np.max(np.abs(ddf - fd_df)) < 1e-5


@pytest.mark.parametrize("end, R, alpha", [(End.FUNNEL, 3.0, 0.0), (End.CUSP, 5.0, 0.0)])
def test_mollified_contour_joins_the_tail(end, R, alpha):
    c = build_contour(end, R, THETA, alpha, PROFILE)
    lo, hi = c._span
    eps = 1e-9
    inner = eval_contour(c, np.array([hi - eps, lo + eps]))
    outer = eval_contour(c, np.array([hi + eps, lo - eps]))
    for a, b in zip(inner, outer):
        assert np.allclose(a, b, atol=1e-7)
    raw_f, raw_df, _ = c.raw(np.array([hi]))
    f, df, _ = eval_contour(c, np.array([hi - eps]))
    assert f[0] == pytest.approx(raw_f[0], abs=1e-8)
    assert df[0] == pytest.approx(raw_df[0], abs=1e-8)
