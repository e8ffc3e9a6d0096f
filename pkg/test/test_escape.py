import math

import numpy as np
import pytest

from cuspscale.errors import UnsupportedModelError
from cuspscale.escape import (
    Component, ShellGrid, build_escape, escape_contours, field_table, flow_derivative, funnel_offset,
    poisson_derivative, verify_escape,
)
from cuspscale.geometry import ModelSurface


@pytest.fixture(scope="module")
def cylinder():
    return ModelSurface()


@pytest.fixture(scope="module")
def fields(cylinder):
    return build_escape(cylinder)


@pytest.fixture(scope="module")
def chart(cylinder):
    return escape_contours(cylinder)


def test_constants(fields, cylinder):
    constants = fields.constants
    assert set(constants) == {"funnel", "cusp", "core"}
    assert constants["cusp"] == constants["core"] == 1.0
    assert constants["funnel"] > 8.0
    assert fields.target_delta == pytest.approx(0.1)
    assert funnel_offset(cylinder.theta) == pytest.approx(0.5 * math.log(24) + 1)


def test_linearity(fields):
    t = np.linspace(-8, 8, 161)
    rho, alpha = 0.6, 0.64 * np.exp(-2 * t)
    doubled = fields.scaled(2.0)
    assert np.array_equal(doubled(t, rho, alpha), 2.0 * fields(t, rho, alpha))
    assert np.allclose(poisson_derivative(doubled, t, rho, alpha), 2.0 * poisson_derivative(fields, t, rho, alpha))
    parts = [fields.__class__((f,), fields.warp, fields.delta_p) for f in fields.fields]
    assert np.allclose(sum(p(t, rho, alpha) for p in parts), fields(t, rho, alpha))


def test_support(fields):
    t = np.linspace(-8, 8, 81)
    assert not fields(t, 1.2, 0.0).any()
    assert not fields(t, 0.0, 0.0).any()
    assert not fields(np.array([-20.0, 20.0]), 1.0, 0.0).any()
    cusp = next(f for f in fields.fields if f.component is Component.CUSP)
    X, _ = cusp.weight(np.array([-1.0, 3.0]))
    assert X[0] == 0.0 and X[1] > 0


@pytest.mark.parametrize("t, rho", [(0.5, 0.6), (-2.5, -0.3), (4.0, 0.9)])
def test_poisson_bracket_matches_flow(fields, cylinder, t, rho):
    alpha = (1 - rho**2) * math.exp(-2 * t)
    exact = float(poisson_derivative(fields, np.array([t]), rho, alpha)[0])
    numeric = flow_derivative(fields, cylinder, t, rho, alpha)
    assert numeric == pytest.approx(exact, rel=1e-5, abs=1e-6)


def test_collar_bracket_reduces_to_unscaled(fields, chart):
    t = np.linspace(-2.0, 2.0, 41)
    rho, alpha = 0.7, 0.51 * np.exp(-2 * t)
    assert np.allclose(poisson_derivative(fields, t, rho, alpha, chart), poisson_derivative(fields, t, rho, alpha))


@pytest.mark.timeout(120)
def test_verify_escape(fields, chart):
    report = verify_escape(fields, chart)
    assert [e.id for e in report.entries] == ["escape-core", "escape-collar[cusp]", "escape-collar[funnel]"]
    assert report.passed
    assert report.entry("escape-core").minimum >= report.target_delta
    assert report.to_dict()["passed"]


@pytest.mark.timeout(120)
def test_verify_escape_outside_cutoff(fields, chart):
    report = verify_escape(fields, chart, ShellGrid(t_points=100, phi_points=21), band=2.2 * fields.delta_p)
    assert not report.entry("escape-core").passed


def test_field_table(fields):
    rows = field_table(fields, np.linspace(-3, 3, 7), 1.0, 0.0)
    assert len(rows) == 7
    assert set(rows[0]) == {"t", "rho", "G", "HpG"}


def test_needs_glued_model():
    with pytest.raises(UnsupportedModelError):
        build_escape(ModelSurface(glue=False))
