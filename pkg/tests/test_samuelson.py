import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from _warps import affine_deviation, monotone_cubic
from maxwellkit.errors import (
    CrossingCurves, DomainError, EmptyCell, SConditionFailed, SingularCalibration, SingularFrame,
)
from maxwellkit.models import get_model, ideal, non_example, uncalibrated_ideal
from maxwellkit.samuelson import (
    AREA_TOL, CellSpec, cell_areas, default_cells, linear_family, recalibrate,
    s_condition_area, s_condition_smooth, splitting_coefficients, transversal_from_curves,
    uniqueness_check,
)
from maxwellkit.symcore import (
    Box, Evaluator, Point, T, equivalent, is_zero, parse_expr, substitute, to_text,
)
from maxwellkit.symcore.equivalence import PROVED, REFUTED, VERIFIED

BOX = Box(0.5, 5, 0.5, 5)
SMALL = Box(0.5, 2, 0.5, 2)


# ------------------------------------------------------------- splitting

def test_splitting_coefficients_at_a_point():
    # J(xy, xy^2) = x y^2 = v, so grad ln J = grad v / v
    alpha, beta = splitting_coefficients(parse_expr("x*y"), parse_expr("x*y^2"), Point(1, 2))
    assert alpha == pytest.approx(0.0, abs=1e-14) and beta == pytest.approx(0.25)


def test_splitting_coefficients_singular_frame():
    with pytest.raises(SingularFrame):
        splitting_coefficients(parse_expr("x*y"), parse_expr("x^2*y^2"), Point(1, 2))


@given(st.floats(0.3, 3.0), st.floats(0.3, 3.0))
def test_power_pair_coefficients(px, py):
    # u = x y, v = x y^3: J = 2 x y^3 = 2 v, alpha = 0, beta = 1/v
    a, b = splitting_coefficients(parse_expr("x*y"), parse_expr("x*y^3"), Point(px, py))
    assert a == pytest.approx(0.0, abs=1e-9)
    assert b == pytest.approx(1 / (px * py ** 3), rel=1e-12)


@pytest.mark.parametrize("name", ("ideal", "generalized", "vdw", "feynman", "synthesis", "ideal_raw"))
def test_smooth_passes(name):
    r = s_condition_smooth(get_model(name))
    assert r.passed and r.verdict.kind == PROVED


def test_smooth_numeric_route_agrees():
    r = s_condition_smooth(uncalibrated_ideal(), symbolic=False)
    assert r.verdict.kind == VERIFIED and max(r.alpha_residual, r.beta_residual) <= 1e-6


def test_smooth_rejects_non_example():
    r = s_condition_smooth(non_example())
    assert r.verdict.kind == REFUTED
    assert r.witness and r.witness["level_of"] in ("u", "v")
    assert max(r.alpha_residual, r.beta_residual) > 1e-6


# ------------------------------------------------------------------ areas

def test_cell_areas_of_a_rectangle_grid():
    a = cell_areas("x", "y", CellSpec((1, 2, 4), (1, 3, 4), 400), BOX)
    assert a == pytest.approx({"A": 1, "B": 2, "C": 2, "D": 4}, rel=1e-9)


def test_area_of_curved_cells_matches_integral():
    # u = x y, v = y: the cell {c0 < xy < c1, d0 < y < d1} has area (c1 - c0) ln(d1/d0)
    a = cell_areas("x*y", "y", CellSpec((1, 2, 3), (1, 2, 3), 1000), Box(0.2, 5, 0.5, 5))
    assert a["C"] == pytest.approx(math.log(2), rel=1e-4)
    assert a["D"] == pytest.approx(math.log(2), rel=1e-4)
    assert a["A"] == pytest.approx(math.log(1.5), rel=1e-4)


def test_cell_spec_validation():
    with pytest.raises(DomainError):
        CellSpec((1, 1, 2), (1, 2, 3))
    with pytest.raises(DomainError):
        CellSpec((1, 2, 3), (1, 2, 3), resolution=4)


def test_cells_leaving_the_box():
    with pytest.raises(EmptyCell):
        s_condition_area("x", "x*y", CellSpec((1, 2, 4), (1, 3, 4), 400), BOX)


@pytest.mark.parametrize("name", ("ideal", "ideal_raw", "vdw"))
def test_area_passes(name):
    v = s_condition_area(get_model(name))
    assert v.kind == VERIFIED and v.residual <= AREA_TOL
    assert v.extra["richardson_error"] < AREA_TOL


def test_area_rejects_non_example_by_a_wide_margin():
    v = s_condition_area(non_example())
    assert v.kind == REFUTED and v.residual > 10 * AREA_TOL


def test_default_cells_fit_inside_box():
    spec = default_cells(ideal())
    assert spec.c[0] < spec.c[1] < spec.c[2] and spec.d[0] < spec.d[1] < spec.d[2]


# ---------------------------------------------------------- recalibration

def test_recalibrate_power_pair_gives_logarithm():
    r = recalibrate("x*y", "x*y^2", BOX)
    assert r.phi.kind == r.psi.kind == "closed"
    assert to_text(r.phi.core) == "t" and to_text(r.psi.core) == "ln(t)"
    assert r.residual <= 1e-12


def test_recalibrate_raw_ideal_gas_recovers_entropy():
    m = uncalibrated_ideal()
    r = recalibrate(m)
    g = m.params["gamma"]
    # Psi o (x y^gamma) is an affine image of ln(x y^gamma)/(gamma - 1)
    assert to_text(r.psi.core) == "ln(t)"
    assert r.psi.scale == pytest.approx(1 / (g - 1), rel=1e-12)
    assert r.residual <= 1e-10


def test_recalibrate_refuses_non_example():
    with pytest.raises(SConditionFailed):
        recalibrate(non_example())


@settings(max_examples=2)
@given(st.integers(0, 2 ** 32 - 1))
def test_recalibration_undoes_monotone_warps(seed):
    m = ideal()
    rng = np.random.default_rng(seed)
    wu, wv = monotone_cubic(rng, 0.25, 25), monotone_cubic(rng, -4.2, 9.7)
    u, v = substitute(wu, T, m.u), substitute(wv, T, m.v)
    r = recalibrate(u, v, m.box, params=m.params)
    assert r.residual <= 1e-9
    assert affine_deviation(wu, r.phi, 0.25, 25) <= 1e-6
    assert affine_deviation(wv, r.psi, -4.15, 9.65) <= 1e-6


# ---------------------------------------------------------- transversals

@pytest.mark.parametrize("c, u", [
    ("y", "x + b(y)"),
    ("y^2/2", "x/y + b(y)"),
    ("ln(y)", "y*x + b(y)"),
])
def test_linear_family(c, u):
    fam = linear_family(c)
    assert to_text(fam.u) == u


def test_linear_family_rejects_stationary_c():
    with pytest.raises(SingularCalibration):
        linear_family("y^2/2 - y", (0.5, 2))
    with pytest.raises(DomainError):
        linear_family("x*y")


def test_interpolation_example():
    u = transversal_from_curves("2*ln(y)", "(3*ln(y) - ln(10))/2", ("ln(x)", "x*y"), SMALL, "x*y")
    want = parse_expr("2*ln(x*y^2)/ln(10*x*y)")
    assert equivalent(u, want, SMALL).kind == PROVED
    # contour 0 is x y^2 = 1 and contour 1 is x y^3 = 10, exactly
    assert is_zero(substitute(u, parse_expr("x"), parse_expr("1/y^2")), True)
    one = substitute(u, parse_expr("x"), parse_expr("10/y^3"))
    assert is_zero(one - 1, True)


def test_transversal_without_change_of_variables():
    assert to_text(transversal_from_curves("y", "2*y")) == "x/y - 1"


def test_transversal_rejections():
    with pytest.raises(CrossingCurves):
        transversal_from_curves("y", "y")
    with pytest.raises(CrossingCurves):
        transversal_from_curves("y", "3 - y", domain=SMALL)
    with pytest.raises(DomainError):
        transversal_from_curves("y", "2*y", ("x", "x*y"), SMALL)
    with pytest.raises(DomainError):
        transversal_from_curves("y", "2*y", ("ln(x)", "x*y"), SMALL, reference_v="x + y")


def test_uniqueness_for_two_shared_adiabats():
    # the levels x y^1.4 = 1 and x y^1.4 = 2, written as ln x = F(ln(x y))
    u = transversal_from_curves("7/2*ln(y)", "7/2*ln(y) - 5/2*ln(2)", ("ln(x)", "x*y"), SMALL, "x*y")
    v = uniqueness_check("x*y", u, "x*y^1.4", SMALL)
    assert v.kind == PROVED and v.residual <= 1e-4


def test_uniqueness_refutes_a_different_family():
    u = transversal_from_curves("2*ln(y)", "(3*ln(y) - ln(10))/2", ("ln(x)", "x*y"), SMALL, "x*y")
    v = uniqueness_check("x*y", u, "x*y^1.4", SMALL)
    assert v.kind == REFUTED and v.residual > 1e-2 and v.witness
