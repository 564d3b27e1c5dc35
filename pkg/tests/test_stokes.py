from fractions import Fraction

import numpy as np
import pytest

import oracles
import srlab.stokes as stokes
from srlab.competitor import solve_params
from srlab.curves import (CompetitorParams, PlaneCurve, closing_loop, cut_loop, make_omega,
                          make_sigma, segment)
from srlab.errors import DomainError, IllPosedQueryError, ResolutionError, UnsupportedStructureError
from srlab.stokes import (cor_leading_coefficient, cor_polynomial, cut_exponent, cut_moment, delta3_cor,
                          delta3_cor_closed_form, delta3_cor_quadrature, delta3_cut,
                          delta3_cut_quadrature, f_ab, s1_s2, weighted_area_decomposition,
                          winding_number)
from srlab.structure import StructureDef

P = StructureDef.polynomial


def unit_square(ccw=True):
    pts = np.array([[0, 0], [1, 0], [1, 1], [0, 1], [0, 0]], float)
    return PlaneCurve(np.arange(5.0), pts if ccw else pts[::-1])


def test_winding_numbers():
    assert winding_number(unit_square(), (0.5, 0.5)) == 1
    assert winding_number(unit_square(False), (0.5, 0.5)) == -1
    assert winding_number(unit_square(), (2.0, 0.5)) == 0
    twice = PlaneCurve(np.arange(9.0), np.vstack([unit_square().points, unit_square().points[1:]]))
    assert winding_number(twice, (0.3, 0.6)) == 2


def test_winding_number_errors():
    with pytest.raises(IllPosedQueryError):
        winding_number(unit_square(), (1.0, 0.5))
    with pytest.raises(DomainError):
        winding_number(segment((0, 0), (1, 1)), (0.0, 1.0))


@pytest.mark.parametrize("a,b,c", [(2, 3, 2), (3, 4, 2), (4, 3, 2), (3, 2, 3), (2, 5, 3), (5, 3, 2)])
def test_cut_moment_against_expansion(a, b, c):
    assert stokes.cut_moment_exact(a, b, c) == oracles.cut_moment(a, b, c)


def test_cut_reference_value():
    s = P(2, 3)
    assert stokes.cut_moment_exact(2, 3, 2) == Fraction(1, 105)
    assert delta3_cut(1.0, s) == pytest.approx(1 / 105, rel=1e-15)


@pytest.mark.parametrize("a,b,c", [(2, 3, 2), (3, 4, 2), (4, 3, 2), (3, 2, 2), (2, 3, 3)])
@pytest.mark.parametrize("rho", [0.01, 0.3])
def test_cut_against_quadrature(a, b, c, rho):
    s = P(a, b, c)
    assert delta3_cut(rho, s) == pytest.approx(delta3_cut_quadrature(rho, s), rel=1e-11)


def test_cut_exponents():
    assert cut_exponent(P(3, 4)) == 9
    assert cut_exponent(P(3, 4, 3)) == 13
    # a > b: rho^(c a) from P^c and rho^q from dx2
    assert cut_exponent(P(4, 3)) == 8 + Fraction(4, 3)
    assert delta3_cut(0.5, P(4, 4)) == 0.0


@pytest.mark.parametrize("a,b,c", [(2, 3, 2), (3, 4, 2), (4, 3, 2), (3, 2, 2), (3, 2, 3), (2, 5, 3)])
def test_rectangle_against_exact_rational(a, b, c):
    exact = oracles.rectangle_integral(a, b, c, Fraction(1, 10))
    assert delta3_cor(0.1, 1.0, P(a, b, c)) == pytest.approx(float(exact), rel=1e-14)


@pytest.mark.parametrize("a,b", [(2, 3), (3, 4), (3, 5)])
def test_rectangle_closed_form_and_sums(a, b):
    s = P(a, b)
    for d in (0.01, 0.1, 0.3):
        assert delta3_cor_closed_form(d, 0.7, s) == pytest.approx(delta3_cor(d, 0.7, s), rel=1e-10)
    S1, S2 = oracles.s_sums(a, b, Fraction(1, 10))
    f1, f2 = s1_s2(0.1, s)
    assert f1 == pytest.approx(float(S1), rel=1e-13) and f2 == pytest.approx(float(S2), rel=1e-13)
    assert float(2 * a * (S1 - S2)) == pytest.approx(
        float(oracles.rectangle_integral(a, b, 2, Fraction(1, 10))), rel=1e-15)


@pytest.mark.parametrize("a,b,c", [(2, 3, 2), (4, 3, 2), (2, 3, 3)])
def test_rectangle_against_2d_quadrature(a, b, c):
    s = P(a, b, c)
    for eps, d in [(1.0, 0.1), (0.5, 0.01)]:
        assert delta3_cor(d, eps, s) == pytest.approx(delta3_cor_quadrature(d, eps, s), rel=1e-10)


def test_rectangle_leading_term():
    for a, b in [(2, 3), (3, 4)]:
        s = P(a, b)
        eps, d = 0.8, 1e-4
        ratio = delta3_cor(d, eps, s) / (a * (a + b) * eps ** (2 * b + 1) * d ** 3)
        assert ratio == pytest.approx(1.0, abs=1e-3)
    # general c: [(a+b)^(c+1) - a^(c+1) - b^(c+1)] / (b (c+1)) at c = 3, (a, b) = (2, 3)
    assert cor_leading_coefficient(P(2, 3, 3)) == Fraction(5 ** 4 - 2 ** 4 - 3 ** 4, 12)
    assert cor_leading_coefficient(P(4, 3)) == 4 * 7


def test_cor_polynomial_degree():
    J = cor_polynomial(3, 4, 2)
    assert all(x == 0 for x in J[:3]) and J[3] == 21


def test_f_ab_against_exact_rational():
    for a, b in [(2, 3), (3, 4), (4, 3)]:
        d = Fraction(1, 10)
        exact = oracles.rectangle_integral(a, b, 2, d) / (a * (a + b) * d ** 3) - 1
        assert f_ab(0.1, P(a, b)) == pytest.approx(float(exact), rel=1e-13)
    # f = O(delta)
    s = P(2, 3)
    assert f_ab(1e-6, s) / f_ab(1e-5, s) == pytest.approx(0.1, rel=1e-4)


def test_closed_forms_reject_other_cases():
    from srlab.errors import ValidationError
    with pytest.raises(ValidationError):
        delta3_cor_closed_form(0.1, 1.0, P(4, 3))
    with pytest.raises(ValidationError):
        f_ab(0.1, P(2, 3, 3))
    with pytest.raises(UnsupportedStructureError):
        delta3_cut(0.1, StructureDef.martinet())


@pytest.mark.parametrize("a,b", [(3, 4), (4, 3)])
def test_single_regions(a, b):
    s = P(a, b)
    cp = CompetitorParams(1.0, 0.3, 0.02)
    rect = weighted_area_decomposition(make_sigma(cp, s), s)
    assert len(rect.components) == 1
    assert abs(rect.total) == pytest.approx(delta3_cor(0.02, 1.0, s), rel=1e-10)
    cut = weighted_area_decomposition(cut_loop(cp, s, 512), s)
    assert len(cut.components) == 1
    assert abs(cut.total) == pytest.approx(delta3_cut(0.3, s), rel=1e-10)
    # the two regions carry opposite signs
    assert np.sign(cut.total) == -np.sign(rect.total)
    assert cut.components[0].winding == -rect.components[0].winding


def test_closing_loop_decomposition():
    s = P(3, 4)
    cp = solve_params(1.0, s)
    loop = closing_loop(make_omega(cp, s, 1024), cp, s, 1024)
    rep = weighted_area_decomposition(loop, s, 256)
    assert sorted(c.winding for c in rep.components) == [-1, 1]
    assert abs(rep.total) <= 1e-8 * rep.component_scale
    assert abs(rep.total - rep.line_integral) <= 1e-8 * rep.component_scale + rep.tolerance
    d = rep.to_dict()
    assert set(d) >= {"components", "total", "line_integral"}
    assert set(d["components"][0]) == {"winding", "area_weighted", "sample_point"}
    # components in lexicographic order of their sample points
    pts = [c.sample_point for c in rep.components]
    assert pts == sorted(pts)


def test_decomposition_needs_closed_polynomial_curve():
    with pytest.raises(DomainError):
        weighted_area_decomposition(segment((0, 0), (1, 1)), P(2, 3))
    with pytest.raises(UnsupportedStructureError):
        weighted_area_decomposition(unit_square(), StructureDef.heisenberg())


def test_unstable_faces_raise(monkeypatch):
    s = P(3, 4)
    cp = CompetitorParams(1.0, 0.3, 0.02)
    loop = closing_loop(make_omega(cp, s, 256), cp, s, 256)
    monkeypatch.setattr(stokes, "flatten", lambda closed, res: unit_square().points)
    with pytest.raises(ResolutionError):
        weighted_area_decomposition(loop, s, 64)


def test_polygon_faces_give_plain_area_for_linear_q():
    # Q = c a x1^(a-1) P^(c-1) with a = 1, c = 1 is the constant 1: face area
    s = P(1, 2, 1)
    rep = weighted_area_decomposition(unit_square(), s, 8)
    assert rep.total == pytest.approx(1.0, rel=1e-14)
    assert rep.line_integral == pytest.approx(1.0, rel=1e-14)
