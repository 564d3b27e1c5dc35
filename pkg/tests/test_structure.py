import numpy as np
import pytest
from fractions import Fraction
from hypothesis import given, settings, strategies as st

from srlab.curves import PlaneCurve, concat, make_gamma, reverse, segment
from srlab.errors import DegenerateStructureError, UnsupportedStructureError
from srlab.structure import (BUILTINS, StructureDef, abnormal_Q, eval_fields, eval_P,
                             horizontal_lift, lift_residual, martinet_residual,
                             martinet_surface_description, node_lengths, sr_length)


def square(side=1.0, ccw=True, n=5):
    pts = np.array([[0, 0], [side, 0], [side, side], [0, side], [0, 0]], float)
    if not ccw:
        pts = pts[::-1]
    return PlaneCurve(np.arange(n, dtype=float), pts)


def test_kinds_and_validation():
    s = StructureDef.polynomial(3, 4)
    assert s.q_exact == Fraction(4, 3) and s.c == 2
    assert StructureDef.polynomial(5, 2).q_exact == Fraction(5, 2)
    with pytest.raises(UnsupportedStructureError):
        StructureDef("riemannian")
    with pytest.raises(UnsupportedStructureError):
        StructureDef.polynomial(0, 3)
    with pytest.raises(UnsupportedStructureError):
        StructureDef.heisenberg().q


@pytest.mark.parametrize("x", [(0.3, -1.2, 5.0), (2.0, 0.5, 0.0)])
def test_builtin_fields(x):
    x1 = x[0]
    assert eval_fields(x, StructureDef.heisenberg()) == (1.0, x1, 0.0, 1.0)
    assert eval_fields(x, StructureDef.martinet()) == (1.0, x1 ** 2, 0.0, 2 * x1)
    assert eval_fields(x, StructureDef.liu_sussmann()) == pytest.approx((1 - x1, x1 ** 2, -1.0, 2 * x1))


def test_polynomial_fields_match_finite_differences():
    s = StructureDef.polynomial(3, 4, 3)
    x = np.array([0.9, 1.1, 0.0])
    phi, psi, phi1, psi1 = eval_fields(x, s)
    assert phi == 1.0 and phi1 == 0.0
    assert psi == pytest.approx((0.9 ** 3 - 1.1 ** 4) ** 3, rel=1e-14)
    h = 1e-6
    fd = (eval_fields(x + [h, 0, 0], s)[1] - eval_fields(x - [h, 0, 0], s)[1]) / (2 * h)
    assert psi1 == pytest.approx(fd, rel=1e-8)
    assert abnormal_Q(0.9, 1.1, s) == pytest.approx(psi1, rel=1e-14)
    assert eval_P(2.0, 1.0, s) == 7.0


def test_martinet_residual():
    s = StructureDef.polynomial(2, 3)
    t = np.linspace(0, 1, 7)
    on_gamma = np.column_stack([t ** 1.5, t, 0 * t])
    assert np.allclose(martinet_residual(on_gamma, s), 0.0, atol=1e-14)
    assert martinet_residual((1, 1, 0), StructureDef.heisenberg()) == 1.0
    assert martinet_residual((0, 3, 1), StructureDef.martinet()) == 0.0
    # Liu-Sussmann: (1 - x1) 2 x1 + x1^2 = x1 (2 - x1)
    assert martinet_residual((0.5, 0, 0), StructureDef.liu_sussmann()) == pytest.approx(0.75)
    for s in BUILTINS:
        assert isinstance(martinet_surface_description(s), str)
    assert "x1^2 = x2^3" in martinet_surface_description(StructureDef.polynomial(2, 3))


def test_segment_length():
    seg = segment((0, 0), (3, 4), n=3)
    assert sr_length(seg, StructureDef.polynomial(2, 3)) == pytest.approx(5.0, rel=1e-15)
    assert sr_length(seg, StructureDef.heisenberg()) == pytest.approx(5.0, rel=1e-15)


def test_liu_sussmann_length_uses_phi():
    # vertical segment at x1 = 1/2: u2 = x2' / phi = 2
    seg = segment((0.5, 0.0), (0.5, 1.0))
    assert sr_length(seg, StructureDef.liu_sussmann()) == pytest.approx(2.0, rel=1e-14)


def test_phi_vanishing_is_rejected():
    seg = segment((0.0, 0.0), (2.0, 1.0), n=3)
    with pytest.raises(DegenerateStructureError):
        lift_residual(seg, StructureDef.liu_sussmann())


def test_heisenberg_lift_is_enclosed_area():
    assert lift_residual(square(2.0), StructureDef.heisenberg()) == pytest.approx(4.0, rel=1e-15)
    assert lift_residual(square(2.0, ccw=False), StructureDef.heisenberg()) == pytest.approx(-4.0)


def test_lift_values_at_nodes():
    s = StructureDef.martinet()
    lift = horizontal_lift(square(1.0), 0.5, s)
    # x3' = x1^2 x2': only the right side (x1 = 1, up) and left side (x1 = 0) move x2
    assert np.allclose(lift.x3, [0.5, 0.5, 1.5, 1.5, 1.5], atol=1e-15)
    assert lift.increment == pytest.approx(1.0)
    assert lift.points3().shape == (5, 3)


def test_lift_vanishes_along_gamma():
    for a, b in [(2, 3), (3, 4), (4, 3)]:
        s = StructureDef.polynomial(a, b)
        assert abs(lift_residual(make_gamma(1.0, s=s, n=256), s)) < 1e-15


def test_lift_additive_under_concatenation():
    s = StructureDef.polynomial(2, 3)
    c1 = segment((0, 0), (1.0, 0.7), n=9)
    c2 = segment((1.0, 0.7), (0.4, 1.3), n=9)
    whole = concat(c1, c2)
    assert lift_residual(whole, s) == pytest.approx(lift_residual(c1, s) + lift_residual(c2, s),
                                                    rel=1e-12, abs=1e-15)
    chained = horizontal_lift(c2, horizontal_lift(c1, 0.0, s).x3_end, s).x3_end
    assert horizontal_lift(whole, 0.0, s).x3_end == pytest.approx(chained, rel=1e-12)


def test_length_invariant_under_refinement():
    s = StructureDef.polynomial(3, 4)
    coarse = make_gamma(1.0, s=s, n=256)
    fine = make_gamma(1.0, s=s, n=4096)
    assert abs(sr_length(coarse, s) - sr_length(fine, s)) < 1e-8
    assert node_lengths(fine, s)[-1] == pytest.approx(sr_length(fine, s), rel=1e-14)


def test_gamma_length_pinned_by_quadrature():
    from scipy.integrate import quad
    s = StructureDef.polynomial(2, 3)
    # gamma = (t^1.5, t): |gamma'| = sqrt(1 + 9t/4)
    ref = quad(lambda t: np.sqrt(1 + 2.25 * t), 0, 1, epsabs=0, epsrel=1e-13)[0]
    assert ref == pytest.approx(1.43970987337155, rel=1e-14)
    assert sr_length(make_gamma(1.0, s=s), s) == pytest.approx(ref, rel=1e-12)


def test_mesh_doubling_grid():
    worst = 0.0
    for a in range(1, 7):
        for b in range(1, 8):
            s = StructureDef.polynomial(a, b)
            for eps in (0.25, 1.0):
                d = sr_length(make_gamma(eps, s=s, n=2048), s) - sr_length(make_gamma(eps, s=s, n=4096), s)
                worst = max(worst, abs(d))
    assert worst < 1e-9


coords = st.floats(-2.0, 2.0, allow_nan=False)


@settings(max_examples=40, deadline=None)
@given(st.lists(st.tuples(coords, coords), min_size=3, max_size=8, unique=True))
def test_reversal_negates_lift_and_keeps_length(pts):
    pts = np.array(pts)
    if np.any(np.linalg.norm(np.diff(pts, axis=0), axis=1) < 1e-6):
        return
    curve = PlaneCurve(np.arange(len(pts), dtype=float), pts)
    s = StructureDef.polynomial(2, 3)
    fwd, back = lift_residual(curve, s), lift_residual(reverse(curve), s)
    assert back == pytest.approx(-fwd, rel=1e-11, abs=1e-12)
    assert sr_length(reverse(curve), s) == pytest.approx(sr_length(curve, s), rel=1e-13)
