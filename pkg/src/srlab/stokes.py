"""Weighted areas and the two third-coordinate errors of the competitor.

For phi = 1 the lift of a closed plane curve ends at the line integral of
psi dx2, which by Green's formula is a sum over the faces U of the enclosed
regions of ind(U) * (integral of Q over U).  The cut of the abnormal curve
produces an error delta3_cut(rho); the small rectangle attached at the end
produces delta3_cor(delta), of opposite sign.
"""

from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache
from math import comb

import numpy as np
import shapely
from scipy import integrate as sp_integrate
from shapely.geometry import LineString

from .curves import _GammaArc, _Reflected
from .errors import DomainError, IllPosedQueryError, ResolutionError, ValidationError
from .quadrature import gauss_legendre
from .structure import abnormal_Q, lift_residual

CLOSURE_TOL = 1e-12
MIN_DISTANCE = 1e-9
WINDING_TOL = 1e-6
DEFAULT_GRID = 1024
TRIANGLE_ORDER = 8


# ---------------------------------------------------------------------------
# winding numbers


def _check_closed(points, tol=CLOSURE_TOL):
    gap = float(np.linalg.norm(points[-1] - points[0]))
    if gap > tol:
        raise DomainError(f"curve is not closed (gap {gap:.3e})")


def _segment_distance(points, p):
    a, b = points[:-1], points[1:]
    d = b - a
    L2 = (d * d).sum(axis=1)
    t = np.where(L2 > 0, ((p - a) * d).sum(axis=1) / np.where(L2 > 0, L2, 1.0), 0.0)
    t = np.clip(t, 0.0, 1.0)
    return float(np.min(np.linalg.norm(a + t[:, None] * d - p, axis=1)))


def _winding_raw(points, p):
    v = points - p
    ang = np.arctan2(v[:, 1], v[:, 0])
    step = np.diff(ang)
    step = (step + np.pi) % (2.0 * np.pi) - np.pi
    return float(step.sum() / (2.0 * np.pi))


def winding_number(closed, p, min_distance=MIN_DISTANCE):
    """Winding number of a closed polyline about the point ``p``."""
    pts = closed.points if hasattr(closed, "points") else np.asarray(closed, float)
    p = np.asarray(p, dtype=float)
    _check_closed(pts)
    dist = _segment_distance(pts, p)
    if dist <= min_distance:
        raise IllPosedQueryError(f"point lies on the curve (distance {dist:.3e})")
    w = _winding_raw(pts, p)
    k = round(w)
    if abs(w - k) > WINDING_TOL:
        raise IllPosedQueryError(f"winding sum {w!r} is not close to an integer")
    return int(k)


# ---------------------------------------------------------------------------
# closed forms for the cut


def _check_cut_args(s):
    s.require_polynomial("delta3")


@lru_cache(maxsize=None)
def cut_moment_exact(a, b, c):
    """|integral_0^1 (s^a - s^b)^c ds| as a Fraction."""
    total = sum(Fraction(comb(c, k) * (-1) ** k, a * (c - k) + b * k + 1) for k in range(c + 1))
    return abs(total)


def cut_moment(s):
    """M(a, b) = 1/(2a+1) - 2/(a+b+1) + 1/(2b+1) for c = 2; the general-c
    moment of (s^a - s^b)^c otherwise."""
    _check_cut_args(s)
    return float(cut_moment_exact(s.a, s.b, s.c))


def cut_exponent(s):
    """Power of rho in delta3_cut: c b + 1 when b >= a, c a + q when a > b."""
    _check_cut_args(s)
    if s.b >= s.a:
        return Fraction(s.c * s.b + 1)
    return s.c * s.a + s.q_exact


def delta3_cut(rho, s):
    """Magnitude of the third-coordinate error produced by the cut."""
    _check_cut_args(s)
    if not rho > 0:
        raise ValidationError("rho must be positive")
    if s.a == s.b:
        return 0.0
    return float(rho) ** float(cut_exponent(s)) * cut_moment(s)


def delta3_cut_quadrature(rho, s):
    """Independent evaluation: adaptive quadrature of P(kappa)^c kappa_2'."""
    _check_cut_args(s)
    q = s.q
    if s.b >= s.a:
        def f(t):
            return (t ** s.a * rho ** (s.b - s.a) - t ** s.b) ** s.c
    else:
        def f(t):
            x2 = t * rho ** (q - 1.0)
            return (t ** s.a - x2 ** s.b) ** s.c * rho ** (q - 1.0)
    val, _ = sp_integrate.quad(f, 0.0, rho, epsabs=0.0, epsrel=1e-13, limit=200)
    return abs(val)


# ---------------------------------------------------------------------------
# closed forms for the rectangle


def _padd(p, r):
    n = max(len(p), len(r))
    return [(p[i] if i < len(p) else 0) + (r[i] if i < len(r) else 0) for i in range(n)]


def _pscale(p, k):
    return [k * x for x in p]


def _pmul(p, r):
    out = [Fraction(0)] * (len(p) + len(r) - 1)
    for i, x in enumerate(p):
        if x:
            for j, y in enumerate(r):
                out[i + j] += x * y
    return out


def _binomial_poly(n, sign=1):
    """Coefficients of (1 + sign*d)^n."""
    return [Fraction(comb(n, k) * sign ** k) for k in range(n + 1)]


@lru_cache(maxsize=None)
def cor_polynomial(a, b, c):
    """Exact coefficients (in delta) of the scaled rectangle integral J with
    delta3_cor = eps^E * J(delta), normalised to positive leading term."""
    if a == b:
        return (Fraction(0),)
    one = [Fraction(1)]
    J = [Fraction(0)]
    if b > a:
        A = _binomial_poly(a)
        for k in range(c + 1):
            Apow = [Fraction(1)]
            for _ in range(c - k):
                Apow = _pmul(Apow, A)
            left = _padd(Apow, _pscale(one, -1))
            right = _padd(one, _pscale(_binomial_poly(b * k + 1, -1), -1))
            term = _pscale(_pmul(left, right), Fraction(comb(c, k) * (-1) ** k, b * k + 1))
            J = _padd(J, term)
    else:
        B = _binomial_poly(a, -1)
        for k in range(c + 1):
            Bpow = [Fraction(1)]
            for _ in range(c - k):
                Bpow = _pmul(Bpow, B)
            left = _padd(one, _pscale(Bpow, -1))
            right = _padd(_binomial_poly(b * k + 1), _pscale(one, -1))
            term = _pscale(_pmul(left, right), Fraction(comb(c, k) * (-1) ** k, b * k + 1))
            J = _padd(J, term)
    while len(J) > 1 and J[-1] == 0:
        J.pop()
    lead = next(x for x in J if x != 0)
    if lead < 0:
        J = [-x for x in J]
    return tuple(J)


def cor_exponent(s):
    """Power of eps in delta3_cor: c b + 1 when b > a, c a + q when a > b."""
    return cut_exponent(s)


def cor_leading_coefficient(s):
    """Lowest-order coefficient of J; J = coef * delta^(c+1) + O(delta^(c+2))."""
    _check_cut_args(s)
    J = cor_polynomial(s.a, s.b, s.c)
    return next(x for x in J if x != 0)


def _horner(coeffs, x):
    x = np.asarray(x, dtype=float)
    acc = np.zeros_like(x)
    for cf in reversed(coeffs):
        acc = acc * x + float(cf)
    return acc


def delta3_cor(delta, eps, s):
    """Magnitude of the integral of Q over the correction rectangle."""
    _check_cut_args(s)
    if delta < 0:
        raise ValidationError("delta must be nonnegative")
    if s.a == s.b or delta == 0:
        return 0.0
    J = cor_polynomial(s.a, s.b, s.c)
    val = float(_horner(J[s.c + 1:], delta)) * float(delta) ** (s.c + 1)
    return float(eps) ** float(cor_exponent(s)) * val


def delta3_cor_closed_form(delta, eps, s):
    """The c = 2, b > a formula written with powers of (1 + delta) and
    (1 - delta); loses relative accuracy for very small delta."""
    _check_cut_args(s)
    if s.c != 2 or not s.b > s.a:
        raise ValidationError("the closed form covers c = 2 with b > a")
    a, b = s.a, s.b
    inner = (delta * ((1 + delta) ** (2 * a) - 1) / (2 * a)
             - ((1 + delta) ** a - 1) / a * (1 - (1 - delta) ** (b + 1)) / (b + 1))
    return 2 * a * eps ** (2 * b + 1) * inner


def delta3_cor_quadrature(delta, eps, s, epsrel=1e-13):
    """2D adaptive quadrature of Q over the rectangle, in coordinates
    scaled to the endpoint of gamma."""
    _check_cut_args(s)
    a, b, c = s.a, s.b, s.c
    q = s.q
    if s.b > s.a:
        # x1 = eps^q (1 + w), x2 = eps (1 - u)
        def f(u, w):
            P = np.expm1(a * np.log1p(w)) - np.expm1(b * np.log1p(-u))
            return c * a * (1 + w) ** (a - 1) * P ** (c - 1)
    elif s.a > s.b:
        # x1 = eps (1 - w), x2 = eps^q (1 + u)
        def f(u, w):
            P = np.expm1(a * np.log1p(-w)) - np.expm1(b * np.log1p(u))
            return c * a * (1 - w) ** (a - 1) * P ** (c - 1)
    else:
        return 0.0
    val, _ = sp_integrate.dblquad(f, 0.0, delta, 0.0, delta, epsabs=0.0, epsrel=epsrel)
    return abs(val) * eps ** float(cor_exponent(s))


def _require_c2(s):
    _check_cut_args(s)
    if s.c != 2:
        raise ValidationError("this expansion is stated for c = 2")


def s1_s2(delta, s):
    """The two binomial sums whose difference is the scaled rectangle
    integral for c = 2, b > a (all terms kept)."""
    _require_c2(s)
    if not s.b > s.a:
        raise ValidationError("the S1/S2 sums are written for b > a")
    a, b = s.a, s.b
    S1 = sum(comb(2 * a, k) * delta ** (k + 1) for k in range(1, 2 * a + 1)) / (2 * a)
    S2 = sum((-1) ** (j + 1) * comb(a, i) * comb(b + 1, j) * delta ** (i + j)
             for i in range(1, a + 1) for j in range(1, b + 2)) / (a * (b + 1))
    return S1, S2


def f_ab(delta, s):
    """Relative correction in delta3_cor = a (a+b) eps^E delta^3 (1 + f)."""
    _require_c2(s)
    if delta < 0:
        raise ValidationError("delta must be nonnegative")
    a, b = s.a, s.b
    if a == b:
        raise ValidationError("f_ab is undefined for a = b")
    if b > a:
        t1 = sum(comb(2 * a, k) * delta ** (k - 2) for k in range(3, 2 * a + 1)) / (2 * a)
        t2 = sum((-1) ** (j + 1) * comb(a, i) * comb(b + 1, j) * delta ** (i + j - 3)
                 for i in range(1, a + 1) for j in range(1, b + 2) if i + j >= 4)
        return 2.0 / (a + b) * (t1 - t2 / (a * (b + 1)))
    J = cor_polynomial(a, b, 2)
    lead = J[3]
    return float(_horner([x / lead for x in J[4:]], delta)) * delta


# ---------------------------------------------------------------------------
# weighted-area decomposition


@dataclass(frozen=True)
class Component:
    winding: int
    area_weighted: float
    sample_point: tuple

    def to_dict(self):
        return {"winding": self.winding, "area_weighted": self.area_weighted,
                "sample_point": list(self.sample_point)}


@dataclass(frozen=True)
class WeightedAreaReport:
    components: tuple
    total: float
    line_integral: float
    tolerance: float = 0.0
    polygon_line_integral: float = 0.0
    vertices: int = 0
    extras: dict = field(default_factory=dict, compare=False)

    @property
    def component_scale(self):
        return max((abs(c.area_weighted) for c in self.components), default=0.0)

    def to_dict(self):
        return {"components": [c.to_dict() for c in self.components], "total": self.total,
                "line_integral": self.line_integral, "tolerance": self.tolerance,
                "polygon_line_integral": self.polygon_line_integral,
                "vertices": self.vertices}


def _peel(exact):
    """The analytic gamma arc under reflection wrappers, if any."""
    while isinstance(exact, _Reflected):
        exact = exact.f
    return exact if isinstance(exact, _GammaArc) else None


MAX_SPLIT = 4096


def _arc_points(lo, hi, k, arc):
    """k - 1 interior points of the gamma arc between slow coordinates lo < hi."""
    frac = np.arange(1, k) / k
    u = lo + (hi - lo) * frac
    pts = np.empty((k - 1, 2))
    if arc.steep_first:
        pts[:, 1] = arc.s2 * u
        pts[:, 0] = arc.s1 * u ** arc.q
    else:
        pts[:, 0] = arc.s1 * u
        pts[:, 1] = arc.s2 * u ** arc.q
    return pts


def _refine_arc(piece, arc, resolution):
    """Subdivide a gamma piece until every chord is at most 1/resolution of
    the distance of its far end from the origin.

    Sub-nodes are placed by interpolating the slow coordinate from the
    smaller node value, so that forward and retraced copies of the same arc
    produce bit-identical vertices.
    """
    P = piece.points
    slow = np.abs(P[:, 1] if arc.steep_first else P[:, 0])
    chord = np.linalg.norm(P[1:] - P[:-1], axis=1)
    far = np.maximum(np.linalg.norm(P[:-1], axis=1), np.linalg.norm(P[1:], axis=1))
    split = np.clip(np.ceil(resolution * chord / np.where(far > 0, far, 1.0)), 1, MAX_SPLIT)
    out = [P[:1]]
    for i in range(P.shape[0] - 1):
        k = int(split[i])
        if k > 1:
            lo, hi = sorted((slow[i], slow[i + 1]))
            inner = _arc_points(lo, hi, k, arc)
            out.append(inner if slow[i] <= slow[i + 1] else inner[::-1])
        out.append(P[i + 1:i + 2])
    return np.concatenate(out)


def _flatten(closed, resolution):
    """(vertices, frames, line integral along the polygon pieces).

    ``frames`` lists (anchor, {vertex: offset from anchor}) for pieces stored
    relative to an anchor, so faces made of them can be integrated in
    local coordinates.
    """
    chunks, frames, line = [], [], []
    for i, piece in enumerate(closed.pieces()):
        arc = _peel(piece.exact)
        if arc is None:
            pts = np.array(piece.points)
        else:
            pts = _refine_arc(piece, arc, resolution)
        if piece.anchor is not None:
            offs = piece.anchor * piece.local
            frames.append((np.array(piece.anchor),
                           {tuple(v): o for v, o in zip(map(tuple, pts), offs)}))
        chunks.append(pts if i == 0 else pts[1:])
        line.append((arc, pts, piece))
    pts = np.concatenate(chunks)
    keep = np.concatenate([[True], np.any(np.diff(pts, axis=0) != 0, axis=1)])
    return pts[keep], frames, line


def flatten(closed, resolution=DEFAULT_GRID):
    """Polygon approximation of a closed curve: linear pieces keep their
    nodes; analytic gamma pieces are subdivided so each chord is at most
    1/resolution of its distance from the origin (where the arc bends)."""
    return _flatten(closed, resolution)[0]


def _polyline_integral(pts, s, order=TRIANGLE_ORDER):
    """Line integral of psi dx2 along straight segments (Gauss, exact for
    the polynomial integrand)."""
    x, w = gauss_legendre(order)
    a, b = pts[:-1], pts[1:]
    xy = a[:, None, :] + (b - a)[:, None, :] * x[None, :, None]
    P = xy[..., 0] ** s.a - xy[..., 1] ** s.b
    return float(((P ** s.c) @ w * (b[:, 1] - a[:, 1])).sum())


def _polygon_line_integral(line, s):
    """Line integral of psi dx2 along the polygon.  Straight pieces are
    already polygonal and keep their exact lift; chords of refined arcs that
    are traversed once in each direction cancel exactly and are dropped."""
    total = 0.0
    net = {}
    for arc, pts, piece in line:
        if arc is None:
            total += lift_residual(piece, s)
            continue
        for a, b in zip(map(tuple, pts[:-1]), map(tuple, pts[1:])):
            key, sign = ((a, b), 1) if a <= b else ((b, a), -1)
            net[key] = net.get(key, 0) + sign
    segs = [(k, m) for k, m in net.items() if m]
    if segs:
        a = np.array([k[0] for k, _ in segs])
        b = np.array([k[1] for k, _ in segs])
        m = np.array([m for _, m in segs], float)
        x, w = gauss_legendre(TRIANGLE_ORDER)
        xy = a[:, None, :] + (b - a)[:, None, :] * x[None, :, None]
        P = xy[..., 0] ** s.a - xy[..., 1] ** s.b
        total += float((m * ((P ** s.c) @ w) * (b[:, 1] - a[:, 1])).sum())
    return total


@lru_cache(maxsize=None)
def _triangle_rule(order):
    """Collapsed (Duffy) Gauss rule on the unit triangle: barycentric
    weights for the 3 vertices and the quadrature weights."""
    x, w = gauss_legendre(order)
    u, v = np.meshgrid(x, x, indexing="ij")
    wu, wv = np.meshgrid(w, w, indexing="ij")
    # (u, v) in the square -> (u, v (1 - u)) in the triangle
    lam1 = u.ravel()
    lam2 = (v * (1.0 - u)).ravel()
    weights = (wu * wv * (1.0 - u)).ravel()
    lam0 = 1.0 - lam1 - lam2
    return np.stack([lam0, lam1, lam2], axis=1), weights


def _P_offset(A, d, s):
    """P at A + d for small offsets d, with P(A) snapped to the zero locus."""
    T1, T2 = float(A[0]) ** s.a, float(A[1]) ** s.b
    base = T1 - T2
    if abs(base) <= 16.0 * np.finfo(float).eps * max(abs(T1), abs(T2)):
        base = 0.0
    return (base + T1 * np.expm1(s.a * np.log1p(d[..., 0] / A[0]))
            - T2 * np.expm1(s.b * np.log1p(d[..., 1] / A[1])))


def _pick_frame(face, frames):
    coords = np.asarray(face.exterior.coords)
    size = float(np.ptp(coords, axis=0).max())
    for A, table in frames:
        if np.all(A != 0) and size < 1e-2 * float(np.abs(A).min()):
            hits = sum(tuple(v) in table for v in coords)
            if hits >= 3:
                return A, table
    return None


def _to_frame(ring, A, table, scale):
    return [tuple(table[tuple(v)] / scale) if tuple(v) in table else tuple((np.asarray(v) - A) / scale)
            for v in np.asarray(ring.coords)]


def _triangles(poly):
    tris = shapely.constrained_delaunay_triangles(poly)
    coords = [np.asarray(t.exterior.coords)[:3] for t in shapely.get_parts(tris)]
    return np.stack(coords) if coords else None


def _triangle_sum(T, Qfun, order):
    bary, w = _triangle_rule(order)
    pts = np.einsum("qk,tkd->tqd", bary, T)
    area2 = ((T[:, 1, 0] - T[:, 0, 0]) * (T[:, 2, 1] - T[:, 0, 1])
             - (T[:, 2, 0] - T[:, 0, 0]) * (T[:, 1, 1] - T[:, 0, 1]))
    return float((np.abs(area2) * (Qfun(pts) @ w)).sum())


def _face_integral(poly, s, frames=(), order=TRIANGLE_ORDER):
    """Integral of Q over a polygonal face (holes excluded)."""
    frame = _pick_frame(poly, frames)
    if frame is None:
        T = _triangles(poly)
        if T is None:
            return 0.0
        return _triangle_sum(T, lambda p: abnormal_Q(p[..., 0], p[..., 1], s), order)
    A, table = frame
    scale = float(np.ptp(np.asarray(poly.exterior.coords), axis=0).max())
    local = shapely.Polygon(_to_frame(poly.exterior, A, table, scale),
                            [_to_frame(r, A, table, scale) for r in poly.interiors])
    T = _triangles(local)
    if T is None:
        return 0.0

    def Q(p):
        d = p * scale
        x1 = A[0] + d[..., 0]
        return s.c * s.a * x1 ** (s.a - 1) * _P_offset(A, d, s) ** (s.c - 1)

    return _triangle_sum(T, Q, order) * scale * scale


def _faces(pts):
    lines = shapely.unary_union(LineString(pts))
    return [f for f in shapely.get_parts(shapely.polygonize(shapely.get_parts(lines)))
            if f.area > 0]


def _decompose(pts, s, min_distance, frames=()):
    comps = []
    for face in _faces(pts):
        rp = face.representative_point()
        p = np.array([rp.x, rp.y])
        dist = _segment_distance(pts, p)
        if dist <= min_distance:
            # fall back to the centroid of the largest triangle
            tris = shapely.get_parts(shapely.constrained_delaunay_triangles(face))
            big = max(tris, key=lambda t: t.area)
            c = big.centroid
            p = np.array([c.x, c.y])
        w = winding_number(pts, p, min_distance=min(min_distance, 0.5 * _segment_distance(pts, p)))
        if w == 0:
            continue
        comps.append(Component(w, w * _face_integral(face, s, frames), (float(p[0]), float(p[1]))))
    return sorted(comps, key=lambda c: c.sample_point)


def weighted_area_decomposition(closed, s, grid=DEFAULT_GRID, min_distance=MIN_DISTANCE):
    """Faces of the plane minus a closed curve, their winding numbers and
    Q-weighted areas, and the exact boundary integral of psi dx2.

    The curve is converted to a polygon (analytic arcs subdivided to a
    relative chord length of 1/``grid``), the faces are found by polygon noding,
    and Q is integrated over each face by a triangle Gauss rule on a
    constrained triangulation.  ``tolerance`` is the gap between the line
    integral along the polygon and along the exact curve.
    """
    s.require_polynomial("weighted_area_decomposition")
    _check_closed(closed.points)
    if grid < 2:
        raise ValidationError("grid must be at least 2")
    pts, frames, line = _flatten(closed, grid)
    comps = _decompose(pts, s, min_distance, frames)
    coarse = _decompose(flatten(closed, max(2, grid // 2)), s, min_distance)
    if len(coarse) != len(comps) or [c.winding for c in coarse] != [c.winding for c in comps]:
        raise ResolutionError(
            f"component count unstable under refinement ({len(coarse)} vs {len(comps)})")
    total = 0.0
    for c in comps:
        total += c.area_weighted
    exact = lift_residual(closed, s)
    poly = _polygon_line_integral(line, s)
    return WeightedAreaReport(tuple(comps), total, exact, abs(poly - exact), poly, len(pts))

