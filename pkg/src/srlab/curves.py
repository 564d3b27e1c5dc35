"""Plane curves: the abnormal curve gamma, the cut, the correction
rectangle, the competitor, and the generic sampled-curve container."""

from dataclasses import dataclass

import numpy as np
from scipy.interpolate import PchipInterpolator

from .errors import ConstructionError, DomainError, ResolutionError, ValidationError

JUNCTION_TOL = 1e-14
DEFAULT_GAMMA_NODES = 4096
SIDE_NODES = 64


def _frozen(a):
    a = np.array(a, dtype=float)
    a.setflags(write=False)
    return a


class _Reflected:
    def __init__(self, f, total):
        self.f, self.total = f, total

    def __call__(self, t):
        xy, vel = self.f(self.total - t)
        return xy, -vel


class PlaneCurve:
    """A sampled absolutely continuous plane curve.

    ``params`` is a strictly increasing grid and ``points`` the curve at those
    parameters.  Between nodes the curve is linear unless an analytic
    evaluator ``exact(t) -> (points, velocities)`` is attached.  A curve may
    instead store its nodes as relative offsets from an ``anchor``
    (point = anchor * (1 + local)); integrals then use the offsets directly,
    which keeps tiny loops far from the origin accurate.  Concatenations keep
    their ingredients in ``parts`` so every piece is integrated in its own
    representation.
    """

    def __init__(self, params, points, *, exact=None, anchor=None, local=None, parts=None,
                 offset=0.0):
        params = _frozen(params)
        if anchor is not None:
            anchor = _frozen(anchor)
            local = _frozen(local)
            points = anchor * (1.0 + local)
        points = _frozen(points)
        if params.ndim != 1 or params.size < 2:
            raise ValidationError("a curve needs at least two nodes")
        if points.shape != (params.size, 2):
            raise ValidationError(f"points must have shape ({params.size}, 2), got {points.shape}")
        # composites only keep a display grid; their pieces carry the real one
        steps = np.diff(params)
        if not (np.all(steps >= 0) if parts else np.all(steps > 0)):
            raise ValidationError("curve parameters must be strictly increasing")
        if not np.all(np.isfinite(points)) or not np.all(np.isfinite(params)):
            raise ValidationError("curve coordinates must be finite")
        self.local_params = params
        self.offset = float(offset)
        self.params = _frozen(params + self.offset) if self.offset else params
        self.points = points
        self.exact = exact
        self.anchor = anchor
        self.local = local
        self.parts = tuple(parts) if parts else ()

    def __repr__(self):
        kind = "composite" if self.parts else ("exact" if self.exact else
                                               "anchored" if self.anchor is not None else "polyline")
        return (f"PlaneCurve({kind}, nodes={self.params.size}, "
                f"t=[{self.params[0]:.6g}, {self.params[-1]:.6g}])")

    @property
    def start(self):
        return self.points[0]

    @property
    def end(self):
        return self.points[-1]

    @property
    def n_intervals(self):
        return self.params.size - 1

    def is_closed(self, tol=1e-12):
        return float(np.linalg.norm(self.end - self.start)) <= tol

    def pieces(self):
        return self.parts if self.parts else (self,)

    def evaluate(self, t):
        """(points, velocities, local offsets or None) at local parameters
        ``t`` (those of ``local_params``; the curve is shifted by ``offset``).

        Only for simple (non-composite) curves.
        """
        if self.parts:
            raise ValidationError("evaluate() is defined on the pieces of a composite curve")
        t = np.asarray(t, dtype=float)
        if self.exact is not None:
            xy, vel = self.exact(t)
            return xy, vel, None
        shape = t.shape
        tt = t.ravel()
        lp = self.local_params
        k = np.clip(np.searchsorted(lp, tt, side="right") - 1, 0, self.n_intervals - 1)
        h = lp[k + 1] - lp[k]
        frac = ((tt - lp[k]) / h)[:, None]
        base = self.local if self.anchor is not None else self.points
        d = (base[k + 1] - base[k])
        loc = base[k] + frac * d
        dloc = d / h[:, None]
        if self.anchor is None:
            return loc.reshape(shape + (2,)), dloc.reshape(shape + (2,)), None
        xy = self.anchor * (1.0 + loc)
        vel = self.anchor * dloc
        return xy.reshape(shape + (2,)), vel.reshape(shape + (2,)), loc.reshape(shape + (2,))

    def shifted(self, dt):
        if dt == 0.0:
            return self
        if self.parts:
            return _assemble([p.shifted(dt) for p in self.parts])
        return PlaneCurve(self.local_params, self.points, exact=self.exact, anchor=self.anchor,
                          local=self.local, offset=self.offset + dt)

    def _reflected(self, total):
        if self.parts:
            return _assemble([p._reflected(total) for p in reversed(self.parts)])
        lp = self.local_params
        span = lp[0] + lp[-1]
        exact = _Reflected(self.exact, span) if self.exact is not None else None
        local = self.local[::-1] if self.local is not None else None
        return PlaneCurve(span - lp[::-1], self.points[::-1], exact=exact, anchor=self.anchor,
                          local=local, offset=total - self.offset - span)

    def polyline(self):
        """The same nodes with linear interpolation, dropping analytic data."""
        return PlaneCurve(self.params, self.points)


def _assemble(pieces):
    params = np.concatenate([pieces[0].params] + [p.params[1:] for p in pieces[1:]])
    points = np.concatenate([pieces[0].points] + [p.points[1:] for p in pieces[1:]])
    flat = []
    for p in pieces:
        flat.extend(p.pieces())
    if len(flat) == 1:
        return flat[0]
    return PlaneCurve(params, points, parts=flat)


def concat(*curves, tol=JUNCTION_TOL):
    """Concatenation c1 * c2 * ...; each curve's parameter interval is
    translated to start where the previous one ends."""
    if not curves:
        raise ValidationError("nothing to concatenate")
    out = [curves[0]]
    for c in curves[1:]:
        prev = out[-1]
        gap = float(np.linalg.norm(c.start - prev.end))
        if gap > tol:
            raise ConstructionError(f"junction gap {gap:.3e} exceeds {tol:g}")
        out.append(c.shifted(prev.params[-1] - c.params[0]))
    return _assemble(out)


def reverse(curve):
    """Inverse parameterisation t -> t0 + tN - t."""
    return curve._reflected(curve.params[0] + curve.params[-1])


def polyline(params, points):
    return PlaneCurve(params, points)


def segment(p0, p1, n=2, t0=0.0, t1=None):
    """Straight segment with ``n`` uniformly spaced nodes."""
    p0, p1 = np.asarray(p0, float), np.asarray(p1, float)
    if t1 is None:
        t1 = t0 + float(np.linalg.norm(p1 - p0))
    s = np.linspace(0.0, 1.0, n)
    pts = p0[None, :] + s[:, None] * (p1 - p0)[None, :]
    pts[-1] = p1
    return PlaneCurve(t0 + s * (t1 - t0), pts)


# ---------------------------------------------------------------------------
# the abnormal curve and the competitor


@dataclass(frozen=True)
class CompetitorParams:
    eps: float
    rho: float
    delta: float
    safety: float = 0.5

    def __post_init__(self):
        if not self.eps > 0:
            raise ValidationError("eps must be positive")
        if not 0 < self.rho < self.eps:
            raise ValidationError(f"rho must lie in (0, eps), got {self.rho!r}")
        if not 0 < self.delta < self.eps:
            raise ValidationError(f"delta must lie in (0, eps), got {self.delta!r}")
        if not 0 < self.safety < 1:
            raise ValidationError("safety must lie in (0, 1)")


class _GammaArc:
    """t -> (s1 t^q, s2 t) when b >= a, (s1 t, s2 t^q) when a > b."""

    def __init__(self, q, sign1, sign2, steep_first):
        self.q, self.s1, self.s2, self.steep_first = q, sign1, sign2, steep_first

    def __call__(self, t):
        t = np.asarray(t, dtype=float)
        tq = t ** self.q
        dq = self.q * t ** (self.q - 1.0)
        one = np.ones_like(t)
        if self.steep_first:
            xy = np.stack([self.s1 * tq, self.s2 * t], axis=-1)
            vel = np.stack([self.s1 * dq, self.s2 * one], axis=-1)
        else:
            xy = np.stack([self.s1 * t, self.s2 * tq], axis=-1)
            vel = np.stack([self.s1 * one, self.s2 * dq], axis=-1)
        return xy, vel


def _gamma_arc(s, sign1=1, sign2=1):
    s.require_polynomial("gamma")
    return _GammaArc(s.q, float(sign1), float(sign2), s.b >= s.a)


def gamma_point(t, s, sign1=1, sign2=1):
    """Projection of gamma at parameter t."""
    xy, _ = _gamma_arc(s, sign1, sign2)(np.array([float(t)]))
    return xy[0]


def graded_mesh(t0, t1, n, power=2):
    """Nodes t0 + (t1 - t0) (k / (n-1))^power, clustered at t0."""
    k = np.arange(n) / (n - 1)
    t = t0 + (t1 - t0) * k ** power
    t[-1] = t1
    return t


def _gamma_mesh(eps, n, extra=()):
    t = graded_mesh(0.0, eps, n)
    if extra:
        t = np.unique(np.concatenate([t, np.asarray(extra, float)]))
    return t


def make_gamma(eps, sign1=1, sign2=1, s=None, n=DEFAULT_GAMMA_NODES, extra_nodes=()):
    """gamma_eps^{sign1, sign2} on a graded mesh of ``n`` nodes."""
    if s is None:
        raise TypeError("make_gamma needs a StructureDef")
    s.require_polynomial("gamma")
    if not eps > 0:
        raise ValidationError("eps must be positive")
    if n < 2:
        raise ValidationError("need at least two nodes")
    if sign1 not in (1, -1) or sign2 not in (1, -1):
        raise ValidationError("signs must be +1 or -1")
    arc = _gamma_arc(s, sign1, sign2)
    t = _gamma_mesh(eps, n, extra_nodes)
    xy, _ = arc(t)
    return PlaneCurve(t, xy, exact=arc)


def gamma_restricted(t0, t1, s, n=DEFAULT_GAMMA_NODES, eps=None):
    """gamma^{+,+} on [t0, t1], using the nodes of the full-length graded mesh
    on [0, eps] that fall inside (so restrictions share nodes exactly)."""
    eps = t1 if eps is None else eps
    arc = _gamma_arc(s)
    t = _gamma_mesh(eps, n, (t0, t1))
    t = t[(t >= t0) & (t <= t1)]
    xy, _ = arc(t)
    return PlaneCurve(t, xy, exact=arc)


def make_kappa(cp, s, n=SIDE_NODES):
    """The cutting segment from the origin to gamma(rho), parameterised on
    [0, rho] so that the slow coordinate equals t."""
    s.require_polynomial("kappa")
    end = gamma_point(cp.rho, s)
    frac = np.linspace(0.0, 1.0, max(n, 2))
    pts = frac[:, None] * end[None, :]
    pts[-1] = end
    return PlaneCurve(frac * cp.rho, pts)


def _rectangle_local(s, delta):
    """Corner offsets (relative to the anchor) of the correction rectangle,
    in traversal order, anchor first and last."""
    if s.b >= s.a:
        # clockwise: right, down, left, up
        return np.array([[0, 0], [delta, 0], [delta, -delta], [0, -delta], [0, 0]], float)
    # counter-clockwise: up, left, down, right
    return np.array([[0, 0], [0, delta], [-delta, delta], [-delta, 0], [0, 0]], float)


def rectangle_anchor(eps, s):
    return gamma_point(eps, s)


def make_sigma(cp, s, side_nodes=SIDE_NODES, t0=0.0):
    """Boundary of the correction rectangle E_delta attached at gamma(eps),
    oriented opposite to the cut region, parameterised by arc length."""
    s.require_polynomial("sigma")
    if s.a == s.b:
        raise ConstructionError("no correction rectangle when a = b")
    anchor = rectangle_anchor(cp.eps, s)
    corners = _rectangle_local(s, cp.delta)
    side_len = np.abs(np.diff(corners * anchor, axis=0)).sum(axis=1)
    u = np.linspace(0.0, 1.0, side_nodes + 2)[:-1]
    local = [corners[k] + u[:, None] * (corners[k + 1] - corners[k]) for k in range(4)]
    local = np.concatenate(local + [corners[-1:]])
    knots = t0 + np.concatenate([[0.0], np.cumsum(side_len)])
    params = np.concatenate([knots[k] + u * side_len[k] for k in range(4)] + [knots[-1:]])
    return PlaneCurve(params, None, anchor=anchor, local=local)


def make_omega(cp, s, n=DEFAULT_GAMMA_NODES, side_nodes=SIDE_NODES):
    """kappa_rho * gamma|[rho, eps] * sigma_delta."""
    s.require_polynomial("omega")
    kappa = make_kappa(cp, s, side_nodes)
    mid = gamma_restricted(cp.rho, cp.eps, s, n, cp.eps)
    sigma = make_sigma(cp, s, side_nodes)
    return concat(kappa, mid, sigma)


def closing_loop(omega, cp, s, n=DEFAULT_GAMMA_NODES):
    """omega * (-gamma_eps) with gamma sampled on the mesh used inside omega,
    so the retraced arc on [rho, eps] coincides node by node."""
    g = make_gamma(cp.eps, s=s, n=n, extra_nodes=(cp.rho,))
    return concat(omega, reverse(g))


def cut_loop(cp, s, n=DEFAULT_GAMMA_NODES, side_nodes=SIDE_NODES):
    """kappa_rho * (-gamma_rho): the boundary of the cut region."""
    kappa = make_kappa(cp, s, side_nodes)
    g = gamma_restricted(0.0, cp.rho, s, n, cp.eps)
    return concat(kappa, reverse(g))


# ---------------------------------------------------------------------------
# arc length and regularity


def arclength_reparam(curve, s_max=None):
    """Chord-length reparameterisation: returns (arc, interpolant) where the
    monotone cubic ``interpolant`` maps arc length to the original parameter."""
    d = np.linalg.norm(np.diff(curve.points, axis=0), axis=1)
    if np.any(d <= 0):
        raise DomainError("repeated nodes: arc length is not invertible")
    arc = np.concatenate([[0.0], np.cumsum(d)])
    return arc, PchipInterpolator(arc, curve.params)


def _arclength_exact(s_struct, sign1=1, sign2=1):
    """Arc length of gamma from 0 to t, and its inverse by Newton."""
    from .quadrature import integrate

    q = s_struct.q
    m = min(s_struct.a, s_struct.b)

    def length(t):
        # t = T u^m makes the integrand smooth at 0
        def f(u):
            tau = t * u ** m
            x = q * q * tau ** (2 * q - 2)
            return (1.0 + x / (np.sqrt(1.0 + x) + 1.0)) * m * t * u ** (m - 1)
        return integrate(f, 0.0, 1.0, panels=4, rtol=1e-15)

    def inverse(sv):
        t = sv
        for _ in range(60):
            g = length(t) - sv
            dt = g / np.sqrt(1.0 + q * q * t ** (2 * q - 2))
            t -= dt
            if abs(dt) <= 4e-16 * abs(t):
                break
        return t

    return length, inverse


def regularity_probe(curve, k, s=None, s_values=None, stencil=0.25):
    """Finite-difference magnitude of the k-th derivative of the arc-length
    parameterisation near its start, on a geometric grid of arc lengths.

    Curves carrying an analytic gamma evaluator (first piece) are probed
    through the exact formula; sampled curves use a monotone cubic fit of the
    chord-length parameterisation and are limited to k <= 3.
    """
    if k < 1:
        raise ValidationError("derivative order must be >= 1")
    first = curve.pieces()[0]
    if s_values is None:
        total = float(np.linalg.norm(np.diff(curve.points, axis=0), axis=1).sum())
        s_values = np.geomspace(1e-4, 1e-2, 13) * total
    s_values = np.asarray(s_values, float)
    offsets = np.arange(k + 1) - k / 2.0
    coeffs = np.array([(-1) ** (k - j) * _binom(k, j) for j in range(k + 1)], float)
    out = []
    if isinstance(first.exact, _GammaArc) and s is not None:
        length, inverse = _arclength_exact(s)
        arc = first.exact
        for sv in s_values:
            h = stencil * sv
            pts = np.array([arc(np.array([inverse(sv + o * h)]))[0][0] for o in offsets])
            out.append((sv, float(np.linalg.norm(coeffs @ pts) / h ** k)))
        return out
    if k > 3:
        raise ResolutionError("sampled curves support derivative orders up to 3")
    arc_nodes, to_param = arclength_reparam(curve)
    spacing = np.diff(arc_nodes)
    fx = PchipInterpolator(curve.params, curve.points, axis=0)
    for sv in s_values:
        h = stencil * sv
        j = np.searchsorted(arc_nodes, sv)
        if h < spacing[min(j, spacing.size - 1)]:
            raise ResolutionError(f"stencil {h:.3g} below mesh spacing at s={sv:.3g}")
        pts = fx(to_param(sv + offsets * h))
        out.append((sv, float(np.linalg.norm(coeffs @ pts) / h ** k)))
    return out


def _binom(n, k):
    from math import comb
    return comb(n, k)
