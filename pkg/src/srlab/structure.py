"""Sub-Riemannian structures on R^3 spanned by

    X1 = d/dx1,    X2 = phi(x) d/dx2 + psi(x) d/dx3,

with the metric making X1, X2 orthonormal.  The polynomial family uses
phi = 1 and psi = P^c with P(x) = x1^a - x2^b; the three classical
examples (Heisenberg, Martinet, Liu-Sussmann) are built in.
"""

from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from .errors import DegenerateStructureError, UnsupportedStructureError
from .quadrature import integrate_intervals

POLYNOMIAL = "polynomial"
HEISENBERG = "heisenberg"
MARTINET = "martinet"
LIU_SUSSMANN = "liu_sussmann"
KINDS = (POLYNOMIAL, HEISENBERG, MARTINET, LIU_SUSSMANN)

PHI_MIN = 1e-9
# |P| below this many ulps of its terms is rounding noise on the zero locus
_SNAP_ULPS = 16.0 * np.finfo(float).eps


@dataclass(frozen=True)
class StructureDef:
    kind: str = POLYNOMIAL
    a: int = 2
    b: int = 3
    c: int = 2
    _q: Fraction = field(init=False, repr=False, compare=False, default=None)

    def __post_init__(self):
        if self.kind not in KINDS:
            raise UnsupportedStructureError(f"unknown structure kind {self.kind!r}")
        if self.kind == POLYNOMIAL:
            for name in ("a", "b", "c"):
                v = getattr(self, name)
                if int(v) != v or v < 1:
                    raise UnsupportedStructureError(f"{name} must be an integer >= 1, got {v!r}")
            object.__setattr__(self, "_q", Fraction(max(self.a, self.b), min(self.a, self.b)))

    @classmethod
    def polynomial(cls, a, b, c=2):
        return cls(POLYNOMIAL, int(a), int(b), int(c))

    @classmethod
    def heisenberg(cls):
        return cls(HEISENBERG)

    @classmethod
    def martinet(cls):
        return cls(MARTINET)

    @classmethod
    def liu_sussmann(cls):
        return cls(LIU_SUSSMANN)

    @property
    def is_polynomial(self):
        return self.kind == POLYNOMIAL

    @property
    def q_exact(self):
        """max(a, b) / min(a, b) as a Fraction."""
        self.require_polynomial("q")
        return self._q

    @property
    def q(self):
        return float(self.q_exact)

    def require_polynomial(self, what="this operation"):
        if self.kind != POLYNOMIAL:
            raise UnsupportedStructureError(f"{what} needs the polynomial structure, got {self.kind}")

    def label(self):
        if self.kind == POLYNOMIAL:
            return f"polynomial(a={self.a}, b={self.b}, c={self.c})"
        return self.kind


BUILTINS = (StructureDef.heisenberg(), StructureDef.martinet(), StructureDef.liu_sussmann())


def eval_P(x1, x2, s):
    """P(x1, x2) = x1^a - x2^b."""
    s.require_polynomial("P")
    return np.asarray(x1, dtype=float) ** s.a - np.asarray(x2, dtype=float) ** s.b


def _snap(p, scale):
    return np.where(np.abs(p) <= _SNAP_ULPS * scale, 0.0, p)


def _P_clean(x1, x2, s):
    t1 = np.asarray(x1, dtype=float) ** s.a
    t2 = np.asarray(x2, dtype=float) ** s.b
    return _snap(t1 - t2, np.maximum(np.abs(t1), np.abs(t2)))


def _P_anchored(anchor, local, s):
    """P at anchor * (1 + local), accurate when the offsets are tiny.

    An anchor lying on {P = 0} up to rounding is snapped onto it, so the
    result carries full relative precision in the offsets.
    """
    A1, A2 = float(anchor[0]), float(anchor[1])
    u1, u2 = local[..., 0], local[..., 1]
    T1, T2 = A1 ** s.a, A2 ** s.b
    base = float(_snap(np.array(T1 - T2), max(abs(T1), abs(T2))))
    return base + T1 * np.expm1(s.a * np.log1p(u1)) - T2 * np.expm1(s.b * np.log1p(u2))


def _field_arrays(x1, x2, s):
    """(phi, psi, phi_x1, phi_x2, psi_x1, psi_x2); every x3-derivative is 0."""
    x1 = np.asarray(x1, dtype=float)
    x2 = np.asarray(x2, dtype=float)
    one, zero = np.ones_like(x1 + x2), np.zeros_like(x1 + x2)
    if s.kind == HEISENBERG:
        return one, x1 + zero, zero, zero, one, zero
    if s.kind == MARTINET:
        return one, x1 ** 2 + zero, zero, zero, 2.0 * x1 + zero, zero
    if s.kind == LIU_SUSSMANN:
        return 1.0 - x1 + zero, x1 ** 2 + zero, -one, zero, 2.0 * x1 + zero, zero
    a, b, c = s.a, s.b, s.c
    P = _P_clean(x1, x2, s)
    Pc1 = P ** (c - 1)
    psi = Pc1 * P
    psi_x1 = c * a * x1 ** (a - 1) * Pc1
    psi_x2 = -c * b * x2 ** (b - 1) * Pc1
    return one, psi, zero, zero, psi_x1, psi_x2


def eval_fields(x, s):
    """(phi, psi, d phi/dx1, d psi/dx1) at the point ``x``."""
    x = np.asarray(x, dtype=float)
    phi, psi, phi_x1, _, psi_x1, _ = _field_arrays(x[..., 0], x[..., 1], s)
    if phi.ndim == 0:
        return float(phi), float(psi), float(phi_x1), float(psi_x1)
    return phi, psi, phi_x1, psi_x1


def abnormal_Q(x1, x2, s):
    """Q = d(P^c)/dx1 = c a x1^(a-1) P^(c-1)."""
    s.require_polynomial("Q")
    x1 = np.asarray(x1, dtype=float)
    return s.c * s.a * x1 ** (s.a - 1) * eval_P(x1, x2, s) ** (s.c - 1)


def martinet_residual(x, s):
    """phi psi_x1 - psi phi_x1; a horizontal curve is abnormal iff this
    vanishes identically along it."""
    x = np.asarray(x, dtype=float)
    phi, psi, phi_x1, _, psi_x1, _ = _field_arrays(x[..., 0], x[..., 1], s)
    r = phi * psi_x1 - psi * phi_x1
    return float(r) if np.ndim(r) == 0 else r


def martinet_surface_description(s):
    """Human-readable zero set of the Martinet residual."""
    if s.kind == HEISENBERG:
        return "empty (residual is identically 1)"
    if s.kind == MARTINET:
        return "plane x1 = 0 (residual 2 x1)"
    if s.kind == LIU_SUSSMANN:
        return "planes x1 = 0 and x1 = 2 (residual x1 (2 - x1))"
    parts = []
    if s.a >= 2:
        parts.append("plane x1 = 0")
    if s.c >= 2 or s.a == 1:
        parts.append(f"surface x1^{s.a} = x2^{s.b}")
    return " and ".join(parts) if parts else "empty"


# ---------------------------------------------------------------------------
# integrals along plane curves


def _piece_psi_phi(piece, t, s):
    xy, vel, local = piece.evaluate(t)
    if s.is_polynomial:
        if local is not None:
            P = _P_anchored(piece.anchor, local, s)
        else:
            P = _P_clean(xy[..., 0], xy[..., 1], s)
        return vel, P ** s.c, np.ones_like(P)
    phi, psi, *_ = _field_arrays(xy[..., 0], xy[..., 1], s)
    return vel, psi, phi


def _check_phi(phi):
    if np.any(np.abs(phi) < PHI_MIN):
        raise DegenerateStructureError(f"phi vanishes along the curve (|phi| < {PHI_MIN:g})")


def _check_phi_nodes(piece, s):
    if not s.is_polynomial:
        _check_phi(_field_arrays(piece.points[:, 0], piece.points[:, 1], s)[0])


def _lift_increments(piece, s, rtol):
    _check_phi_nodes(piece, s)

    def integrand(t):
        vel, psi, phi = _piece_psi_phi(piece, t, s)
        _check_phi(phi)
        return vel[..., 1] * psi / phi

    return integrate_intervals(integrand, piece.local_params, rtol=rtol)


def _length_increments(piece, s, rtol):
    _check_phi_nodes(piece, s)

    def integrand(t):
        vel, _, phi = _piece_psi_phi(piece, t, s)
        _check_phi(phi)
        return np.hypot(vel[..., 0], vel[..., 1] / phi)

    return integrate_intervals(integrand, piece.local_params, rtol=rtol)


@dataclass(frozen=True, eq=False)
class HorizontalLift:
    """A plane curve with the third coordinate recovered from the
    constraint x3' = omega2' psi / phi, sampled at the curve's nodes."""

    base: object
    x3: np.ndarray
    x3_start: float

    @property
    def x3_end(self):
        return float(self.x3[-1])

    @property
    def increment(self):
        return float(self.x3[-1] - self.x3_start)

    def points3(self):
        return np.column_stack([self.base.points, self.x3])


def horizontal_lift(curve, x3_start=0.0, s=None, rtol=1e-12):
    """Horizontal lift of ``curve``; x3 is integrated piece by piece on the
    curve's own mesh with composite 8-point Gauss-Legendre."""
    if s is None:
        raise TypeError("horizontal_lift needs a StructureDef")
    values = [np.array([float(x3_start)])]
    level = float(x3_start)
    for piece in curve.pieces():
        inc = _lift_increments(piece, s, rtol)
        cum = level + np.cumsum(inc)
        values.append(cum)
        level = float(cum[-1])
    return HorizontalLift(curve, np.concatenate(values), float(x3_start))


def lift_residual(curve, s, rtol=1e-12):
    """End value of the lift started at 0, i.e. the constraint integral."""
    return float(sum(_lift_increments(p, s, rtol).sum() for p in curve.pieces()))


def sr_length(curve, s, rtol=1e-12):
    """Sub-Riemannian length: integral of sqrt(u1^2 + u2^2) with
    u1 = omega1', u2 = omega2' / phi."""
    return float(sum(_length_increments(p, s, rtol).sum() for p in curve.pieces()))


def node_lengths(curve, s, rtol=1e-12):
    """Cumulative sub-Riemannian length at every node."""
    incs = [_length_increments(p, s, rtol) for p in curve.pieces()]
    return np.concatenate([[0.0], np.cumsum(np.concatenate(incs))])
