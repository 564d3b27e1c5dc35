"""The cut-and-rectangle competitor: exponent criterion, choice of (rho,
delta), length accounting and verification."""

from dataclasses import asdict, dataclass, field
from fractions import Fraction

import numpy as np
from scipy.optimize import brentq

from .curves import CompetitorParams, gamma_point, make_gamma, make_omega, DEFAULT_GAMMA_NODES, SIDE_NODES
from .errors import BracketError, NotConstructibleError, ValidationError
from .quadrature import integrate
from .stokes import (cor_exponent, cor_leading_coefficient, cut_exponent, cut_moment,
                     delta3_cor, delta3_cut)
from .structure import lift_residual, sr_length

ENDPOINT_TOL = 1e-12
RESIDUAL_FACTOR = 1e-10
BALANCE_RTOL = 1e-13


@dataclass(frozen=True)
class CriterionReport:
    constructible: bool
    margin: float
    branch: str
    margin_exact: Fraction = field(default=None, repr=False)
    exponent_gap: float = None

    def to_dict(self):
        return {"constructible": self.constructible, "margin": self.margin,
                "branch": self.branch, "exponent_gap": self.exponent_gap}


def _branch(s):
    if s.a == s.b:
        return "a=b"
    return "b>a" if s.b > s.a else "a>b"


def exponent_gap(s):
    """E/(c+1) - (2q-1): the rectangle cost scales like rho^(E/(c+1)) and the
    cut gain like rho^(2q-1); the competitor wins for small rho iff > 0."""
    s.require_polynomial("exponent_gap")
    return cut_exponent(s) / (s.c + 1) - (2 * s.q_exact - 1)


def criterion(s):
    """(c/2) max(a, b) + 2 - 3q > 0, evaluated exactly."""
    s.require_polynomial("criterion")
    margin = Fraction(s.c, 2) * max(s.a, s.b) + 2 - 3 * s.q_exact
    ok = bool(margin > 0 and s.a != s.b)
    gap = float(exponent_gap(s)) if s.a != s.b else None
    return CriterionReport(ok, float(margin), _branch(s), margin, gap)


def _gain_constant(s):
    q = s.q
    return (q - 1.0) ** 2 / (4.0 * (2.0 * q - 1.0))


def balance_constant(eps, s):
    """C with delta3_cut(rho) ~ C delta^(c+1) <=> rho^E M = Ccor eps^E delta^(c+1)."""
    return float(cor_leading_coefficient(s)) * eps ** float(cor_exponent(s)) / cut_moment(s)


def rho_star(eps, s, safety=0.5):
    """Largest rho with C^(-1/(c+1)) (eps + eps^q) rho^(E/(c+1)) equal to
    safety * (q-1)^2/(4(2q-1)) rho^(2q-1)."""
    gap = float(exponent_gap(s))
    C = balance_constant(eps, s)
    base = safety * _gain_constant(s) * C ** (1.0 / (s.c + 1)) / (eps + eps ** s.q)
    return base ** (1.0 / gap)


def solve_delta(rho, eps, s):
    """delta in (0, eps/2] with delta3_cor(delta) = delta3_cut(rho)."""
    target = delta3_cut(rho, s)

    def g(d):
        return delta3_cor(d, eps, s) - target

    hi_cap = 0.5 * eps
    d0 = (target / (float(cor_leading_coefficient(s)) * eps ** float(cor_exponent(s)))) ** (1.0 / (s.c + 1))
    lo, hi = 0.25 * d0, min(4.0 * d0, hi_cap)
    if not (lo < hi and g(lo) < 0 < g(hi)):
        lo, hi = 0.0, hi_cap
        g_hi = g(hi)
        if not g_hi > 0:
            raise BracketError(f"no root in (0, {hi_cap:g}]: g(0) = {-target:.3e}, g({hi_cap:g}) = {g_hi:.3e}")
    d = brentq(g, lo, hi, xtol=1e-300, rtol=4 * np.finfo(float).eps, maxiter=500)
    # polish on the last few ulps
    for _ in range(4):
        nxt = np.nextafter(d, np.inf) if g(d) < 0 else np.nextafter(d, 0.0)
        if abs(g(nxt)) < abs(g(d)):
            d = nxt
        else:
            break
    return float(d)


def solve_params(eps, s, safety=0.5):
    """(rho, delta) for the competitor: rho from the power-law condition with
    a safety factor (capped at eps/2), delta from the exact balance."""
    s.require_polynomial("solve_params")
    if not eps > 0:
        raise ValidationError("eps must be positive")
    if not 0 < safety < 1:
        raise ValidationError("safety must lie in (0, 1)")
    rep = criterion(s)
    if not rep.constructible:
        raise NotConstructibleError(f"{s.label()}: margin {rep.margin:g} (branch {rep.branch})")
    if not rep.exponent_gap > 0:
        raise NotConstructibleError(
            f"{s.label()}: rectangle cost exponent does not beat the gain exponent "
            f"(gap {rep.exponent_gap:g})")
    rho = min(rho_star(eps, s, safety), 0.5 * eps)
    delta = solve_delta(rho, eps, s)
    return CompetitorParams(eps=float(eps), rho=float(rho), delta=delta, safety=float(safety))


def length_gain(rho, s):
    """L(gamma_rho) - L(kappa_rho), evaluated without cancellation."""
    s.require_polynomial("length_gain")
    if not rho > 0:
        raise ValidationError("rho must be positive")
    if s.a == s.b:
        return 0.0
    q = s.q
    m = min(s.a, s.b)
    k = 2 * (max(s.a, s.b) - m)
    qq = q * q * rho ** (2 * q - 2)

    # t = rho u^m, so q^2 t^(2q-2) = qq u^k
    def f(u):
        x = qq * u ** k
        return x / (np.sqrt(1.0 + x) + 1.0) * m * u ** (m - 1)

    excess = rho * integrate(f, 0.0, 1.0, panels=4, rtol=1e-15)
    chord_excess = rho ** (2 * q) / (np.sqrt(rho * rho + rho ** (2 * q)) + rho)
    return float(excess - chord_excess)


def length_gain_leading(rho, s):
    """(q-1)^2 / (2 (2q-1)) rho^(2q-1)."""
    q = s.q
    return (q - 1.0) ** 2 / (2.0 * (2.0 * q - 1.0)) * rho ** (2 * q - 1)


def rectangle_cost(cp, s):
    return 2.0 * cp.delta * (cp.eps + cp.eps ** s.q)


@dataclass(frozen=True)
class VerificationReport:
    lengths: tuple
    gain_net: float
    constraint_residual: float
    endpoints_ok: bool
    rho: float
    delta: float
    control_distance: float = None
    delta3_cut: float = 0.0
    endpoint_mismatch: float = 0.0
    gain_accounting: float = 0.0

    @property
    def L_gamma(self):
        return self.lengths[0]

    @property
    def L_omega(self):
        return self.lengths[1]

    @property
    def residual_bound(self):
        return RESIDUAL_FACTOR * self.delta3_cut

    @property
    def residual_ok(self):
        return abs(self.constraint_residual) <= self.residual_bound

    @property
    def shorter_competitor_found(self):
        return self.gain_net > 0 and self.residual_ok and self.endpoints_ok

    def to_dict(self):
        d = asdict(self)
        d["lengths"] = list(self.lengths)
        d["shorter_competitor_found"] = self.shorter_competitor_found
        return d


def verify_competitor(cp, s, n=DEFAULT_GAMMA_NODES, side_nodes=SIDE_NODES, control_distance=None):
    """Build omega_{rho,delta}, lift it and compare with gamma_eps."""
    s.require_polynomial("verify_competitor")
    omega = make_omega(cp, s, n, side_nodes)
    gamma = make_gamma(cp.eps, s=s, n=n)
    L_gamma = sr_length(gamma, s)
    L_omega = sr_length(omega, s)
    target = gamma_point(cp.eps, s)
    mismatch = max(float(np.linalg.norm(omega.start)), float(np.linalg.norm(omega.end - target)))
    residual = lift_residual(omega, s)
    accounting = length_gain(cp.rho, s) - rectangle_cost(cp, s)
    return VerificationReport(
        lengths=(L_gamma, L_omega), gain_net=L_gamma - L_omega, constraint_residual=residual,
        endpoints_ok=mismatch < ENDPOINT_TOL, rho=cp.rho, delta=cp.delta,
        control_distance=control_distance, delta3_cut=delta3_cut(cp.rho, s),
        endpoint_mismatch=mismatch, gain_accounting=accounting)


def rho_sweep(eps, s, rhos):
    """For each rho, balance delta exactly and return (rho, delta, gain)
    with gain = length_gain(rho) - 2 delta (eps + eps^q)."""
    rows = []
    for rho in rhos:
        d = solve_delta(rho, eps, s)
        rows.append((float(rho), d, length_gain(rho, s) - 2.0 * d * (eps + eps ** s.q)))
    return rows
