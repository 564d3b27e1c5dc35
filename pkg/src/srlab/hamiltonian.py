"""Normal extremals: H(x, p) = p1^2/2 + h^2/2 with h = p2 phi + p3 psi,
integrated with the classical fixed-step Runge-Kutta scheme, and the
non-normality residual of the abnormal curve."""

from dataclasses import dataclass

import numpy as np

from .errors import BlowUpError, ResolutionError, ValidationError
from .structure import _field_arrays

NONZERO_COVECTOR = 1e-12


@dataclass(frozen=True)
class HamiltonianState:
    x: tuple
    p: tuple

    def __post_init__(self):
        x = tuple(float(v) for v in self.x)
        p = tuple(float(v) for v in self.p)
        if len(x) != 3 or len(p) != 3:
            raise ValidationError("x and p must have three components")
        if not all(np.isfinite(x + p)):
            raise ValidationError("state must be finite")
        object.__setattr__(self, "x", x)
        object.__setattr__(self, "p", p)

    @classmethod
    def from_array(cls, v):
        return cls(tuple(v[:3]), tuple(v[3:]))

    def as_array(self):
        return np.array(self.x + self.p)


def _h(y, s):
    phi, psi, *_ = _field_arrays(y[..., 0], y[..., 1], s)
    return y[..., 4] * phi + y[..., 5] * psi


def _hamiltonian(y, s):
    return 0.5 * y[..., 3] ** 2 + 0.5 * _h(y, s) ** 2


def ham_eval(st, s):
    """H = p1^2/2 + (p2 phi + p3 psi)^2/2 at the state."""
    return float(_hamiltonian(st.as_array(), s))


def ham_rhs(y, s):
    """Right side of the Hamiltonian system for the stacked state (x, p)."""
    phi, psi, phi1, phi2, psi1, psi2 = _field_arrays(y[..., 0], y[..., 1], s)
    p1, p2, p3 = y[..., 3], y[..., 4], y[..., 5]
    h = p2 * phi + p3 * psi
    out = np.empty_like(y)
    out[..., 0] = p1
    out[..., 1] = h * phi
    out[..., 2] = h * psi
    out[..., 3] = -h * (p2 * phi1 + p3 * psi1)
    out[..., 4] = -h * (p2 * phi2 + p3 * psi2)
    out[..., 5] = 0.0
    return out


@dataclass(frozen=True, eq=False)
class Trajectory:
    t: np.ndarray
    y: np.ndarray
    H: np.ndarray

    def __len__(self):
        return self.t.size

    def __getitem__(self, k):
        return HamiltonianState.from_array(self.y[k])

    def states(self):
        return [self[k] for k in range(len(self))]

    @property
    def x(self):
        return self.y[:, :3]

    @property
    def p(self):
        return self.y[:, 3:]

    @property
    def energy_drift(self):
        return float(np.max(np.abs(self.H - self.H[0])))


def _rk4_step(y, h, s):
    k1 = ham_rhs(y, s)
    k2 = ham_rhs(y + 0.5 * h * k1, s)
    k3 = ham_rhs(y + 0.5 * h * k2, s)
    k4 = ham_rhs(y + h * k3, s)
    return y + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)


def ham_flow(st0, T, s, step=1e-3):
    """Fixed-step RK4 trajectory on [0, T]; the last step is shortened if
    T is not a multiple of ``step``."""
    if not T > 0 or not step > 0:
        raise ValidationError("T and step must be positive")
    n = int(np.ceil(T / step - 1e-9))
    t = np.minimum(np.arange(n + 1) * step, T)
    t[-1] = T
    y = np.empty((n + 1, 6))
    y[0] = st0.as_array()
    for k in range(n):
        with np.errstate(over="ignore", invalid="ignore"):
            nxt = _rk4_step(y[k], t[k + 1] - t[k], s)
        if not np.all(np.isfinite(nxt)):
            raise BlowUpError(f"non-finite state after t = {t[k]:.6g}", last_time=float(t[k]))
        y[k + 1] = nxt
    return Trajectory(t, y, _hamiltonian(y, s))


def convergence_slope(st0, T, s, steps=(0.1, 0.05, 0.025, 0.0125)):
    """Observed order of the integrator: log-log slope of the endpoint error
    |y_h(T) - y_{h/2}(T)| against h."""
    steps = np.asarray(steps, float)
    ends = [ham_flow(st0, T, s, h).y[-1] for h in np.append(steps, steps[-1] / 2)]
    err = np.array([np.linalg.norm(ends[k] - ends[k + 1]) for k in range(steps.size)])
    if np.any(err == 0):
        raise ResolutionError("the scheme is exact on this trajectory; no order to measure")
    return float(np.polyfit(np.log(steps), np.log(err), 1)[0]), err


def energy_slope(st0, T, s, steps=(0.1, 0.05, 0.025, 0.0125)):
    """Log-log slope of the energy drift against the step."""
    steps = np.asarray(steps, float)
    drift = np.array([ham_flow(st0, T, s, h).energy_drift for h in steps])
    return float(np.polyfit(np.log(steps), np.log(drift), 1)[0]), drift


def fit_circle(points):
    """Algebraic least-squares circle (centre, radius, max |r_i - R| / R)."""
    pts = np.asarray(points, float)
    x, y = pts[:, 0], pts[:, 1]
    A = np.column_stack([2 * x, 2 * y, np.ones_like(x)])
    sol, *_ = np.linalg.lstsq(A, x * x + y * y, rcond=None)
    cx, cy = sol[0], sol[1]
    R = np.sqrt(sol[2] + cx * cx + cy * cy)
    r = np.hypot(x - cx, y - cy)
    return (float(cx), float(cy)), float(R), float(np.max(np.abs(r - R)) / R)


def _check_unit(p0):
    p0 = np.asarray(p0, float)
    norm = np.linalg.norm(p0, axis=-1)
    if np.any(np.abs(norm - 1.0) > 1e-12):
        raise ValidationError("covector (p1, p2) must have unit norm")
    return p0


def _residuals(p, eps, s, grid):
    t = np.linspace(0.0, eps, grid)
    p1, p2 = p[..., 0:1], p[..., 1:2]
    c1 = p1 ** s.a
    c2 = p2 ** s.b
    vals = np.abs(c1 * t ** s.a - c2 * t ** s.b)
    scale = np.maximum(np.abs(c1) * eps ** s.a, np.abs(c2) * eps ** s.b)
    return vals.max(axis=-1) / scale[..., 0]


def normality_residual(p0, eps, s, grid=1001):
    """max over t in [0, eps] of |p1^a t^a - p2^b t^b|, scaled by the largest
    coefficient; zero would be needed for gamma to be normal."""
    s.require_polynomial("normality_residual")
    p0 = _check_unit(p0)
    if p0.shape != (2,):
        raise ValidationError("p0 must be a pair (p1, p2)")
    return float(_residuals(p0[None, :], eps, s, grid)[0])


def min_normality_residual(s, n_covectors=10_000, eps=1.0, grid=1001):
    """Minimum of the residual over ``n_covectors`` equally spaced unit
    covectors, and the minimising covector."""
    s.require_polynomial("normality_residual")
    theta = 2.0 * np.pi * np.arange(n_covectors) / n_covectors
    P = np.column_stack([np.cos(theta), np.sin(theta)])
    r = _residuals(P, eps, s, grid)
    k = int(np.argmin(r))
    return float(r[k]), tuple(P[k])
