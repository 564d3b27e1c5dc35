"""Direct minimisation of polyline length with fixed endpoints and the
constraint that the horizontal lift closes (I = 0), and the control-space
distance between curves."""

from dataclasses import dataclass, field, replace

import numpy as np
from scipy.optimize import minimize

from .curves import PlaneCurve, gamma_point, make_gamma
from .errors import DivergenceError, DomainError, GradientUndefinedError, UnsupportedStructureError, ValidationError
from .quadrature import gauss_legendre
from .stokes import delta3_cut
from .structure import lift_residual, sr_length

MIN_NODES = 16
DEFAULT_NODES = 400
ENDPOINT_TOL = 1e-9
# improvements below this are discretisation noise of an N = 400 polyline
NOISE_FLOOR = 1e-5
WITNESS_DISTANCE = 0.5


def _require_flat(s):
    s.require_polynomial("the optimizer")
    if not s.is_polynomial:
        raise UnsupportedStructureError("the optimizer needs phi = 1")


def _psi_grad(x1, x2, s):
    """psi = P^c and its gradient."""
    P = x1 ** s.a - x2 ** s.b
    Pc1 = P ** (s.c - 1)
    return Pc1 * P, s.c * Pc1 * s.a * x1 ** (s.a - 1), -s.c * Pc1 * s.b * x2 ** (s.b - 1)


def _gauss_order(s):
    # psi along a segment is a polynomial of degree c * max(a, b)
    return max(4, (s.c * max(s.a, s.b)) // 2 + 2)


def _length_grad(z):
    d = np.diff(z, axis=0)
    ell = np.hypot(d[:, 0], d[:, 1])
    if np.any(ell == 0):
        raise GradientUndefinedError("zero-length edge")
    u = d / ell[:, None]
    g = np.zeros_like(z)
    g[:-1] -= u
    g[1:] += u
    return float(ell.sum()), g


def _constraint_trapezoid(z, s):
    psi, gx, gy = _psi_grad(z[:, 0], z[:, 1], s)
    dy = np.diff(z[:, 1])
    avg = 0.5 * (psi[:-1] + psi[1:])
    I = float((avg * dy).sum())
    g = np.zeros_like(z)
    g[:-1, 0] += 0.5 * gx[:-1] * dy
    g[1:, 0] += 0.5 * gx[1:] * dy
    g[:-1, 1] += 0.5 * gy[:-1] * dy - avg
    g[1:, 1] += 0.5 * gy[1:] * dy + avg
    return I, g


def _constraint_gauss(z, s):
    x, w = gauss_legendre(_gauss_order(s))
    a, d = z[:-1], np.diff(z, axis=0)
    p = a[:, None, :] + d[:, None, :] * x[None, :, None]
    psi, gx, gy = _psi_grad(p[..., 0], p[..., 1], s)
    dy = d[:, 1]
    mean = psi @ w
    I = float((mean * dy).sum())
    g = np.zeros_like(z)
    wl, wr = w * (1.0 - x), w * x
    g[:-1, 0] += (gx @ wl) * dy
    g[1:, 0] += (gx @ wr) * dy
    g[:-1, 1] += (gy @ wl) * dy - mean
    g[1:, 1] += (gy @ wr) * dy + mean
    return I, g


RULES = {"trapezoid": _constraint_trapezoid, "gauss": _constraint_gauss}


def _points(curve):
    return np.asarray(curve.points if hasattr(curve, "points") else curve, float)


def constraint_and_gradient(curve, s, rule="trapezoid"):
    """(I, dI, L, dL) for a polyline: the constraint integral of psi dx2 by
    the chosen rule and the polyline length, with gradients per node
    (rows of shape (N, 2); endpoint rows included for completeness)."""
    _require_flat(s)
    if rule not in RULES:
        raise ValidationError(f"unknown rule {rule!r}")
    z = _points(curve)
    L, dL = _length_grad(z)
    I, dI = RULES[rule](z, s)
    return I, dI, L, dL


# ---------------------------------------------------------------------------
# control distance


def _unit_tangents(z):
    d = np.diff(z, axis=0)
    ell = np.hypot(d[:, 0], d[:, 1])
    keep = ell > 0
    return np.concatenate([[0.0], np.cumsum(ell[keep])]), d[keep] / ell[keep, None]


def control_distance(c1, c2, tol=ENDPOINT_TOL):
    """Sup distance between the controls of two curves, both parameterised
    at constant speed on [0, 1] (control = length * unit tangent)."""
    z1, z2 = _points(c1), _points(c2)
    mis = max(np.linalg.norm(z1[0] - z2[0]), np.linalg.norm(z1[-1] - z2[-1]))
    if mis > tol:
        raise DomainError(f"endpoint mismatch {mis:.3e}")
    s1, u1 = _unit_tangents(z1)
    s2, u2 = _unit_tangents(z2)
    L1, L2 = s1[-1], s2[-1]
    if L1 == 0 or L2 == 0:
        raise DomainError("degenerate curve")
    tau1, tau2 = s1 / L1, s2 / L2
    br = np.union1d(tau1, tau2)
    mid = 0.5 * (br[:-1] + br[1:])
    mid = mid[br[1:] > br[:-1]]
    k1 = np.clip(np.searchsorted(tau1, mid, side="right") - 1, 0, len(u1) - 1)
    k2 = np.clip(np.searchsorted(tau2, mid, side="right") - 1, 0, len(u2) - 1)
    diff = L1 * u1[k1] - L2 * u2[k2]
    return float(np.max(np.hypot(diff[:, 0], diff[:, 1])))


# ---------------------------------------------------------------------------
# augmented Lagrangian


@dataclass
class OptimizeOptions:
    rule: str = "gauss"
    penalty0: float = 10.0
    penalty_growth: float = 10.0
    outer_iterations: int = 12
    inner_iterations: int = 3000
    tol_c: float = None
    tol_g: float = 1e-6
    divergence_window: int = 50
    # the constraint enters the merit function as I / scale (default 100 tol_c)
    scale: float = None
    richardson: bool = False


@dataclass(frozen=True, eq=False)
class OptimizationResult:
    curve: PlaneCurve
    length: float
    constraint_residual: float
    iterations: int
    converged: bool
    control_distance_to_gamma: float
    discrete_residual: float = 0.0
    gradient_norm: float = 0.0
    tol_c: float = 0.0
    tol_g: float = 0.0
    L_gamma: float = 0.0
    multiplier: float = 0.0
    merit_history: tuple = field(default=(), repr=False)
    length_history: tuple = field(default=(), repr=False)
    # (merit before, merit after) for each inner solve
    merit_steps: tuple = field(default=(), repr=False)
    length_2n: float = None

    @property
    def improvement(self):
        return self.L_gamma - self.length

    @property
    def feasible(self):
        return abs(self.constraint_residual) <= self.tol_c

    @property
    def strictly_shorter(self):
        return self.feasible and self.improvement > NOISE_FLOOR

    @property
    def merit_monotone(self):
        return all(after <= before for before, after in self.merit_steps)

    @property
    def richardson_length(self):
        """Second-order extrapolation from N and 2N nodes."""
        if self.length_2n is None:
            return None
        return self.length_2n + (self.length_2n - self.length) / 3.0

    def to_dict(self):
        return {"length": self.length, "constraint_residual": self.constraint_residual,
                "iterations": self.iterations, "converged": self.converged,
                "control_distance_to_gamma": self.control_distance_to_gamma,
                "discrete_residual": self.discrete_residual, "gradient_norm": self.gradient_norm,
                "tol_c": self.tol_c, "tol_g": self.tol_g, "L_gamma": self.L_gamma,
                "improvement": self.improvement, "multiplier": self.multiplier,
                "feasible": self.feasible, "strictly_shorter": self.strictly_shorter,
                "merit_monotone": self.merit_monotone,
                "merit_history": list(self.merit_history),
                "length_history": list(self.length_history),
                "length_2n": self.length_2n, "richardson_length": self.richardson_length}


def _projected_gradient(gL, gc):
    """Largest component of grad L after removing its part along grad I."""
    nc = float(gc @ gc)
    g = gL - (gL @ gc) / nc * gc if nc > 0 else gL
    return float(np.max(np.abs(g)))


def _restore(x, parts, tol, max_steps=60):
    """Damped Gauss-Newton steps along -c grad c / |grad c|^2 onto c = 0;
    a step is halved until it reduces |c|."""
    _, _, c, gc = parts(x)
    for _ in range(max_steps):
        if abs(c) <= 0.01 * tol:
            break
        nc = float(gc @ gc)
        if nc == 0:
            break
        step = -c / nc * gc
        for _ in range(40):
            trial = x + step
            _, _, ct, gt = parts(trial)
            if abs(ct) < abs(c):
                x, c, gc = trial, ct, gt
                break
            step *= 0.5
        else:
            break
    return x


def constraint_scale(eps, s):
    """delta3_cut at rho = eps, the natural size of constraint errors."""
    if s.a == s.b:
        return float(eps) ** (s.c * s.a + 1)
    return delta3_cut(eps, s)


def gamma_polyline(eps, s, n=DEFAULT_NODES):
    """gamma_eps sampled on the graded mesh, as a plain polyline."""
    g = make_gamma(eps, s=s, n=n)
    return PlaneCurve(g.params, g.points)


def omega_polyline(cp, s, n=DEFAULT_NODES, cut_nodes=8, side_nodes=3):
    """The competitor omega_{rho,delta} as a polyline of exactly ``n`` nodes:
    a few on the cut, the rest of the budget on gamma|[rho, eps] (graded as
    in the full mesh) and ``side_nodes`` per rectangle side."""
    from .curves import _rectangle_local, rectangle_anchor
    n_gamma = n - cut_nodes - 4 * side_nodes - 5
    if n_gamma < 4:
        raise ValidationError("too few nodes for the competitor")
    end_rho = gamma_point(cp.rho, s)
    cut = np.linspace(0.0, 1.0, cut_nodes + 1)[:-1, None] * end_rho[None, :]
    u = np.linspace(0.0, 1.0, n_gamma + 1)
    t = cp.rho + (cp.eps - cp.rho) * u ** 1.5
    t[-1] = cp.eps
    arc = np.array([gamma_point(v, s) for v in t[:-1]])
    anchor = rectangle_anchor(cp.eps, s)
    corners = _rectangle_local(s, cp.delta)
    frac = np.linspace(0.0, 1.0, side_nodes + 2)[:-1]
    rect = np.concatenate([anchor * (1.0 + corners[k] + frac[:, None] * (corners[k + 1] - corners[k]))
                           for k in range(4)] + [anchor[None, :]])
    z = np.concatenate([cut, arc, rect])
    if z.shape[0] != n:
        raise ValidationError("node budget mismatch")
    params = np.concatenate([[0.0], np.cumsum(np.hypot(*np.diff(z, axis=0).T))])
    return PlaneCurve(params, z)


def optimize(init, eps, s, opts=None):
    """Minimise polyline length over the interior nodes of ``init`` subject
    to I = 0, by an augmented Lagrangian with a quasi-Newton inner solver.

    The result is re-scored with the adaptive quadrature of the structure
    module (``constraint_residual``); ``discrete_residual`` is the value of
    the rule used inside the loop.
    """
    _require_flat(s)
    opts = opts or OptimizeOptions()
    if opts.rule not in RULES:
        raise ValidationError(f"unknown rule {opts.rule!r}")
    z0 = np.array(_points(init))
    if z0.shape[0] < MIN_NODES:
        raise ValidationError(f"need at least {MIN_NODES} nodes")
    target = gamma_point(eps, s)
    mis = max(np.linalg.norm(z0[0]), np.linalg.norm(z0[-1] - target))
    if mis > ENDPOINT_TOL:
        raise DomainError(f"init endpoints do not match gamma_eps (mismatch {mis:.3e})")
    z0[0], z0[-1] = 0.0, target
    tol_c = opts.tol_c if opts.tol_c is not None else 1e-9 * constraint_scale(eps, s)
    scale = opts.scale if opts.scale is not None else 100.0 * tol_c
    rule = RULES[opts.rule]
    n = z0.shape[0]

    def unpack(x):
        z = np.empty((n, 2))
        z[0], z[-1] = z0[0], z0[-1]
        z[1:-1] = x.reshape(-1, 2)
        return z

    def parts(x):
        z = unpack(x)
        L, dL = _length_grad(z)
        I, dI = rule(z, s)
        return L, dL[1:-1].ravel(), I / scale, dI[1:-1].ravel() / scale

    lam, mu = 0.0, opts.penalty0
    x = z0[1:-1].ravel().copy()
    merits, lengths, steps = [], [], []
    iterations = 0
    rising = 0
    best = None
    for _ in range(opts.outer_iterations):
        def fun(v, lam=lam, mu=mu):
            L, gL, c, gc = parts(v)
            return L - lam * c + 0.5 * mu * c * c, gL + (mu * c - lam) * gc

        start = fun(x)[0]
        try:
            res = minimize(fun, x, jac=True, method="L-BFGS-B",
                           options={"maxiter": opts.inner_iterations, "gtol": 1e-12,
                                    "ftol": 1e-15, "maxcor": 30})
        except GradientUndefinedError:
            break
        if not np.all(np.isfinite(res.x)):
            raise DivergenceError("non-finite iterate")
        x = res.x
        iterations += int(res.nit)
        L, gL, c, gc = parts(x)
        merits.append(float(res.fun))
        steps.append((float(start), float(res.fun)))
        if lengths and L > lengths[-1]:
            rising += 1
            if rising >= opts.divergence_window:
                raise DivergenceError("length increased for too many outer iterations")
        else:
            rising = 0
        lengths.append(L)
        lam -= mu * c
        mu *= opts.penalty_growth
        grad = _projected_gradient(gL, gc)
        if abs(c) * scale <= tol_c and (best is None or L < best[0]):
            best = (L, x.copy(), c, grad, lam)
        if abs(c) * scale <= tol_c and grad <= opts.tol_g:
            break
    if best is None:
        L, gL, c, gc = parts(x)
        best = (L, x, c, _projected_gradient(gL, gc), lam)
    L, xb, c, grad, lam_b = best
    xb = _restore(xb, parts, tol_c / scale)
    L, gL, c, gc = parts(xb)
    grad = _projected_gradient(gL, gc)
    z = unpack(xb)
    params = np.concatenate([[0.0], np.cumsum(np.hypot(*np.diff(z, axis=0).T))])
    curve = PlaneCurve(params, z)
    residual = lift_residual(curve, s)
    gamma = make_gamma(eps, s=s)
    length_2n = None
    if opts.richardson:
        fine = replace(opts, richardson=False)
        length_2n = optimize(refine_polyline(curve), eps, s, fine).length
    result = OptimizationResult(
        curve=curve, length=sr_length(curve, s), constraint_residual=residual,
        iterations=iterations, converged=bool(abs(residual) <= tol_c and grad <= opts.tol_g),
        control_distance_to_gamma=control_distance(curve, gamma), discrete_residual=c * scale,
        gradient_norm=grad, tol_c=tol_c, tol_g=opts.tol_g, L_gamma=sr_length(gamma, s),
        multiplier=lam_b / scale, merit_history=tuple(merits), length_history=tuple(lengths),
        merit_steps=tuple(steps), length_2n=length_2n)
    return result


def refine_polyline(curve):
    """Insert the midpoint of every edge (N nodes -> 2N - 1)."""
    z = _points(curve)
    fine = np.empty((2 * z.shape[0] - 1, 2))
    fine[0::2] = z
    fine[1::2] = 0.5 * (z[:-1] + z[1:])
    params = np.concatenate([[0.0], np.cumsum(np.hypot(*np.diff(fine, axis=0).T))])
    return PlaneCurve(params, fine)


def default_inits(eps, s, n=DEFAULT_NODES):
    """The two starting curves of the multi-start: gamma itself and the
    analytic competitor (for non-constructible pairs, a competitor with
    rho = eps/4 and the balancing delta)."""
    from .competitor import criterion, solve_delta, solve_params
    from .curves import CompetitorParams
    inits = {"gamma": gamma_polyline(eps, s, n)}
    if s.a != s.b:
        if criterion(s).constructible and criterion(s).exponent_gap > 0:
            cp = solve_params(eps, s)
        else:
            rho = 0.25 * eps
            cp = CompetitorParams(eps, rho, solve_delta(rho, eps, s))
        inits["omega"] = omega_polyline(cp, s, n)
    return inits


def _run(args):
    init, eps, s, opts = args
    return optimize(init, eps, s, opts)


def multistart(eps, s, n=DEFAULT_NODES, opts=None, workers=None):
    """Run ``optimize`` from each of ``default_inits`` (in parallel when
    ``workers`` > 1). Returns a dict name -> OptimizationResult."""
    inits = default_inits(eps, s, n)
    names = sorted(inits)
    jobs = [(inits[k], eps, s, opts) for k in names]
    if workers and workers > 1:
        from concurrent.futures import ProcessPoolExecutor
        with ProcessPoolExecutor(max_workers=workers) as ex:
            out = list(ex.map(_run, jobs))
    else:
        out = [_run(j) for j in jobs]
    return dict(zip(names, out))


def best_feasible(results):
    """Shortest feasible result, or None."""
    ok = [r for r in results.values() if r.feasible]
    return min(ok, key=lambda r: r.length) if ok else None
