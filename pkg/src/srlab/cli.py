"""Command-line front end.

    srlab criterion [--a A --b B --c C]
    srlab competitor --a 3 --b 4 --eps 1 [--rho R --delta D] [--out omega.csv]
    srlab verify --a 3 --b 4 --eps 1
    srlab stokes --a 3 --b 4 --eps 1 --grid 1024
    srlab hamiltonian --structure heisenberg --p0 0 1 2 --T 1 --step 1e-3 --out traj.csv
    srlab optimize --a 3 --b 4 --eps 1 --init both
    srlab sweep --a-range 2:5 --b-range 2:9 --eps 1 --out sweep.csv
    srlab examples

Exit status: 0 on success, 2 for invalid input, 3 for numerical failures.
"""

import argparse
import sys
from concurrent.futures import ProcessPoolExecutor

from . import io
from .competitor import criterion, solve_delta, solve_params, verify_competitor
from .curves import DEFAULT_GAMMA_NODES, CompetitorParams, closing_loop, make_omega
from .errors import NumericalFailure, SRLabError, ValidationError
from .hamiltonian import HamiltonianState, ham_eval, ham_flow
from .optimizer import (DEFAULT_NODES, OptimizeOptions, best_feasible, default_inits,
                        optimize)
from .stokes import DEFAULT_GRID, weighted_area_decomposition
from .structure import BUILTINS, KINDS, StructureDef, horizontal_lift, martinet_surface_description

EXIT_OK, EXIT_VALIDATION, EXIT_NUMERICAL = 0, 2, 3

CRITERION_GRID = ((3, 4), (3, 5), (4, 5), (2, 3), (4, 3), (5, 3), (3, 2),
                  (2, 5), (2, 7), (2, 9), (5, 2), (4, 4))


def _structure(args):
    if args.a is None or args.b is None:
        raise ValidationError("--a and --b are required")
    return StructureDef.polynomial(args.a, args.b, args.c)


def _params(args, s):
    if args.rho is None:
        if args.delta is not None:
            raise ValidationError("--delta needs --rho")
        return solve_params(args.eps, s, args.safety)
    delta = args.delta if args.delta is not None else solve_delta(args.rho, args.eps, s)
    return CompetitorParams(args.eps, args.rho, delta, args.safety)


def _emit(args, payload, table):
    if args.json:
        sys.stdout.write(io.to_json(payload))
    else:
        width = max(len(k) for k, _ in table)
        for k, v in table:
            print(f"{k:<{width}}  {io.fmt(v)}")


# ---------------------------------------------------------------------------
# subcommands


def cmd_criterion(args):
    pairs = [(args.a, args.b)] if args.a is not None and args.b is not None else CRITERION_GRID
    reports = []
    for a, b in pairs:
        rep = criterion(StructureDef.polynomial(a, b, args.c))
        reports.append({"a": a, "b": b, "c": args.c, **rep.to_dict()})
    if args.json:
        sys.stdout.write(io.to_json(reports if len(reports) > 1 else reports[0]))
    else:
        print(f"{'a':>3} {'b':>3} {'c':>3}  {'margin':>8}  {'branch':<5}  constructible")
        for r in reports:
            print(f"{r['a']:>3} {r['b']:>3} {r['c']:>3}  {r['margin']:>8.4g}  {r['branch']:<5}  "
                  f"{'yes' if r['constructible'] else 'no'}")
    if args.out:
        io.to_json(reports, args.out)
    return EXIT_OK


def cmd_competitor(args):
    s = _structure(args)
    cp = _params(args, s)
    omega = make_omega(cp, s, args.nodes)
    if args.out:
        io.write_curve(omega, args.out, horizontal_lift(omega, 0.0, s).x3)
    payload = {"eps": cp.eps, "rho": cp.rho, "delta": cp.delta, "safety": cp.safety,
               "nodes": int(omega.params.size)}
    _emit(args, payload, list(payload.items()))
    return EXIT_OK


def cmd_verify(args):
    s = _structure(args)
    rep = verify_competitor(_params(args, s), s, args.nodes)
    if args.out:
        io.to_json(rep, args.out)
    _emit(args, rep, [("L_gamma", rep.L_gamma), ("L_omega", rep.L_omega), ("gain_net", rep.gain_net),
                      ("gain_accounting", rep.gain_accounting),
                      ("constraint_residual", rep.constraint_residual),
                      ("residual_bound", rep.residual_bound),
                      ("endpoint_mismatch", rep.endpoint_mismatch), ("rho", rep.rho),
                      ("delta", rep.delta),
                      ("shorter_competitor_found", rep.shorter_competitor_found)])
    return EXIT_OK


def cmd_stokes(args):
    s = _structure(args)
    cp = _params(args, s)
    loop = closing_loop(make_omega(cp, s, args.nodes), cp, s, args.nodes)
    rep = weighted_area_decomposition(loop, s, args.grid)
    if args.out:
        io.to_json(rep, args.out)
    table = [(f"component {k} (winding {c.winding:+d})", c.area_weighted)
             for k, c in enumerate(rep.components)]
    table += [("total", rep.total), ("line_integral", rep.line_integral),
              ("tolerance", rep.tolerance), ("vertices", rep.vertices)]
    _emit(args, rep, table)
    return EXIT_OK


def _ham_structure(args):
    if args.structure == "polynomial":
        return _structure(args)
    return StructureDef(args.structure)


def cmd_hamiltonian(args):
    s = _ham_structure(args)
    st0 = HamiltonianState(tuple(args.x0), tuple(args.p0))
    traj = ham_flow(st0, args.T, s, args.step)
    if args.out:
        io.write_trajectory(traj, args.out)
    end = traj[len(traj) - 1]
    payload = {"structure": s.label(), "T": args.T, "step": args.step, "steps": len(traj) - 1,
               "H0": ham_eval(st0, s), "energy_drift": traj.energy_drift,
               "x_end": list(end.x), "p_end": list(end.p)}
    _emit(args, payload, list(payload.items()))
    return EXIT_OK


def cmd_optimize(args):
    s = _structure(args)
    inits = default_inits(args.eps, s, args.nodes)
    names = sorted(inits) if args.init == "both" else [args.init]
    for k in names:
        if k not in inits:
            raise ValidationError(f"no {k} initial curve for {s.label()}")
    opts = OptimizeOptions(rule=args.rule, outer_iterations=args.outer, richardson=args.richardson)
    results = {k: optimize(inits[k], args.eps, s, opts) for k in names}
    best = best_feasible(results)
    if args.out and best is not None:
        io.write_curve(best.curve, args.out)
    if args.json:
        sys.stdout.write(io.to_json({k: _opt_summary(r) for k, r in results.items()}))
    else:
        for k, r in results.items():
            print(f"[{k}]")
            for key, v in _opt_summary(r).items():
                print(f"  {key:<26}{io.fmt(v)}")
    return EXIT_OK


def _opt_summary(r):
    d = r.to_dict()
    for k in ("merit_history", "length_history"):
        d.pop(k)
    return d


# ---------------------------------------------------------------------------
# sweep


def parse_range(text):
    """'2:5' -> [2, 3, 4, 5]; '3' -> [3]; '2,4,7' -> [2, 4, 7]."""
    try:
        if ":" in text:
            lo, hi = (int(v) for v in text.split(":"))
            vals = list(range(lo, hi + 1))
        else:
            vals = [int(v) for v in text.split(",")]
    except ValueError:
        raise ValidationError(f"bad range {text!r}") from None
    if not vals or min(vals) < 1:
        raise ValidationError(f"range {text!r} must be nonempty with entries >= 1")
    return vals


def sweep_row(a, b, c, eps, with_optimizer=False, nodes=DEFAULT_GAMMA_NODES,
              optimizer_nodes=DEFAULT_NODES):
    """One sweep row; errors are recorded in the row."""
    s = StructureDef.polynomial(a, b, c)
    rep = criterion(s)
    row = {"a": a, "b": b, "c": c, "eps": float(eps), "constructible": rep.constructible,
           "margin": rep.margin}
    if not rep.constructible:
        return row
    try:
        cp = solve_params(eps, s)
        v = verify_competitor(cp, s, nodes)
        row.update(rho=cp.rho, delta=cp.delta, L_gamma=v.L_gamma, L_omega=v.L_omega,
                   gain_net=v.gain_net, residual=v.constraint_residual)
        if with_optimizer:
            inits = default_inits(eps, s, optimizer_nodes)
            best = best_feasible({k: optimize(w, eps, s) for k, w in inits.items()})
            row["optimizer_length"] = best.length if best is not None else None
    except SRLabError as exc:
        row["error"] = f"{type(exc).__name__}: {exc}"
    return row


def _sweep_job(args):
    return sweep_row(*args)


def sweep(a_range, b_range, c=2, eps=1.0, with_optimizer=False, workers=None,
          nodes=DEFAULT_GAMMA_NODES):
    if not a_range or not b_range:
        raise ValidationError("ranges must be nonempty")
    if c < 2:
        raise ValidationError("sweep needs c >= 2")
    jobs = [(a, b, c, eps, with_optimizer, nodes) for a in a_range for b in b_range]
    if workers and workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as ex:
            rows = list(ex.map(_sweep_job, jobs))
    else:
        rows = [_sweep_job(j) for j in jobs]
    return sorted(rows, key=lambda r: (r["a"], r["b"]))


def cmd_sweep(args):
    rows = sweep(parse_range(args.a_range), parse_range(args.b_range), args.c, args.eps,
                 args.with_optimizer, args.workers, args.nodes)
    if args.out:
        io.write_csv(rows, io.SWEEP_COLUMNS, args.out)
    if args.json:
        sys.stdout.write(io.to_json(rows))
    elif not args.out:
        sys.stdout.write(io.write_csv(rows, io.SWEEP_COLUMNS))
    return EXIT_OK


def cmd_examples(args):
    rows = [{"structure": s.label(), "martinet_surface": martinet_surface_description(s)}
            for s in BUILTINS]
    if args.json:
        sys.stdout.write(io.to_json(rows))
    else:
        for r in rows:
            print(f"{r['structure']:<14}{r['martinet_surface']}")
    return EXIT_OK


# ---------------------------------------------------------------------------


def _add_structure(p, need=False):
    p.add_argument("--a", type=int, required=need, help="exponent of x1 in P")
    p.add_argument("--b", type=int, required=need, help="exponent of x2 in P")
    p.add_argument("--c", type=int, default=2, help="power of P in psi (default 2)")


def _add_competitor(p):
    _add_structure(p, need=True)
    p.add_argument("--eps", type=float, default=1.0, help="length of gamma in x2/x1 (default 1)")
    p.add_argument("--rho", type=float, default=None, help="cut size (default: solved)")
    p.add_argument("--delta", type=float, default=None,
                   help="rectangle size (default: balanced against the cut)")
    p.add_argument("--safety", type=float, default=0.5, help="safety factor for rho (default 0.5)")
    p.add_argument("--nodes", type=int, default=DEFAULT_GAMMA_NODES,
                   help=f"nodes on gamma (default {DEFAULT_GAMMA_NODES})")


def build_parser():
    ap = argparse.ArgumentParser(prog="srlab", description=__doc__.split("\n\n")[0])
    sub = ap.add_subparsers(dest="command", required=True)
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--json", action="store_true", help="machine-readable output")
    common.add_argument("--out", default=None, help="write the data file here")

    p = sub.add_parser("criterion", parents=[common], help="exponent criterion table")
    _add_structure(p)
    p.set_defaults(func=cmd_criterion)

    for name, func, text in (("competitor", cmd_competitor, "build omega (CSV via --out)"),
                             ("verify", cmd_verify, "verify the competitor")):
        p = sub.add_parser(name, parents=[common], help=text)
        _add_competitor(p)
        p.set_defaults(func=func)

    p = sub.add_parser("stokes", parents=[common], help="weighted-area decomposition of omega * -gamma")
    _add_competitor(p)
    p.add_argument("--grid", type=int, default=DEFAULT_GRID,
                   help=f"relative polygon resolution (default {DEFAULT_GRID})")
    p.set_defaults(func=cmd_stokes)

    p = sub.add_parser("hamiltonian", parents=[common], help="integrate the normal Hamiltonian system")
    p.add_argument("--structure", choices=KINDS, default="heisenberg")
    _add_structure(p)
    p.add_argument("--x0", type=float, nargs=3, default=[0.0, 0.0, 0.0])
    p.add_argument("--p0", type=float, nargs=3, default=[0.0, 1.0, 1.0])
    p.add_argument("--T", type=float, default=1.0)
    p.add_argument("--step", type=float, default=1e-3, help="RK4 step (default 1e-3)")
    p.set_defaults(func=cmd_hamiltonian)

    p = sub.add_parser("optimize", parents=[common], help="constrained length minimisation")
    _add_structure(p, need=True)
    p.add_argument("--eps", type=float, default=1.0)
    p.add_argument("--nodes", type=int, default=DEFAULT_NODES,
                   help=f"polyline nodes (default {DEFAULT_NODES})")
    p.add_argument("--init", choices=("gamma", "omega", "both"), default="both")
    p.add_argument("--rule", choices=("gauss", "trapezoid"), default="gauss")
    p.add_argument("--outer", type=int, default=12, help="outer iterations (default 12)")
    p.add_argument("--richardson", action="store_true", help="re-run at 2N nodes")
    p.set_defaults(func=cmd_optimize)

    p = sub.add_parser("sweep", parents=[common], help="criterion and competitor over (a, b) ranges")
    p.add_argument("--a-range", default="2:5")
    p.add_argument("--b-range", default="2:5")
    p.add_argument("--c", type=int, default=2)
    p.add_argument("--eps", type=float, default=1.0)
    p.add_argument("--nodes", type=int, default=DEFAULT_GAMMA_NODES)
    p.add_argument("--with-optimizer", action="store_true")
    p.add_argument("--workers", type=int, default=None)
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("examples", parents=[common], help="Martinet surfaces of the built-ins")
    p.set_defaults(func=cmd_examples)
    return ap


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except ValidationError as exc:
        print(f"srlab: error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    except NumericalFailure as exc:
        print(f"srlab: numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL


if __name__ == "__main__":
    sys.exit(main())
