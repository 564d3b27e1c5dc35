"""An independent opinion: minimise polyline length directly under the
constraint that the lift closes, starting from gamma and from the
competitor.

For (3, 4) the optimiser finds shorter curves, and they are far from gamma
in control space.  For (2, 5) nothing beyond discretisation noise turns up.
Takes about a minute.
"""

from srlab.competitor import solve_params, verify_competitor
from srlab.optimizer import multistart
from srlab.structure import StructureDef

for (a, b), eps in [((3, 4), 1.0), ((2, 5), 0.5)]:
    s = StructureDef.polynomial(a, b)
    print(f"(a, b) = ({a}, {b}), eps = {eps}")
    if a == 3:
        print(f"  analytic competitor gain {verify_competitor(solve_params(eps, s), s).gain_net:.3e}")
    for name, r in multistart(eps, s, workers=2).items():
        print(f"  from {name:<5}: improvement {r.improvement:+.3e}, |I| {abs(r.constraint_residual):.1e}"
              f" (tol {r.tol_c:.1e}), control distance {r.control_distance_to_gamma:.3f},"
              f" {r.iterations} inner iterations")
