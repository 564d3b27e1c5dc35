"""Where the third coordinate goes: omega * (-gamma) bounds two regions,
the cut region and the rectangle, with opposite winding numbers.  Their
Q-weighted areas cancel, which is the closing of the lift seen from inside.
"""

from srlab.competitor import solve_params
from srlab.curves import closing_loop, make_omega
from srlab.stokes import delta3_cor, delta3_cut, weighted_area_decomposition
from srlab.structure import StructureDef

for a, b in [(3, 4), (4, 3)]:
    s = StructureDef.polynomial(a, b)
    cp = solve_params(1.0, s)
    loop = closing_loop(make_omega(cp, s), cp, s)
    rep = weighted_area_decomposition(loop, s)
    print(f"(a, b) = ({a}, {b}), {rep.vertices} polygon vertices")
    for c in rep.components:
        x, y = c.sample_point
        print(f"  winding {c.winding:+d} at ({x:.4g}, {y:.4g}): {c.area_weighted:+.10e}")
    print(f"  closed forms: cut {delta3_cut(cp.rho, s):.10e}, rectangle {delta3_cor(cp.delta, 1.0, s):.10e}")
    print(f"  total {rep.total:+.2e}, boundary integral {rep.line_integral:+.2e}")
