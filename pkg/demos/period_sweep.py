"""One winding class, many periods: a family of distinct periodic orbits.

For every period omega with a positive coercivity margin, the action
minimizer in a fixed winding class is a periodic solution with that period.
Sweeping omega therefore produces an infinite family of genuinely different
orbits in the same homotopy class.  This script sweeps the two-center
figure eight across five periods and tabulates how the orbit tightens as
the period shrinks.

Command-line equivalent:
    minact sweep --builtin two_centers --coils 1 --modes 24 \
        --omegas 6.2832,4.7124,3.1416,1.5708,0.7854
"""

import math

from minact.action import coercivity_margin
from minact.model import builtin, with_omega
from minact.optimize import SolveOptions, solve_in_class
from minact.verify import el_residual

base = builtin("two_centers")
omegas = [2 * math.pi, 1.5 * math.pi, math.pi, 0.5 * math.pi, 0.25 * math.pi]

print("omega      margin  status      S             h1        min_dist")
rows = []
for om in omegas:
    model = with_omega(base, om)
    margin = coercivity_margin(model.constants, om)
    if margin <= 0.0:
        print(f"{om:8.4f}  {margin:6.3f}  skipped (noncoercive)")
        continue
    res = solve_in_class(model, 1, SolveOptions(N=24, M=256, grad_tol=1e-8))
    rep = el_residual(model, res.trajectory, 256)
    rows.append((om, res.report.S))
    print(f"{om:8.4f}  {margin:6.3f}  {res.status:10s}  "
          f"{res.report.S:12.6f}  {res.report.h1:8.4f}  {rep.min_distance:8.4f}")

print()
spread = min(abs(a[1] - b[1]) for i, a in enumerate(rows)
             for b in rows[i + 1:])
print(f"smallest pairwise action gap: {spread:.6f}")
print("every period produced its own orbit (all action values distinct); "
      "letting\nomega range over the positive-margin interval yields "
      "infinitely many solutions.")
