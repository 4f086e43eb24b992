"""Two systems where the existence machinery must refuse to promise anything.

The theorem behind this package needs (1) even coefficient parity in (t, z),
(2) a positive coercivity margin K - M*omega/sqrt(2) - A*omega^2/2, (3) the
declared growth bounds, and (4) full-rank constraints.  Drop one hypothesis
and periodic solutions may simply not exist; the checker's job is to catch
that before any optimizer wastes time, and the solver's job is to fail
loudly if asked anyway.

Both systems here are classical non-existence examples: a ball on a
cylinder under gravity (bad parity), and a resonantly forced oscillator
(margin <= 0, action unbounded below).

Command-line equivalent:
    minact check --builtin cylinder
    minact solve --builtin forced_oscillator --modes 8
"""

from minact.model import builtin
from minact.optimize import SolveOptions, solve_in_class
from minact.verify import check_hypotheses

print("=== gravity on a cylinder ===")
cyl = builtin("cylinder")
rep = check_hypotheses(cyl)
print(f"overall: {rep.overall}")
for v in rep.violated:
    print(f"  {v}")
wit = rep.witnesses["parity:V"]
zx, zphi = (float(v) for v in wit["z"])
print(f"  witness: V({zx:.4f}, {zphi:.4f}) = {wit['value']:.6f} but V at "
      f"the reflected point = {wit['reflected']:.6f}")
print("the potential m*g*x*sin(phi) is odd, not even; the symmetry "
      "reduction\nthat makes the variational argument work is unavailable.\n")

print("=== resonantly forced oscillator ===")
osc = builtin("forced_oscillator")
rep = check_hypotheses(osc)
print(f"overall: {rep.overall}")
for v in rep.violated:
    print(f"  {v}")
print("with K = A = 1/2 and omega = 2*pi the margin is 1/2 - pi^2 < 0;")
print("the action is unbounded below along the resonant mode.\n")

res = solve_in_class(osc, None, SolveOptions(N=8))
print(f"solving anyway: status = {res.status}, S = {res.report.S:.3f}")
print("the optimizer rode the action downhill past the a priori radius and "
      "stopped;\na Diverged status is the numerical echo of non-existence.")
