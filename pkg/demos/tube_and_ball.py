"""A ball in a rotating tube: periodic motion with a prescribed turn count.

A straight tube rotates in a vertical plane about its midpoint while a ball
slides along it.  Configuration: x, the signed distance of the ball from
the pivot, and phi, the tube's rotation angle.  The kinetic energy
(1/2)(m x'^2 + (J + m x^2) phi'^2) makes the metric depend on position, and
gravity m g x sin(phi) couples the two coordinates.

We look for a solution in which the tube turns around exactly once per
period (winding number nu = 1) while the ball oscillates oddly about the
pivot.  The turn count is built into the trajectory space, so the solver
cannot lose it; what needs checking afterwards is only the quality of the
solution.

Command-line equivalent:
    minact solve --builtin tube_ball --modes 32
"""

import numpy as np

from minact.action import (action, action_lower_bound, apriori_radius,
                           coercivity_margin)
from minact.model import builtin
from minact.optimize import SolveOptions, solve_in_class
from minact.trajectory import FourierTrajectory, evaluate_path, h1_seminorm
from minact.verify import check_hypotheses, el_residual

model = builtin("tube_ball")        # mass = J = 1, g = 9.81, omega = 1
print("hypothesis check first: does the existence theorem even apply?")
rep = check_hypotheses(model)
print(f"  overall = {rep.overall}, margin = {rep.margin}\n")

seed = FourierTrajectory(model.omega, (1,), np.zeros((32, 2)))
S_seed = action(model, seed, 320)
print(f"seed: uniform rotation, ball parked at the pivot, S = {S_seed:.6f}")
radius = apriori_radius(model.constants, model.omega, S_seed)
print(f"a priori H1 radius from that seed level: {radius:.6f}\n")

res = solve_in_class(model, seed, SolveOptions(N=32, M=320, grad_tol=1e-10))
quality = el_residual(model, res.trajectory, 320)
h1 = h1_seminorm(res.trajectory)
print(f"solve: {res.status}, S = {res.report.S:.12f}")
print(f"  EL residual sup  = {quality.el_sup:.2e}")
print(f"  energy drift     = {quality.energy_drift:.2e}  "
      "(Jacobi integral, autonomous system)")
print(f"  H1 seminorm      = {h1:.6f}  <=  {radius:.6f}  "
      f"({'inside' if h1 <= radius else 'OUTSIDE'} the a priori ball)")
lower = action_lower_bound(model.constants, model.omega, h1)
total = res.report.S + model.constants.C1 * model.omega
print(f"  S + C1*omega     = {total:.6f}  >=  {lower:.6f}  (coercivity)")
print(f"  margin           = {coercivity_margin(model.constants, model.omega)}\n")

t = np.linspace(0.0, model.omega, 9)
z = evaluate_path(res.trajectory, t)
print("t/omega   x(t)       phi(t)")
for ti, (x, phi) in zip(t, z):
    print(f"  {ti / model.omega:4.2f}  {x:+.6f}  {phi:+.6f}")
print("\nphi advances by exactly 2*pi per period; x is odd, so the ball "
      "passes\nthrough the pivot whenever the time is a multiple of half "
      "the period.")
