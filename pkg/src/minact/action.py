"""The action functional, its exact coefficient gradient, and coercivity.

The action of a trajectory over one period is

    S(z) = integral_0^omega [ (1/2) g_ij dz^i dz^j + a_i dz^i - V ] dt,

discretized by the rectangle rule on M uniform nodes (identical to the
trapezoid rule for periodic integrands, and spectrally accurate for smooth
ones).  Because z depends linearly on the sine coefficients, the chain rule
through the same quadrature yields the gradient of the discrete S exactly:

    dS/db[k][d] = (omega/M) * sum_i [ dL/dz^d(t_i) * sin(w_k t_i)
                                    + dL/ddz^d(t_i) * w_k cos(w_k t_i) ],

with w_k = 2*pi*k/omega.  The optimizer therefore sees a consistent
objective/gradient pair; agreement with the continuous Euler-Lagrange
equations is verified separately (minact.verify).

Coercivity: with constants (C, M, A, K, P, C1) valid for the model, the
action of any odd admissible loop obeys

    S(z) + C1*omega >= margin * ||z||^2 - C*sqrt(omega) * ||z||,
    margin = K - M*omega/sqrt(2) - A*omega^2/2,

where ||z|| is the H1 seminorm.  A positive margin bounds every minimizer
inside an a priori radius computable from any reference action value.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import expr as ex
from .model import GrowthConstants, ModelSpec, nearest_distances, \
    singular_set
from .trajectory import FourierTrajectory, SampledPath, h1_seminorm, \
    min_distance_to, sample

__all__ = [
    "ActionReport", "SingularityHit", "NonCoercive",
    "action", "action_gradient", "action_report",
    "coercivity_margin", "action_lower_bound", "apriori_radius",
    "LagrangianTerms",
]

MACHINE_GUARD = 1e-12


class SingularityHit(RuntimeError):
    """A quadrature node fell (numerically) onto the singular set."""


class NonCoercive(RuntimeError):
    """Coercivity margin is not positive; the a priori bound is unavailable."""


class LagrangianTerms:
    """Derivative trees of the model data, built once and reused.

    Holds g_ij, a_i, V, the constraint functions, and their first
    derivatives in t and every coordinate, as evaluatable trees.
    """

    def __init__(self, model: ModelSpec):
        self.model = model
        dim = model.dim
        self.dim = dim
        self.g = model.metric
        self.a = model.gyro
        self.V = model.potential
        self.dg = [[[ex.differentiate(model.metric[i][j], d + 1)
                     for j in range(dim)] for i in range(dim)]
                   for d in range(dim)]
        self.dtg = [[ex.differentiate(model.metric[i][j], 0)
                     for j in range(dim)] for i in range(dim)]
        self.da = [[ex.differentiate(model.gyro[i], d + 1)
                    for i in range(dim)] for d in range(dim)]
        self.dta = [ex.differentiate(model.gyro[i], 0) for i in range(dim)]
        self.dV = [ex.differentiate(model.potential, d + 1)
                   for d in range(dim)]
        self.f = [c.f for c in model.constraints]
        self.df = [[ex.differentiate(c.f, d + 1) for d in range(dim)]
                   for c in model.constraints]
        self.dtf = [ex.differentiate(c.f, 0) for c in model.constraints]

    # -- field evaluation on sampled nodes --------------------------------

    def metric_at(self, t, z) -> np.ndarray:
        M = len(t)
        G = np.empty((M, self.dim, self.dim))
        for i in range(self.dim):
            for j in range(i, self.dim):
                G[:, i, j] = ex.evaluate(self.g[i][j], t, z)
                if j > i:
                    G[:, j, i] = G[:, i, j]
        return G

    def gyro_at(self, t, z) -> np.ndarray:
        M = len(t)
        a = np.empty((M, self.dim))
        for i in range(self.dim):
            a[:, i] = ex.evaluate(self.a[i], t, z)
        return a

    def potential_at(self, t, z) -> np.ndarray:
        return ex.evaluate(self.V, t, z)

    def lagrangian_at(self, path: SampledPath) -> np.ndarray:
        t, z, dz = path.t, path.z, path.dz
        G = self.metric_at(t, z)
        a = self.gyro_at(t, z)
        V = self.potential_at(t, z)
        kinetic = 0.5 * np.einsum("mij,mi,mj->m", G, dz, dz)
        return kinetic + np.einsum("mi,mi->m", a, dz) - V

    def dL_fields(self, path: SampledPath):
        """(dL/dz^d, dL/ddz^d) at the nodes, each of shape (M, dim)."""
        t, z, dz = path.t, path.z, path.dz
        M = len(t)
        dim = self.dim
        G = self.metric_at(t, z)
        a = self.gyro_at(t, z)
        dLdv = np.einsum("mij,mj->mi", G, dz) + a
        dLdz = np.empty((M, dim))
        for d in range(dim):
            dGd = np.empty((M, dim, dim))
            for i in range(dim):
                for j in range(i, dim):
                    dGd[:, i, j] = ex.evaluate(self.dg[d][i][j], t, z)
                    if j > i:
                        dGd[:, j, i] = dGd[:, i, j]
            dad = np.empty((M, dim))
            for i in range(dim):
                dad[:, i] = ex.evaluate(self.da[d][i], t, z)
            dVd = ex.evaluate(self.dV[d], t, z)
            dLdz[:, d] = (0.5 * np.einsum("mij,mi,mj->m", dGd, dz, dz)
                          + np.einsum("mi,mi->m", dad, dz) - dVd)
        return dLdz, dLdv

    def constraints_at(self, t, z) -> np.ndarray:
        """Constraint values, shape (M, l)."""
        F = np.empty((len(t), len(self.f)))
        for j, fj in enumerate(self.f):
            F[:, j] = ex.evaluate(fj, t, z)
        return F

    def constraint_jacobian_at(self, t, z) -> np.ndarray:
        """d f_j / d z^d at the nodes, shape (M, l, dim)."""
        J = np.empty((len(t), len(self.f), self.dim))
        for j in range(len(self.f)):
            for d in range(self.dim):
                J[:, j, d] = ex.evaluate(self.df[j][d], t, z)
        return J


def _guard_nodes(model: ModelSpec, path: SampledPath) -> None:
    if not model.sigma_base:
        return
    d = nearest_distances(singular_set(model), path.z)
    if np.any(d <= MACHINE_GUARD):
        i = int(np.argmin(d))
        raise SingularityHit(
            f"quadrature node t = {path.t[i]} lies within {MACHINE_GUARD} "
            f"of the singular set (distance {d[i]:.3e})")


def action(model: ModelSpec, traj: FourierTrajectory, M: int,
           terms: LagrangianTerms | None = None) -> float:
    """Discrete action S = (omega/M) * sum_i L(t_i, z_i, dz_i).

    Deterministic: fixed node order, fixed summation order.  Raises
    SingularityHit if a node touches the singular set and EvalDomainError
    if an expression leaves its domain.
    """
    terms = terms or LagrangianTerms(model)
    path = sample(traj, M)
    _guard_nodes(model, path)
    L = terms.lagrangian_at(path)
    return float(model.omega / M * np.sum(L))


def action_gradient(model: ModelSpec, traj: FourierTrajectory, M: int,
                    terms: LagrangianTerms | None = None) -> np.ndarray:
    """Exact gradient of the discrete action; shape matches traj.coeffs."""
    terms = terms or LagrangianTerms(model)
    path = sample(traj, M)
    _guard_nodes(model, path)
    dLdz, dLdv = terms.dL_fields(path)
    w = traj.frequencies()
    phases = np.outer(path.t, w)
    S = np.sin(phases)
    Cw = np.cos(phases) * w[None, :]
    grad = S.T @ dLdz + Cw.T @ dLdv
    return model.omega / M * grad


def coercivity_margin(k: GrowthConstants, omega: float) -> float:
    """K - M*omega/sqrt(2) - A*omega^2/2; positive certifies coercivity."""
    return k.K - k.M * omega / math.sqrt(2.0) - k.A * omega * omega / 2.0


def action_lower_bound(k: GrowthConstants, omega: float, h1: float) -> float:
    """Lower bound margin*h1^2 - C*sqrt(omega)*h1 for S(z) + C1*omega.

    The additive C1*omega is kept on the action side of the comparison
    (S + C1*omega >= bound) so model potentials keep their literal form.
    """
    if h1 < 0:
        raise ValueError("h1 must be >= 0")
    margin = coercivity_margin(k, omega)
    return margin * h1 * h1 - k.C * math.sqrt(omega) * h1


def apriori_radius(k: GrowthConstants, omega: float, S_ref: float) -> float:
    """Largest H1 norm any minimizer below the reference action can have.

    Solves margin*r^2 - C*sqrt(omega)*r - (S_ref + C1*omega) = 0 for the
    larger root.  Any admissible trajectory with S <= S_ref satisfies
    ||z|| <= r.  Raises NonCoercive when the margin is not positive.
    """
    margin = coercivity_margin(k, omega)
    if margin <= 0.0:
        raise NonCoercive(f"coercivity margin {margin} is not positive")
    c_term = k.C * math.sqrt(omega)
    disc = c_term * c_term + 4.0 * margin * (S_ref + k.C1 * omega)
    disc = max(disc, 0.0)
    return (c_term + math.sqrt(disc)) / (2.0 * margin)


@dataclass(frozen=True)
class ActionReport:
    """Summary of one trajectory against one model."""

    S: float
    grad_norm: float
    h1: float
    min_distance: float
    margin: float
    lower_bound_at_h1: float

    def to_dict(self) -> dict:
        return {
            "S": self.S,
            "grad_norm": self.grad_norm,
            "h1": self.h1,
            "min_distance": self.min_distance,
            "margin": self.margin,
            "lower_bound_at_h1": self.lower_bound_at_h1,
        }


def action_report(model: ModelSpec, traj: FourierTrajectory, M: int,
                  terms: LagrangianTerms | None = None) -> ActionReport:
    """Action, gradient norm, H1 norm, clearance, and coercivity numbers."""
    terms = terms or LagrangianTerms(model)
    S = action(model, traj, M, terms)
    g = action_gradient(model, traj, M, terms)
    h1 = h1_seminorm(traj)
    dist = min_distance_to(traj, singular_set(model))
    k = model.constants
    return ActionReport(
        S=S,
        grad_norm=float(np.linalg.norm(g)),
        h1=h1,
        min_distance=dist,
        margin=coercivity_margin(k, model.omega),
        lower_bound_at_h1=action_lower_bound(k, model.omega, h1),
    )
