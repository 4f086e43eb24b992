"""Certification tools: hypothesis checks and solution-quality reports.

Two halves.  check_hypotheses samples a model's data and tries to falsify
the standing assumptions of the existence result (evenness of the data,
uniform positive definiteness of the metric, growth bounds on the
gyroscopic covector and the potential, constraint-gradient rank, and the
coercivity margin).  A pass means "not falsified on the sample", never a
proof.  el_residual, energy_drift, recover_multipliers and
homotopy_equiv_sufficient certify a candidate trajectory after the fact:
pointwise Euler-Lagrange residuals with constraint reaction forces
removed, Jacobi-integral drift, and a one-sided homotopy equivalence
test.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import expr as ex
from .action import LagrangianTerms, coercivity_margin
from .model import ModelSpec, SingularSet, is_autonomous, \
    nearest_distances, nearest_singular, singular_set
from .trajectory import FourierTrajectory, evaluate_path, \
    min_distance_to, sample, winding_signature

__all__ = ["SamplerOptions", "HypothesisReport", "ResidualReport",
           "VerifyError", "check_hypotheses", "el_residual",
           "recover_multipliers", "energy_drift",
           "homotopy_equiv_sufficient", "holder_seminorm"]

_PARITY_RTOL = 1e-10


class VerifyError(ValueError):
    """Inputs outside an operation's contract."""


@dataclass(frozen=True)
class SamplerOptions:
    """Sampling plan for hypothesis falsification."""

    count: int = 200
    box_radius: float = 5.0
    rng_seed: int = 0

    def __post_init__(self):
        if self.count < 1:
            raise VerifyError("sampler count must be at least 1")
        if self.box_radius <= 0:
            raise VerifyError("sampler box_radius must be positive")


@dataclass(frozen=True)
class HypothesisReport:
    """Outcome of sample-based hypothesis checks on one model.

    Every flag is a "not falsified" verdict over the drawn sample;
    witnesses carry the full (t, z) coordinates of the first failure.
    overall is True exactly when every flag holds and margin > 0.
    """

    parity_ok: dict
    bound_g_ok: bool
    bound_a_ok: bool
    bound_V_ok: bool
    rank_ok: bool
    rank_min_sv: float
    margin: float
    overall: bool
    violated: list
    witnesses: dict
    warnings: list

    def to_dict(self) -> dict:
        return {
            "parity_ok": dict(self.parity_ok),
            "bound_g_ok": self.bound_g_ok,
            "bound_a_ok": self.bound_a_ok,
            "bound_V_ok": self.bound_V_ok,
            "rank_ok": self.rank_ok,
            "rank_min_sv": self.rank_min_sv,
            "margin": self.margin,
            "overall": self.overall,
            "violated": list(self.violated),
            "witnesses": {k: _witness_jsonable(v)
                          for k, v in self.witnesses.items()},
            "warnings": list(self.warnings),
        }


def _witness_jsonable(w: dict) -> dict:
    out = {}
    for k, v in w.items():
        if isinstance(v, np.ndarray):
            out[k] = [float(x) for x in v]
        elif isinstance(v, (np.floating, np.integer)):
            out[k] = float(v)
        elif isinstance(v, tuple):
            out[k] = [float(x) for x in v]
        else:
            out[k] = v
    return out


def _draw_samples(model: ModelSpec, sampler: SamplerOptions):
    """Sample (t, z) uniformly over the time window and box, off sigma."""
    rng = np.random.default_rng(sampler.rng_seed)
    s = singular_set(model)
    guard = 1e-3 * sampler.box_radius
    n_pts = sampler.count
    t = rng.uniform(-model.omega / 2, model.omega / 2, size=n_pts)
    z = rng.uniform(-sampler.box_radius, sampler.box_radius,
                    size=(n_pts, model.dim))
    if not s.is_empty():
        for _ in range(100):
            d = nearest_distances(s, z)
            bad = d <= guard
            if not np.any(bad):
                break
            z[bad] = rng.uniform(-sampler.box_radius, sampler.box_radius,
                                 size=(int(np.sum(bad)), model.dim))
    return t, z


def _even_ok(f, t, z):
    """Check f(-t,-z) == f(t,z); return (ok, witness or None)."""
    try:
        plus = ex.evaluate(f, t, z)
        minus = ex.evaluate(f, -t, -z)
    except ex.EvalDomainError:
        return True, None  # partial domain: nothing falsified
    scale = 1.0 + np.maximum(np.abs(plus), np.abs(minus))
    bad = np.abs(minus - plus) > _PARITY_RTOL * scale
    if not np.any(bad):
        return True, None
    i = int(np.argmax(bad))
    return False, {"t": float(t[i]), "z": z[i].copy(),
                   "value": float(plus[i]), "reflected": float(minus[i])}


def _parity_constraint_ok(f, parity, t, z):
    sign = -1.0 if parity == "odd" else 1.0
    try:
        plus = ex.evaluate(f, t, z)
        minus = ex.evaluate(f, -t, -z)
    except ex.EvalDomainError:
        return True, None
    scale = 1.0 + np.maximum(np.abs(plus), np.abs(minus))
    bad = np.abs(minus - sign * plus) > _PARITY_RTOL * scale
    if not np.any(bad):
        return True, None
    i = int(np.argmax(bad))
    return False, {"t": float(t[i]), "z": z[i].copy(),
                   "value": float(plus[i]), "reflected": float(minus[i]),
                   "declared": parity}


def _refine_feasible(terms: LagrangianTerms, t: float, z0: np.ndarray,
                     max_iters: int = 60, tol: float = 1e-11):
    """Gauss-Newton projection of z0 onto {f_j(t, .) = 0}."""
    z = z0.astype(float).copy()
    lcount = len(terms.f)
    for _ in range(max_iters):
        try:
            F = np.array([ex.evaluate(fj, t, z) for fj in terms.f])
        except ex.EvalDomainError:
            return z, False
        if np.max(np.abs(F)) <= tol:
            return z, True
        try:
            J = np.array([[ex.evaluate(terms.df[j][d], t, z)
                           for d in range(terms.dim)]
                          for j in range(lcount)])
        except ex.EvalDomainError:
            return z, False
        if not (np.all(np.isfinite(F)) and np.all(np.isfinite(J))):
            return z, False
        step, *_ = np.linalg.lstsq(J, -F, rcond=None)
        norm = float(np.linalg.norm(step))
        if norm > 1.0:
            step = step / norm  # trust region: unit-length cap
        z = z + step
    return z, False


def check_hypotheses(model: ModelSpec,
                     sampler: SamplerOptions | None = None,
                     ) -> HypothesisReport:
    """Try to falsify the existence hypotheses on random samples.

    Checks, in order: evenness of every metric entry, gyro component,
    the potential, and each declared constraint parity; the uniform
    metric lower bound (condition on K); the gyro growth bound
    |a_i| <= C + M|z|; the potential upper bound
    V <= A|z|^2 - P/dist(z, sigma)^2 + C1 with the nearest singular
    translate; the constraint-gradient rank at refined feasible points;
    and the coercivity margin.  A flag True means "not falsified here".
    """
    if sampler is None:
        sampler = SamplerOptions()
    rng = np.random.default_rng(sampler.rng_seed + 1)
    t, z = _draw_samples(model, sampler)
    k = model.constants
    terms = LagrangianTerms(model)
    s = singular_set(model)
    dim = model.dim

    parity_ok: dict = {}
    witnesses: dict = {}
    warnings: list = []
    violated: list = []

    def note_parity(name, ok, wit):
        parity_ok[name] = ok
        if not ok:
            witnesses["parity:" + name] = wit

    g_ok = True
    g_wit = None
    for i in range(dim):
        for j in range(dim):
            ok, wit = _even_ok(model.metric[i][j], t, z)
            if not ok and g_ok:
                g_ok, g_wit = False, wit
    note_parity("g", g_ok, g_wit)
    a_ok = True
    a_wit = None
    for i in range(dim):
        ok, wit = _even_ok(model.gyro[i], t, z)
        if not ok and a_ok:
            a_ok, a_wit = False, wit
    note_parity("a", a_ok, a_wit)
    ok, wit = _even_ok(model.potential, t, z)
    note_parity("V", ok, wit)
    for ci, c in enumerate(model.constraints):
        ok, wit = _parity_constraint_ok(c.f, c.parity, t, z)
        note_parity(f"constraint[{ci}]", ok, wit)

    # metric lower bound on random unit directions
    bound_g_ok = True
    xi = rng.normal(size=(len(t), 4, dim))
    xi /= np.linalg.norm(xi, axis=2, keepdims=True)
    try:
        G = terms.metric_at(t, z)  # (M, dim, dim)
        quad = 0.5 * np.einsum("mkd,mde,mke->mk", xi, G, xi)
        bad = quad < k.K - 1e-10 * (1.0 + k.K)
        if np.any(bad):
            bound_g_ok = False
            m_i, k_i = np.unravel_index(int(np.argmax(bad)), bad.shape)
            witnesses["bound_g"] = {
                "t": float(t[m_i]), "z": z[m_i].copy(),
                "xi": xi[m_i, k_i].copy(),
                "half_quad": float(quad[m_i, k_i]), "K": k.K}
    except ex.EvalDomainError as err:
        warnings.append(f"metric bound check skipped: {err}")

    # gyro growth bound, componentwise
    bound_a_ok = True
    znorm = np.linalg.norm(z, axis=1)
    cap = k.C + k.M * znorm
    try:
        a_vals = terms.gyro_at(t, z)  # (M, dim)
        slack = 1e-10 * (1.0 + cap)
        bad = np.abs(a_vals) > (cap + slack)[:, None]
        if np.any(bad):
            bound_a_ok = False
            m_i, d_i = np.unravel_index(int(np.argmax(bad)), bad.shape)
            witnesses["bound_a"] = {
                "t": float(t[m_i]), "z": z[m_i].copy(),
                "component": d_i, "value": float(a_vals[m_i, d_i]),
                "cap": float(cap[m_i])}
    except ex.EvalDomainError as err:
        warnings.append(f"gyro bound check skipped: {err}")

    # potential upper bound with the nearest singular translate
    bound_V_ok = True
    try:
        V_vals = terms.potential_at(t, z)
        if s.is_empty():
            bound = k.A * znorm ** 2 + k.C1
        else:
            d = nearest_distances(s, z)
            bound = k.A * znorm ** 2 - k.P / d ** 2 + k.C1
        bad = V_vals > bound + 1e-10 * (1.0 + np.abs(bound))
        if np.any(bad):
            bound_V_ok = False
            i = int(np.argmax(bad))
            witnesses["bound_V"] = {
                "t": float(t[i]), "z": z[i].copy(),
                "V": float(V_vals[i]), "bound": float(bound[i])}
    except ex.EvalDomainError as err:
        warnings.append(f"potential bound check skipped: {err}")

    # constraint-gradient rank at refined feasible points
    rank_ok = True
    rank_min_sv = math.inf
    l = len(model.constraints)
    if l > 0:
        found = 0
        worst = math.inf
        for i in range(len(t)):
            zf, feasible = _refine_feasible(terms, float(t[i]), z[i])
            if not feasible:
                continue
            if not s.is_empty():
                dist, _ = nearest_singular(s, tuple(zf))
                if dist <= 1e-6:
                    continue
            found += 1
            J = np.array([[ex.evaluate(terms.df[j][d], float(t[i]), zf)
                           for d in range(dim)] for j in range(l)])
            sv = np.linalg.svd(J, compute_uv=False)
            rank_tol = 1e-8 * (sv[0] if sv[0] > 0 else 1.0)
            worst = min(worst, float(sv[-1]))
            if len(sv) < l or sv[-1] <= rank_tol:
                rank_ok = False
                witnesses["rank"] = {
                    "t": float(t[i]), "z": zf.copy(),
                    "singular_values": sv.copy()}
        if found == 0:
            warnings.append(
                "no feasible constraint points found; rank check skipped")
        else:
            rank_min_sv = worst
    margin = coercivity_margin(k, model.omega)

    if not all(parity_ok.values()):
        names = ", ".join(n for n, okf in parity_ok.items() if not okf)
        violated.append(f"condition 1 (parity): not even: {names}")
    if not (bound_g_ok and bound_a_ok and bound_V_ok):
        which = ", ".join(n for n, okf in
                          (("g", bound_g_ok), ("a", bound_a_ok),
                           ("V", bound_V_ok)) if not okf)
        violated.append(f"condition 3 (growth bounds): falsified for "
                        f"{which}")
    if not rank_ok:
        violated.append("condition 4 (constraint rank): rank deficient "
                        "at a feasible point")
    if margin <= 0.0:
        violated.append(f"condition 2 (coercivity margin): margin = "
                        f"{margin!r} <= 0")

    overall = (all(parity_ok.values()) and bound_g_ok and bound_a_ok
               and bound_V_ok and rank_ok and margin > 0.0)
    return HypothesisReport(
        parity_ok=parity_ok, bound_g_ok=bound_g_ok, bound_a_ok=bound_a_ok,
        bound_V_ok=bound_V_ok, rank_ok=rank_ok, rank_min_sv=rank_min_sv,
        margin=margin, overall=overall, violated=violated,
        witnesses=witnesses, warnings=warnings)


@dataclass(frozen=True)
class ResidualReport:
    """Pointwise solution-quality metrics for one trajectory.

    el_sup / el_l2 measure the Euler-Lagrange residual (orthogonal to the
    constraint gradients when constraints are present, raw otherwise).
    multipliers holds recovered reaction-force samples, or None for an
    unconstrained model.  energy_drift is None for time-dependent models.
    """

    el_sup: float
    el_l2: float
    multipliers: np.ndarray | None
    constraint_sup: float
    constraint_rate_sup: float
    energy_drift: float | None
    min_distance: float
    clearance_integral: float
    gram_warning: bool = False

    def to_dict(self) -> dict:
        return {
            "el_sup": self.el_sup,
            "el_l2": self.el_l2,
            "multipliers": (None if self.multipliers is None
                            else [[float(v) for v in row]
                                  for row in self.multipliers]),
            "constraint_sup": self.constraint_sup,
            "constraint_rate_sup": self.constraint_rate_sup,
            "energy_drift": self.energy_drift,
            "min_distance": self.min_distance,
            "clearance_integral": self.clearance_integral,
            "gram_warning": self.gram_warning,
        }


def _el_residual_values(terms: LagrangianTerms, path) -> np.ndarray:
    """R_k(t_i) = d/dt (dL/dv^k) - dL/dz^k, exactly, at the nodes."""
    t, z, dz, ddz = path.t, path.z, path.dz, path.ddz
    M = len(t)
    dim = terms.dim
    G = terms.metric_at(t, z)
    R = np.einsum("mkj,mj->mk", G, ddz)
    dG = np.empty((dim, M, dim, dim))
    for d in range(dim):
        for i in range(dim):
            for j in range(i, dim):
                v = ex.evaluate(terms.dg[d][i][j], t, z)
                dG[d, :, i, j] = v
                if i != j:
                    dG[d, :, j, i] = v
    # + d_l g_kj v^l v^j + d_t g_kj v^j
    R += np.einsum("lmkj,ml,mj->mk", dG, dz, dz)
    dtG = np.empty((M, dim, dim))
    for i in range(dim):
        for j in range(i, dim):
            v = ex.evaluate(terms.dtg[i][j], t, z)
            dtG[:, i, j] = v
            if i != j:
                dtG[:, j, i] = v
    R += np.einsum("mkj,mj->mk", dtG, dz)
    dA = np.empty((dim, M, dim))
    for d in range(dim):
        for i in range(dim):
            dA[d, :, i] = ex.evaluate(terms.da[d][i], t, z)
    # + d_l a_k v^l   and  - d_k a_i v^i
    R += np.einsum("lmk,ml->mk", dA, dz)
    R -= np.einsum("kmi,mi->mk", dA, dz)
    for i in range(dim):
        R[:, i] += ex.evaluate(terms.dta[i], t, z)
    # - (1/2) d_k g_ij v^i v^j  and  + d_k V
    R -= 0.5 * np.einsum("kmij,mi,mj->mk", dG, dz, dz)
    for d in range(dim):
        R[:, d] += ex.evaluate(terms.dV[d], t, z)
    return R


def recover_multipliers(J: np.ndarray, R: np.ndarray):
    """Least-squares reaction forces: alpha minimizing |R - J^T alpha|.

    J has shape (M, l, dim) (or a single (l, dim) slice), R matches with
    shape (M, dim) (or (dim,)).  Solves the normal equations through the
    Gram matrix J J^T per node, falling back to the pseudo-inverse when a
    Gram matrix is singular beyond tolerance.  Returns (alpha, orthogonal
    residual, gram_warning).
    """
    single = J.ndim == 2
    if single:
        J = J[None]
        R = R[None]
    M, l, dim = J.shape
    gram = np.einsum("mld,mkd->mlk", J, J)
    rhs = np.einsum("mld,md->ml", J, R)
    alpha = np.empty((M, l))
    warning = False
    ev = np.linalg.eigvalsh(gram)
    good = ev[:, 0] > 1e-12 * np.maximum(ev[:, -1], 1e-300)
    if np.all(good):
        # trailing axis keeps numpy's batched solve in stacked-vector mode
        alpha = np.linalg.solve(gram, rhs[..., None])[..., 0]
    else:
        warning = True
        for i in range(M):
            if good[i]:
                alpha[i] = np.linalg.solve(gram[i], rhs[i])
            else:
                alpha[i] = np.linalg.pinv(gram[i]) @ rhs[i]
    orth = R - np.einsum("mld,ml->md", J, alpha)
    if single:
        return alpha[0], orth[0], warning
    return alpha, orth, warning


def el_residual(model: ModelSpec, traj: FourierTrajectory, M: int,
                terms: LagrangianTerms | None = None) -> ResidualReport:
    """Euler-Lagrange residual report at M quadrature nodes.

    Unconstrained models report the raw residual norms; constrained
    models first remove the best least-squares combination of constraint
    gradients (the reaction force) and report the orthogonal part, the
    multiplier samples, the constraint values, and the total time
    derivative of each constraint along the path.
    """
    if terms is None:
        terms = LagrangianTerms(model)
    path = sample(traj, M)
    s = singular_set(model)
    if not s.is_empty():
        d_nodes = nearest_distances(s, path.z)
        if np.min(d_nodes) <= 0.0:
            raise VerifyError("trajectory touches the singular set "
                              "at a quadrature node")
    R = _el_residual_values(terms, path)

    multipliers = None
    constraint_sup = 0.0
    rate_sup = 0.0
    gram_warning = False
    if model.constraints:
        F = terms.constraints_at(path.t, path.z)
        J = terms.constraint_jacobian_at(path.t, path.z)
        constraint_sup = float(np.max(np.abs(F)))
        multipliers, R, gram_warning = recover_multipliers(J, R)
        rate = np.einsum("mld,md->ml", J, path.dz)
        for j in range(len(model.constraints)):
            rate[:, j] += ex.evaluate(terms.dtf[j], path.t, path.z)
        rate_sup = float(np.max(np.abs(rate)))

    node_norms = np.linalg.norm(R, axis=1)
    el_sup = float(np.max(node_norms))
    el_l2 = float(math.sqrt(model.omega / M * float(np.sum(node_norms ** 2))))

    drift = None
    if is_autonomous(model):
        drift = _jacobi_drift(terms, path)

    sig = winding_signature(traj, s)
    return ResidualReport(
        el_sup=el_sup, el_l2=el_l2, multipliers=multipliers,
        constraint_sup=constraint_sup, constraint_rate_sup=rate_sup,
        energy_drift=drift, min_distance=sig.min_distance,
        clearance_integral=sig.clearance_integral,
        gram_warning=gram_warning)


def _jacobi_drift(terms: LagrangianTerms, path) -> float:
    G = terms.metric_at(path.t, path.z)
    V = terms.potential_at(path.t, path.z)
    h = 0.5 * np.einsum("mi,mij,mj->m", path.dz, G, path.dz) + V
    return float(np.max(np.abs(h - h[0])))


def energy_drift(model: ModelSpec, traj: FourierTrajectory,
                 M: int) -> float:
    """sup_i |h(t_i) - h(t_0)| with h the Jacobi integral.

    Defined only for autonomous models (no expression references t);
    h = v . dL/dv - L, which reduces to (1/2) v G v + V because the
    gyroscopic term is linear in v.
    """
    if not is_autonomous(model):
        raise VerifyError("energy drift is defined only for autonomous "
                          "models (an expression references t)")
    terms = LagrangianTerms(model)
    return _jacobi_drift(terms, sample(traj, M))


def homotopy_equiv_sufficient(t1: FourierTrajectory,
                              t2: FourierTrajectory,
                              s: SingularSet, delta: float) -> str:
    """One-sided homotopy test: 'Homotopic' or 'Inconclusive'.

    Two loops with clearance >= delta from the singular set are
    homotopic in the complement whenever they stay uniformly closer to
    each other than delta/2 (the straight-line homotopy then never
    touches the set) and carry the same winding data.  Anything else is
    Inconclusive -- the test never certifies non-equivalence.
    """
    if delta <= 0:
        raise VerifyError("delta must be positive")
    if t1.dim != t2.dim or abs(t1.omega - t2.omega) > 1e-12 * t1.omega:
        raise VerifyError("trajectories live in different spaces")
    d1 = min_distance_to(t1, s)
    d2 = min_distance_to(t2, s)
    if d1 < delta or d2 < delta:
        raise VerifyError(
            f"clearance below delta: {min(d1, d2):.6g} < {delta:.6g}")
    if t1.nu != t2.nu:
        return "Inconclusive"
    Mq = max(16 * max(t1.N, t2.N), 1024)
    tq = t1.omega * np.arange(Mq) / Mq
    z1 = evaluate_path(t1, tq)
    z2 = evaluate_path(t2, tq)
    sup = float(np.max(np.linalg.norm(z1 - z2, axis=1)))
    if sup >= delta / 2:
        return "Inconclusive"
    sig1 = winding_signature(t1, s)
    sig2 = winding_signature(t2, s)
    if not sig1.same_class(sig2):
        return "Inconclusive"
    return "Homotopic"


def holder_seminorm(traj: FourierTrajectory, M: int = 512) -> float:
    """Finite-difference 1/2-Holder seminorm over one period.

    sup over node pairs of |z(t_i) - z(t_j)| / sqrt(t_i - t_j), a raw
    regularity diagnostic (no inequality asserted against it).
    """
    M = min(M, 2048)  # O(M^2) pairs
    path = sample(traj, max(M, 2 * traj.N + 1))
    z, t = path.z, path.t
    best = 0.0
    for i in range(len(t) - 1):
        diffs = np.linalg.norm(z[i + 1:] - z[i], axis=1)
        dts = np.sqrt(t[i + 1:] - t[i])
        best = max(best, float(np.max(diffs / dts)))
    return best
