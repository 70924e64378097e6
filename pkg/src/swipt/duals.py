"""Generic Lagrange-dual machinery for per-fading-state decomposable problems.

Each solver repeatedly evaluates a pluggable per-state subproblem that, at a
fixed dual point, reports the Lagrangian value of the two receiver modes for
every state together with the objective, constrained-energy, and transmit
power contribution of each mode. The per-state maximization decouples, so a
policy is recovered by taking the better mode per state; residual slack in
the coupling constraint is closed at marginal (Lagrangian-tied) states.

Two dual searches are provided:

* ``bisect_lambda`` — 1-D bisection over the energy multiplier, for problems
  whose only coupling constraint is the harvested-energy target.
* ``ellipsoid_duals`` — 2-D ellipsoid method over (energy multiplier, average
  power multiplier), for the transmitter-side power-controlled problems.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Protocol

import numpy as np

from .errors import ConvergenceError, InfeasibleTargetError
from .fading import FadingEnsemble
from .link import Metrics, ModePolicy

# Relative bracket width at which the 1-D bisection stops; the remaining
# ambiguity is resolved exactly by time sharing the marginal state(s).
_BRACKET_REL = 1e-13
_TIE_ATOL = 1e-12


@dataclass(frozen=True)
class Branches:
    """Per-state evaluations of the two receiver modes at one dual point.

    All arrays align with the ensemble. ``lag_*`` are per-state Lagrangian
    values (by construction d(lag)/d(lam) equals the ``energy_*`` field and
    d(lag)/d(beta) equals ``-power_*``), ``obj_*`` the objective contributions
    (non-outage indicator or rate), ``energy_*`` the contributions to the
    constrained energy quantity, and ``power_*`` the transmit powers.
    ``energy_slope_eh`` is d(energy_eh)/d(power) — the harvested energy gained
    per unit of EH-mode transmit power — used when recovery trims power.
    """

    lag_id: np.ndarray
    lag_eh: np.ndarray
    obj_id: np.ndarray
    obj_eh: np.ndarray
    energy_id: np.ndarray
    energy_eh: np.ndarray
    power_id: np.ndarray
    power_eh: np.ndarray
    energy_slope_eh: np.ndarray | None = None

    def decide(self, tie_tol: np.ndarray | float = 0.0):
        """Greedy per-state mode choice: ID iff its Lagrangian strictly wins.

        Returns (rho, tie) where ``tie`` flags states whose two Lagrangian
        values agree within ``tie_tol`` (these carry the time-sharing slack).
        """
        gap = self.lag_id - self.lag_eh
        rho = (gap > 0).astype(float)
        tie = np.abs(gap) <= tie_tol + _TIE_ATOL * (1.0 + np.abs(self.lag_id) + np.abs(self.lag_eh))
        return rho, tie

    def mix(self, rho: np.ndarray, which: str) -> np.ndarray:
        """rho-weighted combination of the per-state ID/EH quantities."""
        a = getattr(self, which + "_id")
        b = getattr(self, which + "_eh")
        return rho * a + (1.0 - rho) * b


class StateSubproblem(Protocol):
    """1-D subproblem: branch evaluations at a given energy multiplier."""

    def __call__(self, lam: float, ensemble: FadingEnsemble) -> Branches: ...


class StateSubproblem2D(Protocol):
    """2-D subproblem: branch evaluations at (energy, power) multipliers."""

    def __call__(self, lam: float, beta: float, ensemble: FadingEnsemble) -> Branches: ...


@dataclass(frozen=True)
class DualPoint:
    """Converged dual variables plus the residual bracket half-widths.

    The widths bound how far the true optimal multiplier may sit from the
    reported one; primal recovery uses them to recognize marginal states.
    """

    lam: float
    beta: float | None = None
    lam_width: float = 0.0
    beta_width: float = 0.0


@dataclass(frozen=True)
class DualSolution:
    """Solver output: dual point, recovered policy, and diagnostics.

    ``objective``/``energy_value``/``power_value`` are the recovered policy's
    subproblem-level totals (for the receiver-consumption problem the energy
    value is the *net* harvested energy); ``metrics`` carries the plain link
    accounting when the caller supplied an evaluator.
    """

    lam: float
    beta: float | None
    policy: ModePolicy
    metrics: Metrics | None
    objective: float
    dual_value: float
    energy_value: float
    power_value: float
    iterations: int

    @property
    def gap(self) -> float:
        """Absolute duality gap (dual upper bound minus primal objective)."""
        return self.dual_value - self.objective


def _policy_sums(w: np.ndarray, br: Branches, rho: np.ndarray):
    obj = float(np.sum(w * br.mix(rho, "obj")))
    energy = float(np.sum(w * br.mix(rho, "energy")))
    power = float(np.sum(w * br.mix(rho, "power")))
    return obj, energy, power


def _dual_fn_value(w: np.ndarray, br: Branches, lam: float, q_bar: float,
                   beta: float = 0.0, p_avg: float = 0.0) -> float:
    best = np.maximum(br.lag_id, br.lag_eh)
    return float(np.sum(w * best)) - lam * q_bar + beta * p_avg


def max_energy(ensemble: FadingEnsemble, br: Branches) -> float:
    """Largest constrained-energy value any mode assignment can reach."""
    return float(np.sum(ensemble.w * np.maximum(br.energy_id, br.energy_eh)))


def recover_primal(ensemble: FadingEnsemble, sub, dual_point: DualPoint,
                   q_bar: float, budget=None) -> ModePolicy:
    """Recover a deterministic primal policy from a converged dual point.

    Without a power multiplier (``dual_point.beta is None``) the energy
    constraint is closed with equality whenever ``lam > 0``: marginal states
    (Lagrangian ties within the bracket width) are handed back to ID in
    ascending index order, with at most one state left fractional. With a
    power multiplier, modes stay binary and feasibility is restored by power
    moves (see ``_polish_csit``); ``budget`` must then be given.
    """
    if dual_point.beta is None:
        br = sub(dual_point.lam, ensemble)
        rho = _close_energy(ensemble.w, br, dual_point.lam, dual_point.lam_width, q_bar)
        return ModePolicy(rho=rho, p=br.mix(rho, "power"))
    rho, p, _, _ = _polish_csit(ensemble, sub, dual_point.lam, dual_point.beta,
                                q_bar, budget.p_avg)
    return ModePolicy(rho=rho, p=p)


def _close_energy(w: np.ndarray, br: Branches, lam: float, lam_width: float,
                  q_bar: float) -> np.ndarray:
    """Exact energy closure for the 1-D dual: E[energy] == q_bar when lam > 0."""
    tie_tol = lam_width * np.abs(br.energy_eh - br.energy_id)
    rho, tie = br.decide(tie_tol)
    if lam <= 0.0:
        # Inactive constraint: keep the unconstrained argmax policy.
        return rho
    rho = np.where(tie, 0.0, rho)  # start from the feasible (ties-to-EH) side
    energy = float(np.sum(w * br.mix(rho, "energy")))
    slack = energy - q_bar
    if slack < -1e-9 * max(1.0, abs(q_bar)):
        raise ConvergenceError(
            "dual point cannot meet the energy target",
            {"lam": lam, "energy": energy, "q_bar": q_bar})
    slack = max(slack, 0.0)
    for j in np.nonzero(tie)[0]:
        de = w[j] * (br.energy_eh[j] - br.energy_id[j])
        if de <= slack + _TIE_ATOL:
            rho[j] = 1.0  # lowest index prefers ID
            slack -= max(de, 0.0)
        else:
            rho[j] = slack / de  # the single fractional marginal state
            slack = 0.0
            break
    return rho


def bisect_lambda(ensemble: FadingEnsemble, sub: StateSubproblem, q_bar: float,
                  tol: float = 1e-9, max_iter: int = 300,
                  evaluator: Callable[[ModePolicy], Metrics] | None = None) -> DualSolution:
    """Solve a 1-D dual by bisection on the energy multiplier.

    Finds the smallest lam >= 0 whose greedy policy harvests at least
    ``q_bar`` (the greedy harvested energy is nondecreasing in lam, so the
    bracketing predicate is monotone), then closes the residual step exactly
    by time sharing marginal states. The bracket is tightened to relative
    width 1e-13, which subsumes the |E - q_bar| <= tol stopping rule since
    the closure afterwards is exact.
    """
    if tol <= 0:
        raise ValueError("tol must be > 0")
    w = ensemble.w
    evals = 0

    def energy_of(lam: float):
        nonlocal evals
        evals += 1
        br = sub(lam, ensemble)
        rho, _ = br.decide()
        return float(np.sum(w * br.mix(rho, "energy")))

    br0 = sub(0.0, ensemble)
    rho0, _ = br0.decide()
    e0 = float(np.sum(w * br0.mix(rho0, "energy")))
    q_max = max_energy(ensemble, br0)
    scale = max(1.0, abs(q_bar))
    if q_bar > q_max:
        if q_bar > q_max + tol * scale:
            raise InfeasibleTargetError(
                f"energy target {q_bar} exceeds the achievable maximum {q_max}", q_max)
        q_bar = q_max  # within tolerance of the vertex: clamp

    if e0 >= q_bar - _TIE_ATOL * scale:
        point = DualPoint(lam=0.0)
    else:
        lo, hi = 0.0, 1.0
        e_hi = energy_of(hi)
        doublings = 0
        while e_hi < q_bar:
            lo, hi = hi, 2.0 * hi
            e_hi = energy_of(hi)
            doublings += 1
            if doublings > 200:
                raise ConvergenceError("no finite multiplier meets the energy target",
                                       {"q_bar": q_bar, "q_max": q_max})
        it = 0
        while hi - lo > _BRACKET_REL * hi and it < max_iter:
            mid = 0.5 * (lo + hi)
            if energy_of(mid) >= q_bar:
                hi = mid
            else:
                lo = mid
            it += 1
        point = DualPoint(lam=hi, lam_width=hi - lo)

    policy = recover_primal(ensemble, sub, point, q_bar)
    br = sub(point.lam, ensemble)
    obj, energy, power = _policy_sums(w, br, policy.rho)
    dual_value = _dual_fn_value(w, br, point.lam, q_bar)
    metrics = evaluator(policy) if evaluator is not None else None
    return DualSolution(lam=point.lam, beta=None, policy=policy, metrics=metrics,
                        objective=obj, dual_value=dual_value, energy_value=energy,
                        power_value=power, iterations=evals)


def _polish_csit(ensemble: FadingEnsemble, sub, lam: float, beta: float,
                 q_bar: float, p_avg: float):
    """Binary-mode primal polish for the 2-D dual.

    A time-shared state would need two transmit powers, which ModePolicy's
    single per-state power cannot carry, so modes stay in {0, 1} and
    feasibility is restored with power moves, cheapest first:

    1. energy shortfall: flip the ID states with the smallest Lagrangian
       margin to EH until E[energy] >= q_bar;
    2. power overshoot: (a) trim EH-state power where the harvested energy
       per watt is smallest, spending any energy surplus (zero objective
       cost); (b) shrink the remaining ID powers by bisecting a higher power
       multiplier through the subproblem with the modes frozen — exact for
       water-filling, and for channel inversion it drops the most expensive
       served state first.

    At a converged dual point these moves touch O(1) states and the residual
    suboptimality is bounded by one state weight.
    Returns (rho, p, energy, objective).
    """
    w = ensemble.w
    br = sub(lam, beta, ensemble)
    rho, _ = br.decide()
    p = br.mix(rho, "power").copy()
    obj_id = br.obj_id.copy()
    margin = br.lag_id - br.lag_eh
    slope = (br.energy_slope_eh if br.energy_slope_eh is not None
             else np.zeros_like(p))

    e_tot = float(np.sum(w * br.mix(rho, "energy")))
    p_tot = float(np.sum(w * p))
    e_tol = 1e-12 * max(1.0, abs(q_bar))
    p_tol = 1e-12 * max(1.0, p_avg)

    if e_tot < q_bar - e_tol:
        gain = br.energy_eh - br.energy_id
        for j in np.argsort(margin, kind="stable"):
            if e_tot >= q_bar - e_tol:
                break
            if rho[j] < 0.5 or gain[j] <= 0:
                continue
            rho[j] = 0.0
            p[j] = br.power_eh[j]
            e_tot += w[j] * gain[j]
        p_tot = float(np.sum(w * p))
    if e_tot < q_bar - 1e-9 * max(1.0, abs(q_bar)):
        raise ConvergenceError("recovered policy cannot meet the energy target",
                               {"lam": lam, "beta": beta, "energy": e_tot,
                                "q_bar": q_bar})

    if p_tot - p_avg > p_tol:
        # Trim EH power first: free in objective, limited by the energy surplus.
        excess = p_tot - p_avg
        eh_idx = np.nonzero((rho < 0.5) & (p > 0))[0]
        for j in eh_idx[np.argsort(slope[eh_idx], kind="stable")]:
            if excess <= p_tol:
                break
            cut = min(p[j], excess / w[j])
            if slope[j] > 0:
                cut = min(cut, max(e_tot - q_bar, 0.0) / (w[j] * slope[j]))
            if cut <= 0:
                continue
            p[j] -= cut
            excess -= w[j] * cut
            e_tot -= w[j] * slope[j] * cut
        p_tot = p_avg + excess

    is_id = rho > 0.5
    if np.any(is_id) and abs(p_tot - p_avg) > p_tol and (p_tot > p_avg or beta > 0):
        id_budget = p_avg - float(np.sum(w[~is_id] * p[~is_id]))
        p_id_new, obj_id = _retune_id_powers(ensemble, sub, lam, beta, is_id,
                                             id_budget)
        p = np.where(is_id, p_id_new, p)

    objective = float(np.sum(w * np.where(is_id, obj_id, br.obj_eh)))
    return rho, p, e_tot, objective


def _retune_id_powers(ensemble, sub, lam, beta, is_id, id_budget):
    """Rescale the decode-side powers to the given budget with modes frozen.

    Bisects the power multiplier passed to the subproblem until the ID-mode
    spend meets the budget from below (exact for water-filling; channel
    inversion sheds or adds whole served states, most expensive first).
    """
    w = ensemble.w

    def id_spend(beta2: float):
        br2 = sub(lam, beta2, ensemble)
        return float(np.sum(w[is_id] * br2.power_id[is_id])), br2

    hi = max(2.0 * beta, 1.0)
    spend_hi, br_hi = id_spend(hi)
    grow = 0
    while spend_hi > id_budget and grow < 200:
        hi *= 2.0
        spend_hi, br_hi = id_spend(hi)
        grow += 1
    if spend_hi > id_budget:
        raise ConvergenceError(
            "cannot fit the average power budget with these modes",
            {"lam": lam, "beta": beta, "id_budget": id_budget})
    spend_lo, br_lo = id_spend(0.0)
    if spend_lo <= id_budget:  # budget unbinding: every decode state at max
        return br_lo.power_id, br_lo.obj_id
    lo = 0.0
    for _ in range(120):
        if hi - lo <= 1e-14 * max(1.0, hi):
            break
        mid = 0.5 * (lo + hi)
        spend_mid, br_mid = id_spend(mid)
        if spend_mid > id_budget:
            lo = mid
        else:
            hi, br_hi = mid, br_mid
    return br_hi.power_id, br_hi.obj_id


def ellipsoid_duals(ensemble: FadingEnsemble, sub: StateSubproblem2D, q_bar: float,
                    budget, tol: float = 1e-9, max_iter: int = 500,
                    gap_tol: float = 1e-4,
                    center: tuple[float, float] | None = None,
                    radii: tuple[float, float] | None = None,
                    evaluator: Callable[[ModePolicy], Metrics] | None = None,
                    trace: list | None = None) -> DualSolution:
    """Minimize the 2-D dual over (lam, beta) >= 0 with the ellipsoid method.

    Objective cuts use the subgradient [E[energy*] - q_bar, p_avg - E[p*]];
    a negative multiplier triggers a deep feasibility cut instead. The loop
    stops once the ellipsoid certifies the dual value is within ``gap_tol``
    (relative) of its minimum or the subgradient vanishes, then a primal
    policy is recovered from the best dual point seen and the realized gap is
    checked. ``trace``, if given, receives one dict per objective iteration
    with the center, dual value, and ellipsoid determinant.
    """
    if center is None or radii is None:
        raise ValueError("ellipsoid_duals needs an initial center and radii")
    w = ensemble.w
    p_avg = budget.p_avg
    x = np.array(center, dtype=float)
    pmat = np.diag(np.square(np.asarray(radii, dtype=float)))
    n = 2.0

    best_val = np.inf
    best_x = x.copy()
    cert = np.inf
    iterations = 0
    for iterations in range(1, max_iter + 1):
        lam, beta = x
        if lam < 0:
            a, depth = np.array([-1.0, 0.0]), -lam
        elif beta < 0:
            a, depth = np.array([0.0, -1.0]), -beta
        else:
            br = sub(lam, beta, ensemble)
            rho, _ = br.decide()
            _, energy, power = _policy_sums(w, br, rho)
            val = _dual_fn_value(w, br, lam, q_bar, beta, p_avg)
            if val < best_val:
                best_val, best_x = val, x.copy()
            a = np.array([energy - q_bar, p_avg - power])
            depth = 0.0
            cert = float(np.sqrt(max(a @ pmat @ a, 0.0)))
            if trace is not None:
                trace.append({"iter": iterations, "lam": lam, "beta": beta,
                              "dual": val, "det": float(np.linalg.det(pmat))})
            if cert <= 0.25 * gap_tol * max(1.0, abs(best_val)):
                break
            if not np.any(a):
                break  # exact subgradient zero: dual minimum hit
        pa = pmat @ a
        s = float(np.sqrt(max(float(a @ pa), 0.0)))
        if s <= 0:
            break
        alpha_cut = max(depth / s, 0.0)
        if alpha_cut >= 1.0:
            raise ConvergenceError("ellipsoid excluded the feasible quadrant",
                                   {"center": x.tolist(), "iteration": iterations})
        tau = (1.0 + n * alpha_cut) / (n + 1.0)
        delta = (n * n / (n * n - 1.0)) * (1.0 - alpha_cut * alpha_cut)
        sigma = 2.0 * (1.0 + n * alpha_cut) / ((n + 1.0) * (1.0 + alpha_cut))
        x = x - tau * pa / s
        pmat = delta * (pmat - sigma * np.outer(pa, pa) / (s * s))
        pmat = 0.5 * (pmat + pmat.T)

    lam, beta = max(best_x[0], 0.0), max(best_x[1], 0.0)
    rho, p, energy, obj = _polish_csit(ensemble, sub, lam, beta, q_bar, p_avg)
    policy = ModePolicy(rho=rho, p=p)
    power = float(np.sum(w * p))
    metrics = evaluator(policy) if evaluator is not None else None
    dual_value = best_val
    rel_gap = (dual_value - obj) / max(1.0, abs(dual_value))
    if iterations >= max_iter and rel_gap > gap_tol:
        raise ConvergenceError(
            "ellipsoid hit the iteration cap before closing the duality gap",
            {"iterations": iterations, "dual_value": dual_value, "primal": obj,
             "relative_gap": rel_gap, "certificate": cert})
    return DualSolution(lam=lam, beta=beta, policy=policy, metrics=metrics,
                        objective=obj, dual_value=dual_value, energy_value=energy,
                        power_value=power, iterations=iterations)
