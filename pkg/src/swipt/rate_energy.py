"""Ergodic-rate-vs-energy trade-off solvers.

Same structure as the outage module: without transmitter CSI a 1-D dual
picks which states decode at constant power; with CSI the decoding states
water-fill their power and the harvesting states transmit at peak (2-D
dual). The decode-vs-harvest comparison pits a logarithmic value against a
linear one, so the strongest channels always end up harvesting.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import alloc
from .duals import Branches, DualSolution, bisect_lambda
from .errors import InfeasibleTargetError
from .fading import FadingEnsemble
from .link import LinkParams, PowerBudget, evaluate, rate_vec
from .outage_energy import VertexPoints, _run_ellipsoid, csit_max_energy


@dataclass(frozen=True)
class REThresholds:
    """Channel-gain thresholds of the CSIT mode partition (no interference).

    h_off: below it the transmitter stays silent (water-filling assigns no
    power); h4: above it energy transfer overtakes decoding.
    """

    h_off: float
    h4: float


def re_subproblem_no_csit(P: float, params: LinkParams):
    """Per-state branches for constant-power rate-energy switching."""
    if P <= 0:
        raise ValueError("P must be > 0")

    def sub(lam: float, ens: FadingEnsemble) -> Branches:
        r = rate_vec(ens.h, ens.intf, P, params.sigma2)
        e_eh = params.alpha * (ens.h * P + ens.intf)
        zeros = np.zeros_like(r)
        p_const = np.full_like(r, P)
        return Branches(lag_id=r, lag_eh=lam * e_eh, obj_id=r, obj_eh=zeros,
                        energy_id=zeros, energy_eh=e_eh,
                        power_id=p_const, power_eh=p_const,
                        energy_slope_eh=params.alpha * ens.h)

    return sub


def re_rule_no_csit(state, lam: float, P: float, params: LinkParams) -> int:
    """Decode iff the state's mutual information beats its harvest value."""
    h, intf = state
    r = math.log1p(h * P / (intf + params.sigma2))
    return int(r > lam * params.alpha * (h * P + intf))


def re_boundary_no_csit(ensemble: FadingEnsemble, P: float, params: LinkParams,
                        q_bar: float, tol: float = 1e-9) -> DualSolution:
    """Maximal ergodic rate with E[harvested] >= q_bar, no CSIT."""
    sub = re_subproblem_no_csit(P, params)
    return bisect_lambda(ensemble, sub, q_bar, tol,
                         evaluator=lambda pol: evaluate(ensemble, pol, None, params))


def waterfill_power(state, beta: float, budget: PowerBudget,
                    params: LinkParams) -> float:
    """Water-filling power 1/beta - (intf+sigma2)/h clamped to [0, p_peak]."""
    if beta <= 0:
        raise ValueError("beta must be > 0")
    h, intf = state
    if h <= 0:
        return 0.0
    return float(np.clip(1.0 / beta - (intf + params.sigma2) / h, 0.0, budget.p_peak))


def re_subproblem_csit(budget: PowerBudget, params: LinkParams):
    """Per-state branches for the power-controlled rate-energy problem.

    ID mode water-fills against the power multiplier; EH mode is the same
    peak-or-silent branch as in the outage problem.
    """
    p_peak = budget.p_peak
    alpha = params.alpha

    def sub(lam: float, beta: float, ens: FadingEnsemble) -> Branches:
        sigma_eff = ens.intf + params.sigma2
        floor = np.zeros_like(ens.h)
        np.divide(sigma_eff, ens.h, out=floor, where=ens.h > 0)
        water = np.inf if beta <= 0 else 1.0 / beta
        p_id = np.where(ens.h > 0, np.clip(water - floor, 0.0, p_peak), 0.0)
        obj_id = np.log1p(ens.h * p_id / sigma_eff)
        lag_id = obj_id - beta * p_id
        eh_gain = lam * alpha * ens.h - beta
        p_eh = np.where(eh_gain >= 0, p_peak, 0.0)
        e_eh = alpha * (ens.h * p_eh + ens.intf)
        lag_eh = eh_gain * p_eh + lam * alpha * ens.intf
        zeros = np.zeros_like(obj_id)
        return Branches(lag_id=lag_id, lag_eh=lag_eh, obj_id=obj_id, obj_eh=zeros,
                        energy_id=zeros, energy_eh=e_eh,
                        power_id=p_id, power_eh=p_eh,
                        energy_slope_eh=alpha * ens.h)

    return sub


def re_rule_csit(state, lam: float, beta: float, budget: PowerBudget,
                 params: LinkParams) -> tuple[int, float]:
    """Joint switching/power rule at one state: returns (rho, transmit power)."""
    ens = FadingEnsemble(h=np.array([state[0]]), intf=np.array([state[1]]),
                         w=np.array([1.0]))
    br = re_subproblem_csit(budget, params)(lam, beta, ens)
    rho = int(br.lag_id[0] > br.lag_eh[0])
    p = float(br.power_id[0] if rho else br.power_eh[0])
    return rho, p


def re_boundary_csit(ensemble: FadingEnsemble, budget: PowerBudget,
                     params: LinkParams, q_bar: float, tol: float = 1e-9,
                     max_iter: int = 500, gap_tol: float = 1e-4,
                     trace: list | None = None) -> DualSolution:
    """Maximal ergodic rate under APC + PPC with E[Q] >= q_bar."""
    q_max = csit_max_energy(ensemble, budget, params)
    scale = max(1.0, abs(q_bar))
    if q_bar > q_max + tol * scale:
        raise InfeasibleTargetError(
            f"energy target {q_bar} exceeds the CSIT maximum {q_max}", q_max)
    sub = re_subproblem_csit(budget, params)
    return _run_ellipsoid(ensemble, sub, q_bar, budget, params, tol,
                          max_iter, gap_tol, trace)


def h4_threshold(lam: float, beta: float, budget: PowerBudget,
                 params: LinkParams, rel_tol: float = 1e-10) -> float:
    """Largest root of the decode-vs-harvest crossover equation.

    Solves log(h/(beta*sigma2)) - 1 + beta*sigma2/h - lam*h*p_peak
    + beta*p_peak = 0 on (beta/lam, inf) by bisection. The function has at
    most two stationary points (their locations solve a quadratic), so the
    search starts past the last local maximum to bracket the largest root
    specifically. Applies to the interference-free case with
    1/beta <= p_peak. A largest root at or below beta*sigma2 means the
    decode interval is empty; the degenerate marker beta*sigma2 is returned.
    """
    if lam <= 0 or beta <= 0:
        raise ValueError("lam and beta must be > 0")
    if 1.0 / beta > budget.p_peak:
        raise ValueError("threshold analysis assumes 1/beta <= p_peak")
    s2 = params.sigma2
    p_peak = budget.p_peak

    def value(h: float) -> float:
        return (math.log(h / (beta * s2)) - 1.0 + beta * s2 / h
                - lam * h * p_peak + beta * p_peak)

    lo = beta / lam
    # stationary points solve lam*p_peak*h^2 - h + beta*sigma2 = 0
    disc = 1.0 - 4.0 * lam * p_peak * beta * s2
    if disc > 0:
        h_top = (1.0 + math.sqrt(disc)) / (2.0 * lam * p_peak)
        if h_top > lo and value(h_top) > 0:
            lo = h_top  # the largest root lies on the final descent
    if value(lo) <= 0:
        return beta * s2
    hi = 2.0 * lo
    while value(hi) > 0:
        hi *= 2.0  # value falls off linearly in h, so this terminates
    while hi - lo > rel_tol * hi:
        mid = 0.5 * (lo + hi)
        if value(mid) > 0:
            lo = mid
        else:
            hi = mid
    return max(0.5 * (lo + hi), beta * s2)


def re_vertices(ensemble: FadingEnsemble, budget_or_p, params: LinkParams,
                csit: bool) -> VertexPoints:
    """Region extremes for the rate-energy trade-off.

    Without CSIT everything decodes at the rate optimum, so q_min = 0. With
    CSIT the rate optimum water-fills the average power; states left silent
    by the water line still harvest their interference, so q_min is that
    interference energy.
    """
    if csit:
        if not isinstance(budget_or_p, PowerBudget):
            raise ValueError("csit=True needs a PowerBudget")
        budget = budget_or_p
        q_max = csit_max_energy(ensemble, budget, params)
        p_star, _ = alloc.waterfill_powers(ensemble.h, ensemble.intf, ensemble.w,
                                           params.sigma2, budget.p_peak,
                                           budget.p_avg)
        r_max = float(np.sum(ensemble.w * rate_vec(ensemble.h, ensemble.intf,
                                                   p_star, params.sigma2)))
        silent = p_star <= 0.0
        q_min = float(np.sum(ensemble.w[silent] * params.alpha * ensemble.intf[silent]))
        return VertexPoints(obj_max=r_max, q_min=q_min, q_max=q_max)
    P = float(budget_or_p)
    if P <= 0:
        raise ValueError("P must be > 0")
    rates = rate_vec(ensemble.h, ensemble.intf, P, params.sigma2)
    r_max = float(np.sum(ensemble.w * rates))
    q_max = float(np.sum(ensemble.w * params.alpha * (ensemble.h * P + ensemble.intf)))
    return VertexPoints(obj_max=r_max, q_min=0.0, q_max=q_max)
