"""Outage-vs-energy trade-off solvers.

Without transmitter CSI the transmitter sends constant power and only the
receiver's ID/EH mode switching is optimized (1-D dual). With CSI the
transmit power is jointly optimized: truncated channel inversion while
decoding, peak power while energy harvesting (2-D dual over the energy and
average-power multipliers). Closed-form mode-region thresholds and the
region vertex points are provided for the analysis cases.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import alloc
from .duals import Branches, DualSolution, bisect_lambda, ellipsoid_duals
from .errors import DegenerateCaseError, InfeasibleTargetError
from .fading import FadingEnsemble
from .link import LinkParams, PowerBudget, evaluate, nonoutage_vec


@dataclass(frozen=True)
class VertexPoints:
    """Extreme points of a trade-off region boundary.

    (obj_max, q_min): best information objective and the energy harvested
    while achieving it; (0, q_max): everything harvested, no information.
    """

    obj_max: float
    q_min: float
    q_max: float


@dataclass(frozen=True)
class OEThresholds:
    """Channel-gain thresholds of the CSIT mode partition (no interference).

    h1: smallest SINR that gets served by channel inversion.
    h2: smallest gain at which EH-mode transmission uses peak power.
    h3: gain where energy transfer overtakes decoding (h1 >= h2 case).
    """

    h1: float
    h2: float
    h3: float


@dataclass(frozen=True)
class RuleDiagnostics:
    """Inequality margins of the constant-power switching rule.

    sinr_margin > 0 means the state can decode at the target rate;
    value_margin > 0 means decoding beats harvesting at the given multiplier.
    Both are used for plotting the ID region on the (h, interference) plane.
    """

    sinr_margin: float
    value_margin: float


def oe_subproblem_no_csit(P: float, params: LinkParams):
    """Per-state branches for constant-power outage-energy switching."""
    if P <= 0:
        raise ValueError("P must be > 0")

    def sub(lam: float, ens: FadingEnsemble) -> Branches:
        x = nonoutage_vec(ens.h, ens.intf, P, params.r0, params.sigma2)
        e_eh = params.alpha * (ens.h * P + ens.intf)
        zeros = np.zeros_like(x)
        p_const = np.full_like(x, P)
        return Branches(lag_id=x, lag_eh=lam * e_eh, obj_id=x, obj_eh=zeros,
                        energy_id=zeros, energy_eh=e_eh,
                        power_id=p_const, power_eh=p_const,
                        energy_slope_eh=params.alpha * ens.h)

    return sub


def oe_rule_no_csit(state, lam: float, P: float,
                    params: LinkParams) -> tuple[int, RuleDiagnostics]:
    """Constant-power switching rule: decode iff the state can support the
    target rate and its total received power is not worth harvesting yet."""
    h, intf = state
    g = math.expm1(params.r0)
    sinr_margin = h / (intf + params.sigma2) - g / P
    value_margin = 1.0 - lam * params.alpha * (h * P + intf)
    rho = int(sinr_margin > 0 and value_margin > 0)
    return rho, RuleDiagnostics(sinr_margin=sinr_margin, value_margin=value_margin)


def oe_boundary_no_csit(ensemble: FadingEnsemble, P: float, params: LinkParams,
                        q_bar: float, tol: float = 1e-9) -> DualSolution:
    """Maximal non-outage probability with E[harvested] >= q_bar, no CSIT."""
    sub = oe_subproblem_no_csit(P, params)
    return bisect_lambda(ensemble, sub, q_bar, tol,
                         evaluator=lambda pol: evaluate(ensemble, pol, None, params))


def oe_subproblem_csit(budget: PowerBudget, params: LinkParams):
    """Per-state branches for the power-controlled outage-energy problem.

    ID mode uses truncated channel inversion (exact inversion power when the
    SINR clears h1, silence otherwise); EH mode transmits peak power when the
    weighted channel gain clears the power multiplier.
    """
    g = math.expm1(params.r0)
    p_peak = budget.p_peak
    alpha = params.alpha

    def sub(lam: float, beta: float, ens: FadingEnsemble) -> Branches:
        sigma_eff = ens.intf + params.sigma2
        sinr = ens.h / sigma_eff
        p_bar = np.full_like(ens.h, np.inf)
        np.divide(g * sigma_eff, ens.h, out=p_bar, where=ens.h > 0)
        h1 = max(beta * g, g / p_peak)
        serv = sinr >= h1
        p_id = np.where(serv, p_bar, 0.0)
        obj_id = serv.astype(float)
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


def oe_rule_csit(state, lam: float, beta: float, budget: PowerBudget,
                 params: LinkParams) -> tuple[int, float]:
    """Joint switching/power rule at one state: returns (rho, transmit power)."""
    ens = FadingEnsemble(h=np.array([state[0]]), intf=np.array([state[1]]),
                         w=np.array([1.0]))
    br = oe_subproblem_csit(budget, params)(lam, beta, ens)
    rho = int(br.lag_id[0] > br.lag_eh[0])
    p = float(br.power_id[0] if rho else br.power_eh[0])
    return rho, p


def oe_boundary_csit(ensemble: FadingEnsemble, budget: PowerBudget,
                     params: LinkParams, q_bar: float, tol: float = 1e-9,
                     max_iter: int = 500, gap_tol: float = 1e-4,
                     trace: list | None = None) -> DualSolution:
    """Maximal non-outage probability under APC + PPC with E[Q] >= q_bar."""
    q_max = csit_max_energy(ensemble, budget, params)
    scale = max(1.0, abs(q_bar))
    if q_bar > q_max + tol * scale:
        raise InfeasibleTargetError(
            f"energy target {q_bar} exceeds the CSIT maximum {q_max}", q_max)
    sub = oe_subproblem_csit(budget, params)
    return _run_ellipsoid(ensemble, sub, q_bar, budget, params, tol,
                          max_iter, gap_tol, trace)


def _run_ellipsoid(ensemble, sub, q_bar, budget, params, tol, max_iter,
                   gap_tol, trace):
    """Shared ellipsoid driver: standard initialization, one widened retry."""
    center = (1.0 / params.sigma2, 1.0 / budget.p_avg)
    radii = (10.0 / params.sigma2, 10.0 / budget.p_avg)
    evaluator = lambda pol: evaluate(ensemble, pol, budget, params)
    try:
        return ellipsoid_duals(ensemble, sub, q_bar, budget, tol=tol,
                               max_iter=max_iter, gap_tol=gap_tol,
                               center=center, radii=radii,
                               evaluator=evaluator, trace=trace)
    except Exception:
        # A target near the region vertex can push the multipliers outside
        # the standard initial ball; retry once with a 10x wider one.
        return ellipsoid_duals(ensemble, sub, q_bar, budget, tol=tol,
                               max_iter=2 * max_iter, gap_tol=gap_tol,
                               center=center,
                               radii=(10 * radii[0], 10 * radii[1]),
                               evaluator=evaluator, trace=trace)


def oe_mode_thresholds(lam: float, beta: float, budget: PowerBudget,
                       params: LinkParams) -> OEThresholds:
    """Closed-form {off, ID, EH} partition thresholds on the h axis.

    Valid for the interference-free analysis case with unit conversion
    efficiency and h1 >= h2. h3 is the largest root of
    lam*p_peak*h^2 - (beta*p_peak + 1)*h + beta*(e^r0 - 1)*sigma2 = 0,
    computed with the cancellation-free quadratic formula.
    """
    if lam <= 0:
        raise ValueError("lam must be > 0")
    if beta < 0:
        raise ValueError("beta must be >= 0")
    g = math.expm1(params.r0)
    p_peak = budget.p_peak
    h1 = max(beta * g, g / p_peak)
    h2 = beta / lam
    a = lam * p_peak
    b = -(beta * p_peak + 1.0)
    c = beta * g * params.sigma2
    disc = b * b - 4.0 * a * c
    if disc < 0:
        raise DegenerateCaseError(
            f"no real crossover: discriminant {disc} < 0 at lam={lam}, beta={beta}")
    h3 = (-b + math.sqrt(disc)) / (2.0 * a)
    return OEThresholds(h1=h1, h2=h2, h3=h3)


def oe_vertices_no_csit(ensemble: FadingEnsemble, P: float,
                        params: LinkParams) -> VertexPoints:
    """Region extremes for constant transmit power.

    q_max harvests everything; q_min is the energy left over in the outage
    states when the receiver decodes whenever it can.
    """
    if P <= 0:
        raise ValueError("P must be > 0")
    x = nonoutage_vec(ensemble.h, ensemble.intf, P, params.r0, params.sigma2)
    e = params.alpha * (ensemble.h * P + ensemble.intf)
    q_max = float(np.sum(ensemble.w * e))
    q_min = float(np.sum(ensemble.w * (1.0 - x) * e))
    delta_max = float(np.sum(ensemble.w * x))
    return VertexPoints(obj_max=delta_max, q_min=q_min, q_max=q_max)


def csit_max_energy(ensemble: FadingEnsemble, budget: PowerBudget,
                    params: LinkParams) -> float:
    """Maximal harvested energy under APC + PPC: peak-fill the best channels."""
    p, _ = alloc.peak_fill(ensemble.h, ensemble.w, budget.p_peak, budget.p_avg)
    return float(np.sum(ensemble.w * params.alpha * (ensemble.h * p + ensemble.intf)))


def csit_inversion_optimum(ensemble: FadingEnsemble, budget: PowerBudget,
                           params: LinkParams):
    """Outage-only optimum under APC + PPC (no harvesting requirement).

    Truncated channel inversion: serve states in descending SINR order at
    their exact inversion power until the average-power budget is spent.
    Returns (served fraction per state, inversion power per state, spend).
    """
    g = math.expm1(params.r0)
    sigma_eff = ensemble.intf + params.sigma2
    sinr = ensemble.h / sigma_eff
    p_bar = np.full_like(ensemble.h, np.inf)
    np.divide(g * sigma_eff, ensemble.h, out=p_bar, where=ensemble.h > 0)
    servable = sinr >= g / budget.p_peak
    frac, spend = alloc.inversion_serve(p_bar, ensemble.w, servable, budget.p_avg)
    return frac, np.where(servable, p_bar, 0.0), spend


def oe_vertices_csit(ensemble: FadingEnsemble, budget: PowerBudget,
                     params: LinkParams) -> VertexPoints:
    """Region extremes under transmit power control.

    delta_max comes from truncated channel inversion alone; q_min adds the
    energy the receiver still collects at that operating point: interference
    in every non-decoding slot plus peak-power energy transfer funded by
    whatever average-power budget inversion left unused.
    """
    q_max = csit_max_energy(ensemble, budget, params)
    frac, p_id, spend = csit_inversion_optimum(ensemble, budget, params)
    delta_max = float(np.sum(ensemble.w * frac))
    residual = max(budget.p_avg - spend, 0.0)
    idle = np.nonzero(frac <= 0.0)[0]  # fully non-decoding states can take energy transfer
    p_fill = np.zeros_like(ensemble.h)
    if residual > 0 and idle.size:
        p_sub, _ = alloc.peak_fill(ensemble.h[idle], ensemble.w[idle],
                                   budget.p_peak, residual)
        p_fill[idle] = p_sub
    q_min = float(np.sum(ensemble.w * params.alpha *
                         (ensemble.h * p_fill + (1.0 - frac) * ensemble.intf)))
    return VertexPoints(obj_max=delta_max, q_min=q_min, q_max=q_max)


def qmin_closed_form(P: float, lambda1: float, lambda2: float, r0: float,
                     sigma2: float) -> float:
    """Leftover harvested energy at the outage optimum, exponential fading.

    Closed form for h ~ exp(rate lambda1), interference ~ exp(rate lambda2),
    constant transmit power P (linear). Strictly decreasing in P over the
    operating range of interest.
    """
    if min(P, lambda1, lambda2, r0, sigma2) <= 0:
        raise ValueError("all arguments must be > 0")
    g = math.expm1(r0)
    denom = lambda2 * P + lambda1 * g
    front = lambda2 * math.exp(-lambda1 * g * sigma2 / P) * P / denom
    inner = math.exp(r0) * P / denom + P / lambda1 + g * sigma2
    return -front * inner + 1.0 / lambda2 + P / lambda1
