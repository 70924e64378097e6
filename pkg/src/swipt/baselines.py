"""Heuristic receiver mode-switching rules and their calibration.

Three low-complexity alternatives to the optimal switching: periodic
(CSI-blind time split), interference-based (harvest when the interference is
strong), and SINR-based (decode when the SINR is high). Each rule has one
scalar parameter, calibrated so the harvested energy meets the target
exactly; with transmitter CSI the transmit power is additionally optimized
for the fixed switching rule.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import alloc
from .errors import ConfigError, InfeasibleTargetError
from .fading import FadingEnsemble
from .link import LinkParams, Metrics, ModePolicy, PowerBudget, rate_vec

KINDS = ("periodic", "interference", "sinr")


@dataclass(frozen=True)
class BaselineSpec:
    """A switching rule and its calibrated parameter.

    kind "periodic": parameter theta in [0, 1], fraction of time harvesting.
    kind "interference": harvest when interference > parameter.
    kind "sinr": decode when h/(intf+sigma2) > parameter.
    """

    kind: str
    calibrated_param: float = math.nan

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ConfigError(f"unknown baseline kind {self.kind!r}")


def _energy_states(ensemble: FadingEnsemble, P: float, params: LinkParams) -> np.ndarray:
    return params.alpha * (ensemble.h * P + ensemble.intf)


def _close_on_marginals(w, e, rho, marginal_idx, q_bar):
    """Hand marginal states back to ID (ascending index) until E[Q] == q_bar."""
    slack = float(np.sum(w * (1.0 - rho) * e)) - q_bar
    for j in marginal_idx:
        de = w[j] * e[j]
        if de <= slack + 1e-15:
            rho[j] = 1.0
            slack -= de
        else:
            rho[j] = slack / de if de > 0 else 1.0
            break
    return rho


def periodic_policy(ensemble: FadingEnsemble, P: float, params: LinkParams,
                    q_bar: float) -> tuple[ModePolicy, float]:
    """CSI-blind split: harvest a fixed fraction theta = q_bar / Q_max of the
    time in every state, realized as uniform fractional rho = 1 - theta."""
    e = _energy_states(ensemble, P, params)
    q_max = float(np.sum(ensemble.w * e))
    if q_bar > q_max * (1 + 1e-12) + 1e-15:
        raise InfeasibleTargetError(
            f"target {q_bar} exceeds Q_max {q_max} of the periodic rule", q_max)
    theta = 0.0 if q_max <= 0 else min(q_bar / q_max, 1.0)
    return ModePolicy.constant(len(ensemble), 1.0 - theta, P), theta


def _threshold_policy(ensemble, e, q_bar, key, eh_when_greater, tol):
    """Calibrate a scalar threshold on `key` by bisection.

    eh_when_greater: EH mode when key > threshold (interference rule);
    otherwise EH when key <= threshold (SINR rule, with the convention that
    decoding requires key strictly above the threshold). The harvested energy
    is monotone in the threshold; marginal states between the final brackets
    get fractional rho so the target is met exactly.
    """
    w = ensemble.w

    def eh_mask(thr):
        return key > thr if eh_when_greater else key <= thr

    def energy(thr):
        return float(np.sum(w * e * eh_mask(thr)))

    lo, hi = 0.0, float(np.max(key)) + 1.0
    e_lo, e_hi = energy(lo), energy(hi)
    feas_lo = eh_when_greater  # energy nonincreasing in thr for the intf rule
    e_feas = e_lo if feas_lo else e_hi
    if q_bar > e_feas * (1 + 1e-12) + 1e-15:
        raise InfeasibleTargetError(
            f"target {q_bar} exceeds this rule's maximum {e_feas}", e_feas)
    for _ in range(200):
        if hi - lo <= 1e-14 * max(1.0, hi):
            break
        mid = 0.5 * (lo + hi)
        if (energy(mid) >= q_bar) == feas_lo:
            lo = mid
        else:
            hi = mid
    feas_thr, infeas_thr = (lo, hi) if feas_lo else (hi, lo)
    rho = 1.0 - eh_mask(feas_thr).astype(float)
    marginal = np.nonzero(eh_mask(feas_thr) != eh_mask(infeas_thr))[0]
    rho = _close_on_marginals(w, e, rho, marginal, q_bar)
    return rho, feas_thr


def interference_policy(ensemble: FadingEnsemble, P: float, params: LinkParams,
                        q_bar: float, tol: float = 1e-9) -> tuple[ModePolicy, float]:
    """Harvest when the interference power exceeds a calibrated threshold."""
    e = _energy_states(ensemble, P, params)
    if q_bar <= 0:
        return ModePolicy.constant(len(ensemble), 1.0, P), math.inf
    rho, thr = _threshold_policy(ensemble, e, q_bar, ensemble.intf, True, tol)
    return ModePolicy(rho=rho, p=np.full(len(ensemble), float(P))), thr


def sinr_policy(ensemble: FadingEnsemble, P: float, params: LinkParams,
                q_bar: float, tol: float = 1e-9) -> tuple[ModePolicy, float]:
    """Decode when the SINR h/(intf+sigma2) exceeds a calibrated threshold."""
    e = _energy_states(ensemble, P, params)
    if q_bar <= 0:
        return ModePolicy.constant(len(ensemble), 1.0, P), 0.0
    sinr = ensemble.h / (ensemble.intf + params.sigma2)
    rho, thr = _threshold_policy(ensemble, e, q_bar, sinr, False, tol)
    return ModePolicy(rho=rho, p=np.full(len(ensemble), float(P))), thr


def _eh_fractions(ensemble: FadingEnsemble, params: LinkParams,
                  kind: str, param: float) -> np.ndarray:
    sinr = ensemble.h / (ensemble.intf + params.sigma2)
    if kind == "periodic":
        return np.full(len(ensemble), float(param))
    if kind == "interference":
        return (ensemble.intf > param).astype(float)
    return (sinr <= param).astype(float)


def _eh_allocation(ensemble, budget, params, f):
    """Peak-fill energy transfer over the EH time fractions f.

    Returns (per-state EH transmit power, average power spent, harvested
    energy). All of the average-power budget is available to the fill; the
    caller decides how much of the remainder goes to decoding.
    """
    w_eff = ensemble.w * f
    p_eh, spend = alloc.peak_fill(ensemble.h, w_eff, budget.p_peak, budget.p_avg)
    p_eh = np.where(f > 0, p_eh, 0.0)
    energy = float(np.sum(w_eff * params.alpha * (ensemble.h * p_eh + ensemble.intf)))
    return p_eh, spend, energy


def baseline_with_csit_power(ensemble: FadingEnsemble, budget: PowerBudget,
                             params: LinkParams, q_bar: float, spec: BaselineSpec,
                             objective: str, tol: float = 1e-9,
                             ) -> tuple[ModePolicy, Metrics, BaselineSpec]:
    """Optimal transmit power control on top of a heuristic switching rule.

    The rule parameter is calibrated (bisection, fractional time sharing at
    one boundary state for the threshold rules) so that peak-power energy
    transfer during the EH fractions harvests exactly q_bar; decoding then
    spends the remaining average power with truncated channel inversion
    (objective "outage") or water-filling (objective "rate").

    Metrics are computed directly from the two-power time shares; the
    returned ModePolicy carries the time-averaged per-state power, which is
    exact except at time-shared states.
    """
    if objective not in ("outage", "rate"):
        raise ConfigError(f"unknown objective {objective!r}")
    n = len(ensemble)
    w = ensemble.w

    def energy_at(param: float) -> float:
        f = _eh_fractions(ensemble, params, spec.kind, param)
        return _eh_allocation(ensemble, budget, params, f)[2]

    if spec.kind == "periodic":
        lo_param, hi_param = 0.0, 1.0
    elif spec.kind == "interference":
        lo_param, hi_param = float(np.max(ensemble.intf)) + 1.0, 0.0
    else:
        sinr = ensemble.h / (ensemble.intf + params.sigma2)
        lo_param, hi_param = 0.0, float(np.max(sinr)) + 1.0
    # lo_param is the all-ID extreme, hi_param the most-EH one.
    e_max = energy_at(hi_param)
    if q_bar > e_max * (1 + 1e-12) + 1e-15:
        raise InfeasibleTargetError(
            f"target {q_bar} is beyond this rule's CSIT maximum {e_max}"
            " (energy constraint binds)", e_max)

    if q_bar <= 0:
        param = lo_param
        f = np.zeros(n)
    else:
        lo, hi = lo_param, hi_param
        for _ in range(200):
            if abs(hi - lo) <= 1e-13 * max(1.0, abs(hi), abs(lo)):
                break
            mid = 0.5 * (lo + hi)
            if energy_at(mid) >= q_bar:
                hi = mid
            else:
                lo = mid
        param = hi
        f = _eh_fractions(ensemble, params, spec.kind, param)
        if spec.kind != "periodic":
            # Fractional EH time on a boundary state closes the threshold
            # rule's energy step onto the target; low indices prefer ID.
            f_lo = _eh_fractions(ensemble, params, spec.kind, lo)
            for j in np.nonzero(f != f_lo)[0]:
                f[j] = 0.0
                if _eh_allocation(ensemble, budget, params, f)[2] >= q_bar:
                    continue
                frac_lo, frac_hi = 0.0, 1.0
                for _ in range(100):
                    f[j] = 0.5 * (frac_lo + frac_hi)
                    if _eh_allocation(ensemble, budget, params, f)[2] >= q_bar:
                        frac_hi = f[j]
                    else:
                        frac_lo = f[j]
                f[j] = frac_hi
                break

    p_eh, spend_eh, q_eh = _eh_allocation(ensemble, budget, params, f)
    id_budget = max(budget.p_avg - spend_eh, 0.0)
    id_w = w * (1.0 - f)

    sigma_eff = ensemble.intf + params.sigma2
    if objective == "outage":
        g = math.expm1(params.r0)
        p_bar = np.full(n, np.inf)
        np.divide(g * sigma_eff, ensemble.h, out=p_bar, where=ensemble.h > 0)
        servable = (ensemble.h / sigma_eff) >= g / budget.p_peak
        serve, spend_id = alloc.inversion_serve(p_bar, id_w, servable, id_budget)
        p_id = np.where(serve > 0, p_bar, 0.0)
        obj_value = float(np.sum(id_w * serve))
        rate = obj_value * params.r0
        delta = obj_value
    else:
        p_id, _ = alloc.waterfill_powers(ensemble.h, ensemble.intf, id_w,
                                         params.sigma2, budget.p_peak, id_budget)
        rates = rate_vec(ensemble.h, ensemble.intf, p_id, params.sigma2)
        rate = float(np.sum(id_w * rates))
        delta = float(np.sum(id_w * (rates >= params.r0)))
        spend_id = float(np.sum(id_w * p_id))

    rho = 1.0 - f
    p_used = spend_eh + spend_id
    q_net = q_eh - params.p_i * float(np.sum(w * rho)) - params.q0
    metrics = Metrics(delta=delta, rate=rate, q_avg=q_eh, p_used=p_used, q_net=q_net)
    policy = ModePolicy(rho=rho, p=f * p_eh + (1.0 - f) * p_id)
    return policy, metrics, BaselineSpec(kind=spec.kind, calibrated_param=float(param))
