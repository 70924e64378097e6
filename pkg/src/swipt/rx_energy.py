"""Receiver energy consumption extension of the outage-energy trade-off.

The decoding circuitry draws a constant power p_i while active and a fixed
sensing energy q0 is spent every block, so the quantity the receiver can
actually bank is E[Q] - p_i * E[rho] - q0. Only the constant-transmit-power
case is covered; the switching rule shifts the decode region boundary from
1/lam down to 1/lam - p_i.
"""

from __future__ import annotations

import math

import numpy as np

from .duals import Branches, DualSolution, bisect_lambda
from .errors import InfeasibleTargetError
from .fading import FadingEnsemble
from .link import LinkParams, evaluate, nonoutage_vec


def net_subproblem(P: float, params: LinkParams):
    """Per-state branches with the ID-mode circuit draw charged as negative
    energy, so the generic solver constrains the net harvested amount."""
    if P <= 0:
        raise ValueError("P must be > 0")

    def sub(lam: float, ens: FadingEnsemble) -> Branches:
        x = nonoutage_vec(ens.h, ens.intf, P, params.r0, params.sigma2)
        e_eh = params.alpha * (ens.h * P + ens.intf)
        e_id = np.full_like(x, -params.p_i)
        p_const = np.full_like(x, P)
        return Branches(lag_id=x + lam * e_id, lag_eh=lam * e_eh,
                        obj_id=x, obj_eh=np.zeros_like(x),
                        energy_id=e_id, energy_eh=e_eh,
                        power_id=p_const, power_eh=p_const,
                        energy_slope_eh=params.alpha * ens.h)

    return sub


def oe_rule_net(state, lam_hat: float, P: float, params: LinkParams) -> int:
    """Net-energy switching rule: decode iff the state supports the target
    rate and lam_hat*(h*P + intf) < 1 - lam_hat*p_i."""
    h, intf = state
    g = math.expm1(params.r0)
    capable = h / (intf + params.sigma2) > g / P
    worth = lam_hat * params.alpha * (h * P + intf) < 1.0 - lam_hat * params.p_i
    return int(capable and worth)


def oe_boundary_net(ensemble: FadingEnsemble, P: float, params: LinkParams,
                    q_bar: float, tol: float = 1e-9) -> DualSolution:
    """Maximal non-outage probability with net harvested energy >= q_bar.

    The per-block sensing energy q0 is absorbed into the target; the solver
    then runs the same bisection as the consumption-free problem with the
    constraint function E[Q] - p_i * E[rho].
    """
    sub = net_subproblem(P, params)
    target = q_bar + params.q0
    try:
        return bisect_lambda(ensemble, sub, target, tol,
                             evaluator=lambda pol: evaluate(ensemble, pol, None, params))
    except InfeasibleTargetError as err:
        raise InfeasibleTargetError(
            f"net energy target {q_bar} exceeds the achievable maximum "
            f"{err.q_max - params.q0}", err.q_max - params.q0) from err
