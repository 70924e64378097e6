"""Power-allocation primitives shared by the vertex, solver, and baseline code.

All three allocate a fixed average-power budget across weighted states:
peak-power filling in descending channel order (energy transfer), truncated
channel inversion (serve the cheapest states a constant rate), and
water-filling (ergodic-rate optimal). Weights may include time-sharing
fractions; every routine treats them as the effective probability mass of
the slot it allocates.
"""

from __future__ import annotations

import numpy as np


def peak_fill(h: np.ndarray, weights: np.ndarray, p_peak: float,
              budget: float) -> tuple[np.ndarray, float]:
    """Assign peak power to the largest-h states until the budget is spent.

    The marginal state gets the partial power that lands E[p] exactly on
    ``budget`` (or all states get p_peak when the budget is not binding).
    Ties in h resolve by ascending index. Returns (powers, spend).
    """
    p = np.zeros_like(h, dtype=float)
    if budget <= 0 or p_peak <= 0:
        return p, 0.0
    order = np.argsort(-h, kind="stable")
    cost = weights[order] * p_peak
    cum = np.cumsum(cost)
    full = cum <= budget + 1e-15 * max(1.0, budget)
    p[order[full]] = p_peak
    spend = float(cum[full][-1]) if np.any(full) else 0.0
    rest = np.nonzero(~full)[0]
    if rest.size and budget - spend > 0:
        j = order[rest[0]]
        p[j] = min((budget - spend) / weights[j], p_peak)
        spend += weights[j] * p[j]
    return p, spend


def inversion_serve(p_bar: np.ndarray, weights: np.ndarray, servable: np.ndarray,
                    budget: float) -> tuple[np.ndarray, float]:
    """Truncated channel inversion: serve the cheapest states first.

    ``p_bar`` is the exact per-state power that meets the rate target; states
    are served in ascending p_bar order (equivalently descending SINR) while
    the average-power budget lasts, the marginal one fractionally. Returns
    (served time fraction per state, spend).
    """
    frac = np.zeros_like(p_bar, dtype=float)
    idx = np.nonzero(servable)[0]
    if idx.size == 0 or budget <= 0:
        return frac, 0.0
    idx = idx[np.argsort(p_bar[idx], kind="stable")]
    cost = weights[idx] * p_bar[idx]
    cum = np.cumsum(cost)
    full = cum <= budget + 1e-15 * max(1.0, budget)
    frac[idx[full]] = 1.0
    spend = float(cum[full][-1]) if np.any(full) else 0.0
    rest = np.nonzero(~full)[0]
    if rest.size and budget - spend > 0:
        j = idx[rest[0]]
        if cost[rest[0]] > 0:
            frac[j] = (budget - spend) / cost[rest[0]]
            spend = budget
    return frac, spend


def waterfill_powers(h: np.ndarray, intf: np.ndarray, weights: np.ndarray,
                     sigma2: float, p_peak: float, budget: float,
                     rel_tol: float = 1e-13) -> tuple[np.ndarray, float]:
    """Water-filling powers [1/mu - (intf+sigma2)/h] clamped to [0, p_peak].

    Bisects the water level so the weighted average power meets ``budget``
    (states with h = 0 stay silent). When even all-peak transmission fits the
    budget, returns all-peak. Returns (powers, mu); mu = 0 means unbinding.
    """
    floor = np.full_like(h, np.inf, dtype=float)
    np.divide(intf + sigma2, h, out=floor, where=h > 0)

    def powers(mu: float) -> np.ndarray:
        return np.clip(1.0 / mu - floor, 0.0, p_peak)

    peak_cost = float(np.sum(weights * np.where(h > 0, p_peak, 0.0)))
    if budget >= peak_cost * (1.0 - 1e-15):
        return np.where(h > 0, p_peak, 0.0), 0.0
    if budget <= 0:
        return np.zeros_like(h), np.inf

    def spend(mu: float) -> float:
        return float(np.sum(weights * powers(mu)))

    hi = 1.0
    while spend(hi) > budget:
        hi *= 2.0
    lo = hi / 2.0
    while spend(lo) < budget:
        lo /= 2.0
    # spend is continuous and nonincreasing in mu on [lo, hi]
    while hi - lo > rel_tol * hi:
        mid = 0.5 * (lo + hi)
        if spend(mid) > budget:
            lo = mid
        else:
            hi = mid
    mu = 0.5 * (lo + hi)
    return powers(mu), mu
