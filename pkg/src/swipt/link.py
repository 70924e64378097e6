"""Link-level domain types and the policy metric evaluator.

The receiver at each fading state either decodes (ID mode, rho = 1) or
harvests (EH mode, rho = 0); fractional rho means time sharing within the
block. All rates are natural-log units. Harvested energy follows the
convention that receiver noise power is excluded and the conversion
efficiency alpha scales the harvested amount.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import ConfigError
from .fading import FadingEnsemble


@dataclass(frozen=True)
class PowerBudget:
    """Average and peak transmit power limits (linear scale), p_avg <= p_peak."""

    p_avg: float
    p_peak: float

    def __post_init__(self):
        if not self.p_avg > 0 or not self.p_peak > 0:
            raise ConfigError("powers must be > 0")
        if self.p_avg > self.p_peak:
            raise ConfigError(f"p_avg={self.p_avg} exceeds p_peak={self.p_peak}")


@dataclass(frozen=True)
class LinkParams:
    """Noise power, target rate, and receiver-side energy constants.

    sigma2: receiver noise power (linear).
    r0: constant target rate in nats/s/Hz for the outage criterion.
    alpha: energy conversion efficiency in (0, 1].
    p_i: receiver circuit power drawn while in ID mode.
    q0: per-block sensing energy (charged unconditionally).
    """

    sigma2: float
    r0: float
    alpha: float = 1.0
    p_i: float = 0.0
    q0: float = 0.0

    def __post_init__(self):
        if not self.sigma2 > 0:
            raise ConfigError("sigma2 must be > 0")
        if not self.r0 > 0:
            raise ConfigError("r0 must be > 0")
        if not 0 < self.alpha <= 1:
            raise ConfigError("alpha must be in (0, 1]")
        if self.p_i < 0 or self.q0 < 0:
            raise ConfigError("p_i and q0 must be >= 0")


@dataclass(frozen=True)
class ModePolicy:
    """Per-state receiver mode fraction rho in [0,1] and transmit power p."""

    rho: np.ndarray
    p: np.ndarray

    def __post_init__(self):
        rho = np.atleast_1d(np.asarray(self.rho, dtype=float))
        p = np.atleast_1d(np.asarray(self.p, dtype=float))
        if rho.shape != p.shape:
            raise ValueError("rho and p must have the same length")
        if np.any(rho < -1e-12) or np.any(rho > 1 + 1e-12):
            raise ValueError("rho entries must lie in [0, 1]")
        if np.any(p < -1e-12):
            raise ValueError("powers must be >= 0")
        object.__setattr__(self, "rho", np.clip(rho, 0.0, 1.0))
        object.__setattr__(self, "p", np.maximum(p, 0.0))

    def __len__(self) -> int:
        return self.rho.size

    @classmethod
    def constant(cls, n: int, rho: float, p: float) -> "ModePolicy":
        return cls(rho=np.full(n, float(rho)), p=np.full(n, float(p)))

    def fractional_states(self, tol: float = 1e-12) -> np.ndarray:
        """Indices of states with rho strictly inside (0, 1)."""
        return np.nonzero((self.rho > tol) & (self.rho < 1 - tol))[0]


@dataclass(frozen=True)
class Metrics:
    """Aggregate policy outcomes.

    delta: non-outage probability, rate: ergodic rate (nats/s/Hz),
    q_avg: average harvested energy, p_used: average transmit power,
    q_net: q_avg minus receiver consumption (p_i * time in ID + q0).
    """

    delta: float
    rate: float
    q_avg: float
    p_used: float
    q_net: float


def rate_at(state, p: float, sigma2: float) -> float:
    """Mutual information log(1 + h p / (intf + sigma2)) of one state, in nats."""
    h, intf = state
    return float(np.log1p(h * p / (intf + sigma2)))


def energy_at(state, p: float, alpha: float = 1.0) -> float:
    """Energy alpha*(h p + intf) harvestable at one state (noise excluded)."""
    h, intf = state
    return float(alpha * (h * p + intf))


def outage_indicator(state, p: float, r0: float, sigma2: float) -> int:
    """1 iff the state supports rate r0 at power p (inclusive threshold)."""
    return int(rate_at(state, p, sigma2) >= r0)


def rate_vec(h, intf, p, sigma2: float) -> np.ndarray:
    """Vectorized rate_at over state arrays."""
    return np.log1p(h * np.asarray(p, dtype=float) / (intf + sigma2))


def nonoutage_vec(h, intf, p, r0: float, sigma2: float) -> np.ndarray:
    """Vectorized outage_indicator (as floats) over state arrays."""
    return (rate_vec(h, intf, p, sigma2) >= r0).astype(float)


def evaluate(ensemble: FadingEnsemble, policy: ModePolicy,
             budget: PowerBudget | None, params: LinkParams) -> Metrics:
    """Aggregate metrics of a policy on an ensemble (pure accounting).

    Fractional rho contributes fractionally to both the information-side
    quantities and the harvested energy. No feasibility constraints are
    checked here beyond the policy/ensemble shapes and, when a budget is
    given, the per-state peak-power domain of ModePolicy.
    """
    if len(policy) != len(ensemble):
        raise ValueError(f"policy has {len(policy)} entries for {len(ensemble)} states")
    if budget is not None and np.any(policy.p > budget.p_peak * (1 + 1e-9)):
        raise ValueError("policy power exceeds p_peak")
    w, rho, p = ensemble.w, policy.rho, policy.p
    rates = rate_vec(ensemble.h, ensemble.intf, p, params.sigma2)
    x = (rates >= params.r0).astype(float)
    q_states = params.alpha * (ensemble.h * p + ensemble.intf)
    delta = float(np.sum(w * rho * x))
    rate = float(np.sum(w * rho * rates))
    q_avg = float(np.sum(w * (1.0 - rho) * q_states))
    p_used = float(np.sum(w * p))
    q_net = q_avg - params.p_i * float(np.sum(w * rho)) - params.q0
    return Metrics(delta=delta, rate=rate, q_avg=q_avg, p_used=p_used, q_net=q_net)


def db_to_linear(db: float) -> float:
    """Convert a power value in dB to linear scale."""
    return math.pow(10.0, db / 10.0)
