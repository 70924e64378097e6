"""Finite weighted fading ensembles.

A continuous joint fading distribution over (channel power gain h,
interference power) is discretized into a finite list of weighted states.
Every ensemble average used by the solvers is then an exact weighted sum,
which keeps all downstream optimization deterministic and testable.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ConfigError

_WEIGHT_TOL = 1e-9


@dataclass(frozen=True)
class DistributionSpec:
    """One marginal distribution: exponential or an explicit point-mass list.

    ``family`` is "exponential" (field ``mean`` > 0) or "point_masses"
    (field ``points`` as (value, weight) pairs with weights summing to 1).
    """

    family: str
    mean: float | None = None
    points: tuple[tuple[float, float], ...] | None = None

    def __post_init__(self):
        if self.family == "exponential":
            if self.mean is None or not self.mean > 0:
                raise ConfigError(f"exponential mean must be > 0, got {self.mean}")
        elif self.family == "point_masses":
            if not self.points:
                raise ConfigError("point_masses needs at least one (value, weight) pair")
            values = np.array([v for v, _ in self.points], dtype=float)
            weights = np.array([w for _, w in self.points], dtype=float)
            if np.any(values < 0):
                raise ConfigError("point-mass values must be >= 0")
            if np.any(weights <= 0):
                raise ConfigError("point-mass weights must be > 0")
            if abs(weights.sum() - 1.0) > 1e-12:
                raise ConfigError(f"point-mass weights sum to {weights.sum()!r}, expected 1")
        else:
            raise ConfigError(f"unknown distribution family {self.family!r}")

    @classmethod
    def exponential(cls, mean: float) -> "DistributionSpec":
        return cls(family="exponential", mean=float(mean))

    @classmethod
    def point_masses(cls, points) -> "DistributionSpec":
        return cls(family="point_masses",
                   points=tuple((float(v), float(w)) for v, w in points))

    def icdf(self, u: np.ndarray) -> np.ndarray:
        """Inverse CDF of the marginal, evaluated at uniforms u in [0, 1)."""
        if self.family == "exponential":
            return -self.mean * np.log1p(-u)
        values = np.array([v for v, _ in self.points], dtype=float)
        cum = np.cumsum([w for _, w in self.points])
        idx = np.searchsorted(cum, u, side="right")
        return values[np.minimum(idx, len(values) - 1)]


@dataclass(frozen=True)
class FadingEnsemble:
    """Weighted list of joint fading states (h, interference, weight).

    Weights are probabilities: they must sum to 1 within 1e-9. Instances are
    immutable (arrays are made read-only) and safe to share across threads.
    """

    h: np.ndarray
    intf: np.ndarray
    w: np.ndarray
    seed: int | None = None
    provenance: str = "explicit"

    def __post_init__(self):
        for name in ("h", "intf", "w"):
            arr = np.array(getattr(self, name), dtype=float)  # private copy
            arr.flags.writeable = False
            object.__setattr__(self, name, arr)
        if not (self.h.shape == self.intf.shape == self.w.shape) or self.h.ndim != 1:
            raise ConfigError("h, intf, w must be 1-D arrays of equal length")
        if self.h.size == 0:
            raise ConfigError("ensemble cannot be empty")
        if np.any(self.h < 0) or np.any(self.intf < 0):
            raise ConfigError("state values must be >= 0")
        if np.any(self.w <= 0):
            raise ConfigError("weights must be > 0")
        if abs(self.w.sum() - 1.0) > _WEIGHT_TOL:
            raise ConfigError(f"weights sum to {self.w.sum()!r}, expected 1 within {_WEIGHT_TOL}")

    def __len__(self) -> int:
        return self.h.size

    @classmethod
    def from_states(cls, states, seed: int | None = None) -> "FadingEnsemble":
        """Build an explicit ensemble from (h, interference, weight) triples."""
        arr = np.asarray(list(states), dtype=float)
        if arr.ndim != 2 or arr.shape[1] != 3:
            raise ConfigError("states must be (h, interference, weight) triples")
        return cls(h=arr[:, 0].copy(), intf=arr[:, 1].copy(), w=arr[:, 2].copy(),
                   seed=seed, provenance="explicit")


def sample_ensemble(spec_h: DistributionSpec, spec_intf: DistributionSpec,
                    n: int, seed: int) -> FadingEnsemble:
    """Draw n i.i.d. joint states from two independent marginals.

    Sampling is inverse-CDF over uniforms from numpy's counter-based Philox
    generator, so identical (spec, n, seed) inputs reproduce the ensemble
    bit-for-bit across platforms. All weights are 1/n.
    """
    if n < 1:
        raise ConfigError(f"n must be >= 1, got {n}")
    gen = np.random.Generator(np.random.Philox(key=seed))
    u = gen.random(2 * n)
    h = spec_h.icdf(u[:n])
    intf = spec_intf.icdf(u[n:])
    w = np.full(n, 1.0 / n)
    return FadingEnsemble(h=h, intf=intf, w=w, seed=seed,
                          provenance=f"sampled({spec_h.family},{spec_intf.family})")


def expectation(ensemble: FadingEnsemble, f) -> float:
    """Weighted ensemble average of a per-state function f(h, intf).

    f receives the full state arrays and must return a broadcastable array
    (scalars are fine). numpy's pairwise summation keeps the reduction order
    deterministic.
    """
    vals = np.asarray(f(ensemble.h, ensemble.intf), dtype=float)
    return float(np.sum(ensemble.w * vals))
