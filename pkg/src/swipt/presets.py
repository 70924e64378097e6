"""Canned experiment configurations for the standard evaluation setups.

All presets share the same fading model (independent exponential channel
gain with mean 1 and interference with mean 3), noise power 0.5, and peak
power 20. Sweep presets trace region boundaries; compare presets pit the
optimal switching against the heuristic rules over a transmit-power grid.
"""

from __future__ import annotations

from .errors import ConfigError
from .experiment import CompareSpec, ExperimentConfig
from .fading import DistributionSpec


def _base(**overrides) -> ExperimentConfig:
    defaults = dict(
        problem="oe_no_csit",
        spec_h=DistributionSpec.exponential(1.0),
        spec_intf=DistributionSpec.exponential(3.0),
        n_samples=100_000,
        seed=42,
        sigma2=0.5,
        r0=0.3,
        p_avg=5.0,
        p_peak=20.0,
    )
    defaults.update(overrides)
    return ExperimentConfig(**defaults)


def _compare_grid() -> CompareSpec:
    return CompareSpec(q_bar=2.0, p_db=tuple(float(d) for d in range(13)))


def preset_configs(name: str) -> list[ExperimentConfig]:
    """Configs of a named preset, in the order their CSVs are written."""
    if name == "fig3a":
        return [_base(problem="oe_no_csit", label="oe_no_csit"),
                _base(problem="oe_csit", label="oe_csit")]
    if name == "fig3b":
        return [_base(problem="re_no_csit", label="re_no_csit"),
                _base(problem="re_csit", label="re_csit")]
    if name == "fig8":
        return [_base(problem="oe_no_csit", label="compare_oe_no_csit",
                      r0=0.2, mode="compare", compare=_compare_grid())]
    if name == "fig9":
        return [_base(problem="re_csit", label="compare_re_csit",
                      r0=0.2, mode="compare", compare=_compare_grid())]
    if name == "fig12":
        return [_base(problem="oe_net", label=f"oe_net_pi{int(p_i)}", p_i=p_i)
                for p_i in (0.0, 1.0, 4.0)]
    raise ConfigError(f"unknown preset {name!r}; "
                      "choose fig3a, fig3b, fig8, fig9, or fig12")


PRESET_NAMES = ("fig3a", "fig3b", "fig8", "fig9", "fig12")
