"""Trade-off solvers for wireless information transfer vs. energy harvesting.

A point-to-point fading link with a time-switching receiver: at every fading
state the receiver either decodes or harvests energy. This package computes
the optimal switching (and, with transmitter CSI, power control) that traces
the outage-energy and rate-energy region boundaries, plus heuristic baseline
rules and an experiment CLI.
"""

from .baselines import (BaselineSpec, baseline_with_csit_power,
                        interference_policy, periodic_policy, sinr_policy)
from .duals import (Branches, DualPoint, DualSolution, bisect_lambda,
                    ellipsoid_duals, recover_primal)
from .errors import (ConfigError, ConvergenceError, DegenerateCaseError,
                     InfeasibleTargetError, SwiptError)
from .experiment import (CompareSpec, ExperimentConfig, SweepSpec, TradeoffCurve,
                         compare_schemes, compute_vertices, load_config,
                         run_experiment, sweep_region)
from .fading import DistributionSpec, FadingEnsemble, expectation, sample_ensemble
from .link import (LinkParams, Metrics, ModePolicy, PowerBudget, db_to_linear,
                   energy_at, evaluate, outage_indicator, rate_at)
from .outage_energy import (OEThresholds, VertexPoints, oe_boundary_csit,
                            oe_boundary_no_csit, oe_mode_thresholds,
                            oe_rule_csit, oe_rule_no_csit, oe_vertices_csit,
                            oe_vertices_no_csit, qmin_closed_form)
from .presets import preset_configs
from .rate_energy import (REThresholds, h4_threshold, re_boundary_csit,
                          re_boundary_no_csit, re_rule_csit, re_rule_no_csit,
                          re_vertices, waterfill_power)
from .rx_energy import oe_boundary_net, oe_rule_net

__all__ = [name for name in dir() if not name.startswith("_")]
__version__ = "0.1.0"
