"""SemiFL: semi-federated learning with over-the-air gradient aggregation.

A simulation library and experiment CLI for hybrid federated/split learning
where local gradients are aggregated analogically over the uplink and the
resulting distortion is steered on purpose: amplified while training is far
from convergence, suppressed once it stabilizes. Includes the closed-form and
DC-programming resource allocators that minimize per-round energy under
latency, power, and distortion constraints, and evaluators for the associated
convergence bounds.
"""

__version__ = "0.1.0"

from . import (aircomp, allocator, costs, data, errors, learners, netmodel,
               theory, training)  # noqa: F401
from .aircomp import (Beamformers, NormalizationStats, ScalingFactors,
                      aggregate_over_air, denormalize_aggregate,
                      mse_closed_form, normalize_gradient, uplink_rate)
from .allocator import (RegionThresholds, SolverOptions, baseline_allocation,
                        dc_beamformers, run_bcd, sdr_beamformers, solve_cpu,
                        solve_data_allocation, solve_scaling_ns, solve_scaling_s)
from .config import ExperimentConfig, config_from_dict, load_config
from .costs import Allocation, CostBreakdown, compute_costs
from .data import DataPartition, heterogeneity_delta, partition_data
from .learners import LogisticLearner, MlpLearner, QuadraticLearner, make_learner
from .netmodel import (ChannelRealization, NetworkConfig, NoiseModel,
                       apply_csi_error, dbm_to_watts, sample_channels,
                       sample_noise)
from .training import (ModelSplit, RegionPolicy, RoundRecord, SemiFLState,
                       detect_region, run_semifedavg, run_semifl)

__all__ = [
    "Beamformers", "NormalizationStats", "ScalingFactors", "aggregate_over_air",
    "denormalize_aggregate", "mse_closed_form", "normalize_gradient",
    "uplink_rate", "RegionThresholds", "SolverOptions", "baseline_allocation",
    "dc_beamformers", "run_bcd", "sdr_beamformers", "solve_cpu",
    "solve_data_allocation", "solve_scaling_ns", "solve_scaling_s",
    "ExperimentConfig", "config_from_dict", "load_config", "Allocation",
    "CostBreakdown", "compute_costs", "DataPartition", "heterogeneity_delta",
    "partition_data", "LogisticLearner", "MlpLearner", "QuadraticLearner",
    "make_learner", "ChannelRealization", "NetworkConfig", "NoiseModel",
    "apply_csi_error", "dbm_to_watts", "sample_channels", "sample_noise",
    "ModelSplit", "RegionPolicy", "RoundRecord", "SemiFLState",
    "detect_region", "run_semifedavg", "run_semifl",
]
