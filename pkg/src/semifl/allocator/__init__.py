"""Per-round resource allocation: closed-form scaling factors, DC-programming
beamformers, KKT CPU frequencies, LP data allocation, and the block-coordinate
descent drivers for the non-stable and stable training regions."""

from .types import RegionThresholds, SolverOptions
from .constants import (
    ScalingConstants, BeamformerWeights, CpuConstants, DataAllocConstants,
    scaling_constants, beamformer_weights, cpu_constants, data_alloc_constants,
)
from .scaling import solve_scaling_ns, solve_scaling_s
from .beamformers import (
    build_H_matrices, real_composite, composite_to_complex,
    dc_beamformers, sdr_beamformers,
)
from .compute import solve_cpu, solve_data_allocation
from .bcd import run_bcd, baseline_allocation, initial_allocation

__all__ = [
    "RegionThresholds", "SolverOptions",
    "ScalingConstants", "BeamformerWeights", "CpuConstants", "DataAllocConstants",
    "scaling_constants", "beamformer_weights", "cpu_constants", "data_alloc_constants",
    "solve_scaling_ns", "solve_scaling_s",
    "build_H_matrices", "real_composite", "composite_to_complex",
    "dc_beamformers", "sdr_beamformers",
    "solve_cpu", "solve_data_allocation",
    "run_bcd", "baseline_allocation", "initial_allocation",
]
