"""Threshold and solver-option containers for the allocation problems."""

from __future__ import annotations

from dataclasses import dataclass

from ..errors import ConfigError


@dataclass
class RegionThresholds:
    """Targets governing the two-region distortion scheme.

    ``eps1``: amplitude-ratio target enforced in the non-stable region
    (>= 1; equal to 1 turns amplification off). ``eps2``/``eps4``: MSE
    ceilings for the non-stable and stable regions, with eps4 << eps2.
    ``eps3``: cap on the asymptotic optimality gap in the stable region.
    ``T_max``: per-round latency budget.
    """

    eps1: float = 5.0
    eps2: float = 2.0
    eps3: float = 0.8
    eps4: float = 0.01
    theta_max: float = 0.3
    theta_min: float = 0.2
    T_max: float = 600.0

    def __post_init__(self):
        if self.eps1 < 1.0:
            raise ConfigError(f"eps1 must be >= 1, got {self.eps1}")
        for name in ("eps2", "eps3", "eps4", "T_max"):
            if not getattr(self, name) > 0:
                raise ConfigError(f"{name} must be > 0")
        if self.eps4 >= self.eps2:
            raise ConfigError("eps4 must be smaller than eps2")
        if not (0 < self.theta_min <= self.theta_max < 1):
            raise ConfigError("need 0 < theta_min <= theta_max < 1")


@dataclass
class SolverOptions:
    """Iteration budgets and tolerances for the DC / BCD solvers."""

    beta: float = 1.0               # DC penalty factor (scaled by objective size)
    dc_max_iter: int = 30           # DC linearization rounds per beamformer solve
    bcd_max_iter: int = 8           # outer block-coordinate cycles
    inner_max_iter: int = 400       # projected-gradient steps per convex subproblem
    tol_obj: float = 1e-7           # relative objective convergence
    tol_rank: float = 1e-6          # admissible trace - spectral-norm gap
    inner_tol: float = 1e-11        # relative tolerance of the inner solver
    lp_tol: float = 1e-9

    def __post_init__(self):
        if self.beta <= 0:
            raise ConfigError("beta must be > 0")
        for name in ("dc_max_iter", "bcd_max_iter", "inner_max_iter"):
            if getattr(self, name) < 1:
                raise ConfigError(f"{name} must be >= 1")
        for name in ("tol_obj", "tol_rank", "inner_tol", "lp_tol"):
            if not getattr(self, name) > 0:
                raise ConfigError(f"{name} must be > 0")
