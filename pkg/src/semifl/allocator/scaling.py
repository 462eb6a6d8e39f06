"""Closed-form normalizing / power-scaling factors for both regions.

Given the other blocks, the scaling subproblem separates: the gradient pair
(nu, omega) has a one-variable closed form at the lower boundary of its
feasible interval, and each data normalization zeta_k sits at the smallest
value that still makes the data path latency-tight at the round budget.
"""

from __future__ import annotations

import numpy as np

from ..aircomp import ScalingFactors, exp2_m1, log2_1p
from ..errors import GapInfeasible, InfeasibleMse, LatencyInfeasible, PowerBudgetExceeded
from ..netmodel import NetworkConfig
from .constants import ScalingConstants, scaling_constants, stable_scaling_constants
from .types import RegionThresholds

_REL_TOL = 1e-12


def _zeta_closed_form(cfg: NetworkConfig, sc: ScalingConstants,
                      T_E: float, T_max: float) -> np.ndarray:
    """zeta_k making each device's data path finish exactly at T_max."""
    slack = T_max - T_E
    zeta = np.zeros_like(sc.C3_k)
    active = sc.C3_k > 0
    if not np.any(active):
        return zeta
    if slack <= 0:
        raise LatencyInfeasible(
            "edge compute already exceeds the round budget, no time left to upload",
            T_E=T_E, T_max=T_max)
    exponent = sc.C3_k[active] / slack
    # compare in the exponent domain first so 2**exponent cannot overflow
    cap_exponent = log2_1p(sc.C4_k[active] / cfg.sigma2)
    if np.any(exponent > cap_exponent * (1.0 + _REL_TOL)):
        k_bad = int(np.flatnonzero(active)[np.argmax(exponent - cap_exponent)])
        raise PowerBudgetExceeded(
            "required data-uplink power exceeds the device cap",
            device=k_bad, T_max=T_max, T_E=T_E)
    zeta[active] = cfg.sigma2 * exp2_m1(exponent)
    np.minimum(zeta, sc.C4_k, out=zeta)    # guard rounding just past the cap
    return zeta


def _check_compute_path(T_F_k: np.ndarray, T_G: float, T_max: float) -> None:
    worst = float(np.max(np.atleast_1d(T_F_k))) + T_G
    if worst > T_max * (1.0 + 1e-9):
        raise LatencyInfeasible(
            "local compute plus gradient upload exceeds the round budget",
            worst_path=worst, T_max=T_max)


def solve_scaling_ns(cfg: NetworkConfig, thr: RegionThresholds,
                     g_grad: np.ndarray, g_data: np.ndarray, theta: np.ndarray,
                     T_E: float, T_F_k: np.ndarray, T_G: float,
                     ) -> tuple[ScalingFactors, float]:
    """Non-stable region closed forms.

    nu* = (K sigma2 / 2) / (K eps2 - (eps1 - 1)^2), omega* = eps1^2 nu*, which
    makes the aggregation MSE hit eps2 exactly; feasible iff
    (eps1 - 1)^2 < K eps2. Returns the factors and tau1* = T_max.
    """
    sc = scaling_constants(cfg, thr, g_grad, g_data, theta)
    denom = cfg.K * thr.eps2 - (thr.eps1 - 1.0) ** 2     # = -(C7 - 2 C6 + C6^2)
    if denom <= 0:
        raise InfeasibleMse(
            "amplitude-ratio target incompatible with the MSE threshold: "
            f"(eps1-1)^2 = {(thr.eps1 - 1.0) ** 2:.6g} >= K eps2 = {cfg.K * thr.eps2:.6g}",
            eps1=thr.eps1, eps2=thr.eps2, K=cfg.K)
    nu = sc.C8 / denom
    omega = thr.eps1 ** 2 * nu
    if omega > sc.C5 * (1.0 + _REL_TOL):
        raise PowerBudgetExceeded(
            "gradient power scaling exceeds the weakest device's cap",
            omega=omega, C5=sc.C5)
    _check_compute_path(T_F_k, T_G, thr.T_max)
    zeta = _zeta_closed_form(cfg, sc, T_E, thr.T_max)
    return ScalingFactors(nu=nu, omega=omega, zeta_k=zeta), thr.T_max


def solve_scaling_s(cfg: NetworkConfig, thr: RegionThresholds,
                    g_grad: np.ndarray, g_data: np.ndarray, theta: np.ndarray,
                    T_E: float, T_F_k: np.ndarray, T_G: float,
                    gap_constants: tuple[float, float, float] | None = None,
                    ) -> tuple[ScalingFactors, float]:
    """Stable region closed forms with omega* = nu*.

    With gap constants (L, mu, A2) supplied, nu* = max(-C21/C20, sigma2/(2 eps4))
    so the optimality-gap bound and the MSE threshold are both respected; the
    larger branch is tight. Without them only the MSE branch is enforced.
    """
    sc = scaling_constants(cfg, thr, g_grad, g_data, theta)
    nu_mse = cfg.sigma2 / (2.0 * thr.eps4)               # = C8 / (1 - C22)
    if gap_constants is not None:
        L, mu, A2 = gap_constants
        st = stable_scaling_constants(cfg, thr, L, mu, A2)
        if st.C20 >= 0:
            raise GapInfeasible(
                "optimality-gap target below the noise-free floor: "
                f"C20 = {st.C20:.6g} >= 0", eps3=thr.eps3, L=L, mu=mu, A2=A2)
        nu = max(-st.C21 / st.C20, nu_mse)
    else:
        nu = nu_mse
    if nu > sc.C5 * (1.0 + _REL_TOL):
        raise PowerBudgetExceeded(
            "stable-region normalization exceeds the weakest device's power cap",
            nu=nu, C5=sc.C5)
    _check_compute_path(T_F_k, T_G, thr.T_max)
    zeta = _zeta_closed_form(cfg, sc, T_E, thr.T_max)
    return ScalingFactors(nu=nu, omega=nu, zeta_k=zeta), thr.T_max
