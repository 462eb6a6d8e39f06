"""Derived constants of the decomposed subproblems.

Every constant is a plain function of the current blocks (channel gains after
beamforming, data ratios, scaling factors, CPU frequencies), so each dataclass
can be recomputed from scratch at any time; stored and recomputed values agree
to 1e-12 relative by construction.

Rates use base-2 logarithms throughout so that objective terms written with
these constants reproduce the energy formulas exactly.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from ..aircomp import log2_1p
from ..netmodel import NetworkConfig
from .types import RegionThresholds


@dataclass(frozen=True)
class ScalingConstants:
    """Constants of the normalizing/power-scaling subproblem."""

    C1_k: np.ndarray    # data-energy weight: D Cbar theta_k / (|v^H hD|^2 B)
    C2_k: np.ndarray    # gradient-energy weight: ceil(Q/M) T_s / |b^H hG|^2
    C3_k: np.ndarray    # per-device bits over bandwidth: D Cbar theta_k / B
    C4_k: np.ndarray    # data power cap: p_max |v^H hD|^2
    C5: float           # gradient power cap: p_max min_k |b^H hG|^2
    C6: float           # amplitude-ratio target eps1
    C7: float           # 1 - K eps2
    C8: float           # K sigma2 / 2


@dataclass(frozen=True)
class StableScalingConstants:
    """Extra constants of the stable-region scaling subproblem."""

    C20: float          # A^2 - eps3 mu (4 mu - L) / L ; gap constraint slope
    C21: float          # Q sigma2 / 2
    C22: float          # 1 - eps4 K


@dataclass(frozen=True)
class BeamformerWeights:
    """Objective weights of the beamformer subproblem."""

    C9_k: np.ndarray    # D Cbar theta_k zeta_k / (B log2(1 + zeta_k/sigma2))
    C10: float          # ceil(Q/M) T_s omega


@dataclass(frozen=True)
class CpuConstants:
    """Constants of the CPU-frequency subproblem."""

    C11_k: np.ndarray   # C13_k * kappa_hat
    C12: float          # C14 * kappa_tilde
    C13_k: np.ndarray   # D (1 - theta_k) Chat_k
    C14: float          # D Ctilde sum_k theta_k


@dataclass(frozen=True)
class DataAllocConstants:
    """Constants of the data-allocation linear program."""

    C15_k: np.ndarray   # marginal energy per unit theta_k
    C16_k: np.ndarray   # data latency per unit theta_k
    C17: float          # edge latency per unit of summed theta
    C18_k: np.ndarray   # local latency per unit (1 - theta_k)
    C19: float          # theta_max (non-stable upper box)
    C23: float          # theta_min (stable lower box)


def grad_gains(b: np.ndarray, hG: np.ndarray) -> np.ndarray:
    """|b^H hG_k|^2 for every device."""
    return np.abs(hG @ np.conj(b)) ** 2


def data_gains(v_k: np.ndarray, hD: np.ndarray) -> np.ndarray:
    """|v_k^H hD_k|^2 for every device."""
    return np.abs(np.sum(np.conj(v_k) * hD, axis=1)) ** 2


def scaling_constants(cfg: NetworkConfig, thr: RegionThresholds,
                      g_grad: np.ndarray, g_data: np.ndarray,
                      theta: np.ndarray) -> ScalingConstants:
    blocks = math.ceil(cfg.Q / cfg.M)
    return ScalingConstants(
        C1_k=cfg.D * cfg.Cbar * theta / (g_data * cfg.B),
        C2_k=blocks * cfg.T_s / g_grad,
        C3_k=cfg.D * cfg.Cbar * theta / cfg.B,
        C4_k=cfg.p_max * g_data,
        C5=cfg.p_max * float(np.min(g_grad)),
        C6=thr.eps1,
        C7=1.0 - cfg.K * thr.eps2,
        C8=cfg.K * cfg.sigma2 / 2.0,
    )


def stable_scaling_constants(cfg: NetworkConfig, thr: RegionThresholds,
                             L: float, mu: float, A2: float) -> StableScalingConstants:
    return StableScalingConstants(
        C20=A2 - thr.eps3 * mu * (4.0 * mu - L) / L,
        C21=cfg.Q * cfg.sigma2 / 2.0,
        C22=1.0 - thr.eps4 * cfg.K,
    )


def beamformer_weights(cfg: NetworkConfig, theta: np.ndarray,
                       zeta_k: np.ndarray, omega: float) -> BeamformerWeights:
    blocks = math.ceil(cfg.Q / cfg.M)
    log_term = log2_1p(zeta_k / cfg.sigma2)
    c9 = np.where(log_term > 0,
                  cfg.D * cfg.Cbar * theta * zeta_k / (cfg.B * np.where(log_term > 0, log_term, 1.0)),
                  0.0)
    return BeamformerWeights(C9_k=c9, C10=blocks * cfg.T_s * omega)


def cpu_constants(cfg: NetworkConfig, theta: np.ndarray) -> CpuConstants:
    c13 = cfg.D * (1.0 - theta) * cfg.Chat_k
    c14 = cfg.D * cfg.Ctilde * float(np.sum(theta))
    return CpuConstants(C11_k=c13 * cfg.kappa_hat, C12=c14 * cfg.kappa_tilde,
                        C13_k=c13, C14=c14)


def data_alloc_constants(cfg: NetworkConfig, thr: RegionThresholds,
                         g_data: np.ndarray, zeta_k: np.ndarray,
                         fhat_k: np.ndarray, ftilde: float) -> DataAllocConstants:
    log_term = log2_1p(zeta_k / cfg.sigma2)
    c16 = np.where(log_term > 0,
                   cfg.D * cfg.Cbar / (cfg.B * np.where(log_term > 0, log_term, 1.0)),
                   np.inf)
    c17 = cfg.Ctilde * cfg.D / ftilde if ftilde > 0 else np.inf
    c18 = np.where(fhat_k > 0, cfg.Chat_k * cfg.D / np.where(fhat_k > 0, fhat_k, 1.0), np.inf)
    # zeta == 0 means the device cannot upload at all; the LP pins theta_k = 0
    # there, so its (otherwise 0 * inf) data-energy term is defined as zero.
    data_term = np.where(zeta_k > 0, zeta_k * np.where(np.isfinite(c16), c16, 0.0) / g_data, 0.0)
    c15 = (data_term
           - cfg.D * cfg.Chat_k * cfg.kappa_hat * fhat_k ** 2
           + cfg.D * cfg.Ctilde * cfg.kappa_tilde * ftilde ** 2)
    return DataAllocConstants(C15_k=c15, C16_k=c16, C17=c17, C18_k=c18,
                              C19=thr.theta_max, C23=thr.theta_min)
