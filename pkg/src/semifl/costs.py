"""Per-round latency and energy accounting.

One SemiFL round has four phases: gradient uploading (AirComp blocks), data
uploading (intermediate outputs on dedicated bandwidth), local computing
(device backprop), and edge computing (BS deep-layer training). The round
latency is the max over the two pipelines per device; energy adds up.
Shallow-layer forward passes for the uploaded data add negligible latency
and are not modeled.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .aircomp import Beamformers, ScalingFactors, uplink_rate
from .errors import ConfigError, InfeasibleError, UnservableDevice
from .netmodel import ChannelRealization, NetworkConfig


@dataclass
class Allocation:
    """One round's decision variables."""

    theta_k: np.ndarray             # SL data ratio per device, in [0, 1]
    fhat_k: np.ndarray              # device CPU frequencies (Hz)
    ftilde: float                   # BS CPU frequency (Hz)
    sf: ScalingFactors
    bf: Beamformers

    def __post_init__(self):
        self.theta_k = np.atleast_1d(np.asarray(self.theta_k, dtype=float))
        self.fhat_k = np.atleast_1d(np.asarray(self.fhat_k, dtype=float))
        if np.any(self.theta_k < -1e-12) or np.any(self.theta_k > 1 + 1e-12):
            raise ConfigError("theta_k must lie in [0, 1]")
        if np.any(self.fhat_k < 0) or self.ftilde < 0:
            raise ConfigError("CPU frequencies must be >= 0")
        self.theta_k = np.clip(self.theta_k, 0.0, 1.0)


@dataclass
class CostBreakdown:
    """Latency and energy components of one round plus their totals."""

    T_G: float
    T_D_k: np.ndarray
    T_F_k: np.ndarray
    T_E: float
    E_G_k: np.ndarray
    E_D_k: np.ndarray
    E_F_k: np.ndarray
    E_E: float
    T_all: float = field(init=False)
    E_all: float = field(init=False)

    def __post_init__(self):
        self.T_all = total_latency(self.T_D_k, self.T_E, self.T_F_k, self.T_G)
        self.E_all = total_energy(self.E_G_k, self.E_D_k, self.E_F_k, self.E_E)

    @property
    def E_uplink(self) -> float:
        return float(np.sum(self.E_G_k) + np.sum(self.E_D_k))

    @property
    def E_compute(self) -> float:
        return float(np.sum(self.E_F_k) + self.E_E)


def latency_gradient(Q: int, M: int, T_s: float) -> float:
    """ceil(Q/M) AirComp blocks of duration T_s each."""
    if Q < 1 or M < 1:
        raise ConfigError("Q and M must be >= 1")
    return math.ceil(Q / M) * T_s


def energy_gradient_upload(omega: float, b: np.ndarray, h: np.ndarray,
                           Q: int, M: int, T_s: float, device: int = 0) -> float:
    """|p^G|^2 * T_G = omega ceil(Q/M) T_s / |b^H h|^2."""
    gain = abs(np.vdot(b, h)) ** 2
    if gain < 1e-12:
        raise UnservableDevice(device, gain)
    return omega * latency_gradient(Q, M, T_s) / gain


def latency_data(D: int, theta: float, Cbar: float, rate: float) -> float:
    """Time to push D*theta intermediate outputs of Cbar bits at ``rate``."""
    bits = D * theta * Cbar
    if bits == 0:
        return 0.0
    if rate <= 0:
        raise InfeasibleError("zero uplink rate with nonzero data to upload",
                              theta=theta, rate=rate)
    return bits / rate


def energy_data(zeta: float, v: np.ndarray, h: np.ndarray,
                D: int, theta: float, Cbar: float, rate: float,
                device: int = 0) -> float:
    """|p^D|^2 * T_D = zeta D theta Cbar / (|v^H h|^2 rate)."""
    if theta == 0 or zeta == 0:
        return 0.0
    gain = abs(np.vdot(v, h)) ** 2
    if gain < 1e-12:
        raise UnservableDevice(device, gain)
    if rate <= 0:
        raise InfeasibleError("zero uplink rate with nonzero data to upload",
                              theta=theta, rate=rate)
    return zeta * D * theta * Cbar / (gain * rate)


def latency_local(D: int, theta: float, Chat: float, fhat: float) -> float:
    """Backprop time for the (1-theta) D retained samples."""
    work = D * (1.0 - theta) * Chat
    if work == 0:
        return 0.0
    if fhat <= 0:
        raise InfeasibleError("zero device CPU frequency with local work pending",
                              theta=theta)
    return work / fhat


def energy_local(D: int, theta: float, Chat: float, kappa_hat: float,
                 fhat: float) -> float:
    return D * (1.0 - theta) * Chat * kappa_hat * fhat ** 2


def latency_edge(D: int, sum_theta: float, Ctilde: float, ftilde: float) -> float:
    """BS time to process D * sum_theta intermediate outputs."""
    work = D * sum_theta * Ctilde
    if work == 0:
        return 0.0
    if ftilde <= 0:
        raise InfeasibleError("zero BS CPU frequency with edge work pending",
                              sum_theta=sum_theta)
    return work / ftilde


def energy_edge(D: int, sum_theta: float, Ctilde: float, kappa_tilde: float,
                ftilde: float) -> float:
    return D * sum_theta * Ctilde * kappa_tilde * ftilde ** 2


def total_latency(T_D_k, T_E: float, T_F_k, T_G: float) -> float:
    """Slowest of the data pipeline (upload then edge compute) and the FL
    pipeline (local compute then gradient upload), over all devices."""
    T_D_k = np.atleast_1d(T_D_k)
    T_F_k = np.atleast_1d(T_F_k)
    return float(max(np.max(T_D_k + T_E), np.max(T_F_k + T_G)))


def total_energy(E_G_k, E_D_k, E_F_k, E_E: float) -> float:
    return float(np.sum(E_G_k) + np.sum(E_D_k) + np.sum(E_F_k) + E_E)


def compute_costs(cfg: NetworkConfig, ch: ChannelRealization,
                  alloc: Allocation) -> CostBreakdown:
    """Assemble the full per-round cost breakdown for an allocation."""
    K = cfg.K
    theta = alloc.theta_k
    sf, bf = alloc.sf, alloc.bf

    T_G = latency_gradient(cfg.Q, cfg.M, cfg.T_s)
    rates = np.array([uplink_rate(sf.zeta_k[k], cfg.sigma2, cfg.B) for k in range(K)])

    T_D = np.array([latency_data(cfg.D, theta[k], cfg.Cbar, rates[k]) for k in range(K)])
    T_F = np.array([latency_local(cfg.D, theta[k], cfg.Chat_k[k], alloc.fhat_k[k])
                    for k in range(K)])
    T_E = latency_edge(cfg.D, float(np.sum(theta)), cfg.Ctilde, alloc.ftilde)

    E_G = np.array([energy_gradient_upload(sf.omega, bf.b, ch.hG[k], cfg.Q, cfg.M,
                                           cfg.T_s, device=k) for k in range(K)])
    E_D = np.array([energy_data(sf.zeta_k[k], bf.v_k[k], ch.hD[k], cfg.D, theta[k],
                                cfg.Cbar, rates[k], device=k) for k in range(K)])
    E_F = np.array([energy_local(cfg.D, theta[k], cfg.Chat_k[k], cfg.kappa_hat,
                                 alloc.fhat_k[k]) for k in range(K)])
    E_E = energy_edge(cfg.D, float(np.sum(theta)), cfg.Ctilde, cfg.kappa_tilde,
                      alloc.ftilde)

    return CostBreakdown(T_G=T_G, T_D_k=T_D, T_F_k=T_F, T_E=T_E,
                         E_G_k=E_G, E_D_k=E_D, E_F_k=E_F, E_E=E_E)
