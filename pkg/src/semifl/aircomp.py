"""Over-the-air gradient aggregation and data-uplink signal model.

Devices invert their own effective channel (transmit coefficient coupled to
the receive beamformer), so after beamforming every device contributes the
same amplitude sqrt(omega). The receiver divides by sqrt(nu) and keeps the
real part, which leaves two distortion knobs: the amplitude ratio
sqrt(omega/nu) on the ideal average and additive real noise of variance
sigma2 / (2 nu) per entry.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ConfigError, UnservableDevice
from .netmodel import ChannelRealization, NoiseModel, sample_noise

DEGENERATE_GAIN = 1e-12   # |b^H h|^2 below this means channel inversion overflows


@dataclass
class ScalingFactors:
    """Receiver normalization nu, transmit power scaling omega, and the
    per-device data-uplink normalizations zeta_k."""

    nu: float
    omega: float
    zeta_k: np.ndarray

    def __post_init__(self):
        self.zeta_k = np.atleast_1d(np.asarray(self.zeta_k, dtype=float))
        if not self.nu > 0:
            raise ConfigError(f"nu must be > 0, got {self.nu}")
        if self.omega < 0 or np.any(self.zeta_k < 0):
            raise ConfigError("omega and zeta_k must be >= 0")

    @property
    def amplitude_ratio(self) -> float:
        return float(np.sqrt(self.omega / self.nu))


@dataclass
class Beamformers:
    """Unit-norm receive beamformers: ``b`` for gradient aggregation and one
    ``v_k`` per device for data uplink."""

    b: np.ndarray                   # (N_r,)
    v_k: np.ndarray                 # (K, N_r)

    def __post_init__(self):
        self.b = np.asarray(self.b, dtype=complex)
        self.v_k = np.atleast_2d(np.asarray(self.v_k, dtype=complex))
        if abs(np.linalg.norm(self.b) - 1.0) > 1e-9:
            raise ConfigError("b must be unit norm")
        if np.any(np.abs(np.linalg.norm(self.v_k, axis=1) - 1.0) > 1e-9):
            raise ConfigError("every v_k must be unit norm")


@dataclass
class NormalizationStats:
    """Entrywise mean/std of one device's raw gradient, reported over the
    control side-channel for de-normalization at the BS."""

    mean: float
    std: float
    constant: bool = False          # true when the raw vector had zero variance


def tx_power_gradient(b: np.ndarray, h: np.ndarray, omega: float,
                      device: int = 0) -> complex:
    """Transmit coefficient sqrt(omega) (b^H h)* / |b^H h|^2.

    The coupling cancels the channel so the effective post-beamforming gain
    is exactly sqrt(omega).
    """
    inner = np.vdot(b, h)           # b^H h
    gain = abs(inner) ** 2
    if gain < DEGENERATE_GAIN:
        raise UnservableDevice(device, gain)
    return np.sqrt(omega) * np.conj(inner) / gain


def mse_closed_form(K: int, omega: float, nu: float, sigma2: float) -> float:
    """Per-entry distortion of the aggregated gradient:
    (1/K)(sqrt(omega/nu) - 1)^2 + sigma2/(2 nu)."""
    if nu <= 0:
        raise ConfigError(f"nu must be > 0, got {nu}")
    if K < 1:
        raise ConfigError("K must be >= 1")
    ratio = np.sqrt(omega / nu)
    return (ratio - 1.0) ** 2 / K + sigma2 / (2.0 * nu)


LN2 = float(np.log(2.0))


def log2_1p(x):
    """log2(1 + x) without precision loss for tiny x."""
    return np.log1p(x) / LN2


def exp2_m1(x):
    """2**x - 1 without cancellation for tiny x."""
    return np.expm1(x * LN2)


def uplink_rate(zeta: float, sigma2: float, B: float) -> float:
    """Achievable data-uplink rate B log2(1 + zeta/sigma2) in bits/s."""
    if zeta < 0 or sigma2 <= 0 or B <= 0:
        raise ConfigError("uplink_rate requires zeta >= 0, sigma2 > 0, B > 0")
    return B * log2_1p(zeta / sigma2)


def normalize_gradient(g: np.ndarray):
    """Zero-mean unit-variance rescaling of one raw gradient vector.

    A constant vector cannot be normalized; it maps to the zero vector with
    ``stats.constant`` set so de-normalization can still reproduce it.
    """
    g = np.asarray(g, dtype=float)
    if not np.all(np.isfinite(g)):
        raise ConfigError("gradient contains non-finite entries")
    mean = float(np.mean(g))
    std = float(np.std(g))
    if std == 0.0:
        return np.zeros_like(g), NormalizationStats(mean, 0.0, constant=True)
    return (g - mean) / std, NormalizationStats(mean, std)


def denormalize_aggregate(agg: np.ndarray, stats: list[NormalizationStats]) -> np.ndarray:
    """Rescale an aggregated normalized gradient back to raw-gradient units.

    Uses the mean of the device stds (and means), so amplitude distortion on
    the normalized aggregate carries through as a learning-rate multiplier
    rather than being cancelled.
    """
    if not stats:
        raise ConfigError("stats must be non-empty")
    mean_std = float(np.mean([s.std for s in stats]))
    mean_mean = float(np.mean([s.mean for s in stats]))
    return np.asarray(agg, dtype=float) * mean_std + mean_mean


def aggregate_over_air(ghat_k: np.ndarray, bf: Beamformers, ch: ChannelRealization,
                       sf: ScalingFactors, noise: NoiseModel | None,
                       rng: np.random.Generator) -> np.ndarray:
    """Aggregate K normalized gradient signals through the analog uplink.

    Transmit coefficients are computed from the known (possibly estimated)
    channels in ``ch.hG``; propagation uses ``ch.hG_true`` when present, which
    is where imperfect-CSI residual distortion enters. ``noise=None`` models a
    noiseless channel. Entries are processed in blocks only for memory: block
    boundaries have no numerical effect.
    """
    ghat_k = np.atleast_2d(np.asarray(ghat_k, dtype=float))
    K, Q = ghat_k.shape
    b = bf.b
    sqrt_nu = np.sqrt(sf.nu)

    # effective complex gain per device: (b^H h_true) p_k ; equals sqrt(omega)
    # exactly under perfect CSI
    gains = np.empty(K, dtype=complex)
    for k in range(K):
        p_k = tx_power_gradient(b, ch.hG[k], sf.omega, device=k)
        gains[k] = np.vdot(b, ch.hG_prop[k]) * p_k

    out = np.empty(Q, dtype=float)
    chunk = max(1, int(4e6 // max(len(b), 1)))
    for start in range(0, Q, chunk):
        sl = slice(start, min(start + chunk, Q))
        signal = (gains[:, None] * ghat_k[:, sl]).sum(axis=0) / K
        if noise is not None and noise.kind != "none":
            n = len(b)
            m = sl.stop - sl.start
            nmat = sample_noise(noise, n * m, rng).reshape(m, n)
            noise_proj = nmat @ np.conj(b)
        else:
            noise_proj = 0.0
        out[sl] = np.real(signal + noise_proj) / sqrt_nu
    return out
