"""Physical-layer randomness: devices, fading channels, CSI errors, noise.

All sampling routines take an explicit ``numpy.random.Generator`` so that any
call is reproducible bit-for-bit from a seed. Internal units are SI (watts,
hertz, seconds); dBm values are converted once at config load.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ConfigError


def dbm_to_watts(x_dbm: float) -> float:
    """Convert a power level in dBm to watts."""
    if not np.isfinite(x_dbm):
        raise ConfigError(f"dBm value must be finite, got {x_dbm}")
    return 10.0 ** ((x_dbm - 30.0) / 10.0)


def watts_to_dbm(x_w: float) -> float:
    return 10.0 * np.log10(x_w) + 30.0


@dataclass
class NetworkConfig:
    """Static system parameters shared by every round.

    ``Chat_k`` holds one CPU cycles-per-sample figure per device; every other
    field is a scalar. ``Q1 + Q2 == Q`` is the shallow/deep model split.
    """

    K: int = 20                     # devices
    N_r: int = 16                   # BS antennas
    B: float = 10e3                 # bandwidth per data segment (Hz)
    sigma2: float = 1e-11           # noise power (W)
    p_max: float = 0.19952623149688797   # max device transmit power (W), 23 dBm
    T_s: float = 1e-3               # AirComp block duration (s)
    M: int = 14                     # signals per AirComp block
    D: int = 3000                   # samples per local dataset
    Cbar: float = 3200.0            # bits per intermediate output
    Chat_k: np.ndarray | None = None    # defaults to a linspace over [1.5e8, 2.8e8]
    Ctilde: float = 1e8             # cycles per intermediate output at BS
    kappa_hat: float = 1e-28
    kappa_tilde: float = 1e-28
    fhat_max: float = 1e9
    ftilde_max: float = 10e9
    Q: int = 14000
    Q1: int = 7000

    def __post_init__(self):
        if self.K < 1 or self.N_r < 1:
            raise ConfigError("K and N_r must be >= 1")
        if self.Chat_k is None:
            self.Chat_k = np.linspace(1.5e8, 2.8e8, self.K) if self.K > 1 else np.array([1.5e8])
        self.Chat_k = np.asarray(self.Chat_k, dtype=float)
        if self.Chat_k.shape != (self.K,):
            raise ConfigError(f"Chat_k must have shape ({self.K},)")
        positive = {
            "B": self.B, "sigma2": self.sigma2, "p_max": self.p_max,
            "T_s": self.T_s, "Ctilde": self.Ctilde, "kappa_hat": self.kappa_hat,
            "kappa_tilde": self.kappa_tilde, "fhat_max": self.fhat_max,
            "ftilde_max": self.ftilde_max, "Cbar": self.Cbar,
        }
        for name, value in positive.items():
            if not value > 0:
                raise ConfigError(f"{name} must be strictly positive, got {value}")
        if np.any(self.Chat_k <= 0):
            raise ConfigError("Chat_k entries must be strictly positive")
        if self.M < 1 or self.D < 1:
            raise ConfigError("M and D must be >= 1")
        if not (0 < self.Q1 < self.Q):
            raise ConfigError(f"model split requires 0 < Q1 < Q, got Q1={self.Q1}, Q={self.Q}")

    @property
    def Q2(self) -> int:
        return self.Q - self.Q1


@dataclass
class ChannelRealization:
    """Per-round uplink channels; one length-``N_r`` complex vector per device.

    ``hG``/``hD`` are what the transceiver works with (the estimates when CSI
    is imperfect). ``hG_true``/``hD_true`` are the propagation channels and
    stay ``None`` under perfect CSI.
    """

    hG: np.ndarray                  # (K, N_r) gradient uplink
    hD: np.ndarray                  # (K, N_r) data uplink
    hG_true: np.ndarray | None = None
    hD_true: np.ndarray | None = None

    def __post_init__(self):
        for name in ("hG", "hD", "hG_true", "hD_true"):
            v = getattr(self, name)
            if v is not None and not np.all(np.isfinite(v.view(float))):
                raise ConfigError(f"channel matrix {name} contains non-finite entries")

    @property
    def hG_prop(self) -> np.ndarray:
        """Channel actually traversed by gradient signals."""
        return self.hG if self.hG_true is None else self.hG_true

    @property
    def hD_prop(self) -> np.ndarray:
        return self.hD if self.hD_true is None else self.hD_true


@dataclass
class NoiseModel:
    """Receiver noise: circular Gaussian, symmetric alpha-stable, or none."""

    kind: str = "gaussian"          # "gaussian" | "alpha_stable" | "none"
    sigma2: float = 1e-11           # total complex-noise power (gaussian)
    alpha: float = 2.0              # stability index (alpha_stable)
    scale: float = 1.0              # per-component dispersion (alpha_stable)

    def __post_init__(self):
        if self.kind == "gaussian":
            if not self.sigma2 > 0:
                raise ConfigError("gaussian noise requires sigma2 > 0")
        elif self.kind == "alpha_stable":
            if not (0.0 < self.alpha <= 2.0):
                raise ConfigError("alpha_stable requires 0 < alpha <= 2")
            if not self.scale > 0:
                raise ConfigError("alpha_stable requires scale > 0")
        elif self.kind != "none":
            raise ConfigError(f"unknown noise kind {self.kind!r}")


def sample_channels(cfg: NetworkConfig, fading: str = "rayleigh",
                    rician_k: float = 10.0, rng: np.random.Generator | None = None,
                    ) -> ChannelRealization:
    """Draw i.i.d. per-round uplink channels.

    Rayleigh entries are CN(0, 1); Rician mixes a deterministic all-ones
    line-of-sight term with a scattered CN(0, 1) part so the per-entry second
    moment stays 1 for any ``rician_k``.
    """
    rng = np.random.default_rng() if rng is None else rng

    def draw():
        z = rng.standard_normal((cfg.K, cfg.N_r)) + 1j * rng.standard_normal((cfg.K, cfg.N_r))
        return z / np.sqrt(2.0)

    if fading == "rayleigh":
        return ChannelRealization(hG=draw(), hD=draw())
    if fading == "rician":
        if rician_k < 0:
            raise ConfigError("rician k-factor must be >= 0")
        los = np.ones((cfg.K, cfg.N_r), dtype=complex)
        w_los = np.sqrt(rician_k / (rician_k + 1.0))
        w_sc = np.sqrt(1.0 / (rician_k + 1.0))
        return ChannelRealization(hG=w_los * los + w_sc * draw(),
                                  hD=w_los * los + w_sc * draw())
    raise ConfigError(f"unknown fading model {fading!r}")


def apply_csi_error(h: np.ndarray, ratio: float = 1.0,
                    rng: np.random.Generator | None = None):
    """Attach a circular-Gaussian estimation error to an estimated channel.

    Returns ``(h_est, h_true)`` with ``h_true = h_est + dh`` and the error
    power scaled so E[||dh||^2 / ||h_est||^2] equals ``ratio`` (default 1,
    i.e. error as strong as the estimate).
    """
    rng = np.random.default_rng() if rng is None else rng
    if ratio < 0:
        raise ConfigError(f"CSI error ratio must be >= 0, got {ratio}")
    h = np.asarray(h, dtype=complex)
    if ratio == 0:
        return h, h.copy()
    n = h.shape[-1]
    per_entry = ratio * (np.linalg.norm(h, axis=-1, keepdims=True) ** 2) / n
    dh = (rng.standard_normal(h.shape) + 1j * rng.standard_normal(h.shape)) / np.sqrt(2.0)
    return h, h + np.sqrt(per_entry) * dh


def _sas_standard(alpha: float, size, rng: np.random.Generator) -> np.ndarray:
    """Standard symmetric alpha-stable variates via the Chambers-Mallows-Stuck
    construction (scale 1, characteristic function exp(-|t|^alpha))."""
    u = rng.uniform(-np.pi / 2.0, np.pi / 2.0, size=size)
    w = rng.exponential(1.0, size=size)
    if abs(alpha - 1.0) < 1e-12:
        return np.tan(u)
    s = (np.sin(alpha * u) / np.cos(u) ** (1.0 / alpha)
         * (np.cos(u - alpha * u) / w) ** ((1.0 - alpha) / alpha))
    return s


def sample_noise(model: NoiseModel, n: int, rng: np.random.Generator) -> np.ndarray:
    """Length-``n`` complex noise vector under the given model.

    Gaussian: real/imag parts are independent N(0, sigma2/2). Alpha-stable:
    real/imag parts are independent SaS(alpha) scaled by ``model.scale`` (at
    alpha = 2 this is N(0, 2*scale^2) per component).
    """
    if n < 1:
        raise ConfigError("noise sample count must be >= 1")
    if model.kind == "none":
        return np.zeros(n, dtype=complex)
    if model.kind == "gaussian":
        z = rng.standard_normal(n) + 1j * rng.standard_normal(n)
        return z * np.sqrt(model.sigma2 / 2.0)
    re = _sas_standard(model.alpha, n, rng)
    im = _sas_standard(model.alpha, n, rng)
    return model.scale * (re + 1j * im)
