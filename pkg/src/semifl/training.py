"""The SemiFL round loop: split model, two-region scheduling, analog gradient
aggregation, split-learning edge gradients, and per-round cost accounting.

Each round: classify the training phase from the loss history (non-stable
until the loss slope flattens, then stable forever), solve the per-round
resource allocation for that phase, compute device gradients on the locally
retained data, aggregate them over the air with the allocated distortion,
compute the edge gradient at the BS from the uploaded intermediate outputs,
and apply the split update. All randomness flows through one generator, so a
seed fixes the whole trajectory.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .aircomp import (NormalizationStats, aggregate_over_air,
                      denormalize_aggregate, normalize_gradient)
from .allocator import RegionThresholds, SolverOptions, run_bcd
from .data import DataPartition
from .errors import ConfigError, InfeasibleError
from .netmodel import (NetworkConfig, NoiseModel, apply_csi_error,
                       sample_channels)

NON_STABLE, STABLE = "non_stable", "stable"


@dataclass
class ModelSplit:
    """Flat parameter vector with a shallow/deep boundary at ``q1``."""

    w: np.ndarray
    q1: int

    def __post_init__(self):
        self.w = np.asarray(self.w, dtype=float)
        if not 0 < self.q1 < len(self.w):
            raise ConfigError("split index must satisfy 0 < q1 < Q")

    @property
    def shallow(self) -> np.ndarray:
        return self.w[:self.q1]

    @property
    def deep(self) -> np.ndarray:
        return self.w[self.q1:]


@dataclass
class RegionPolicy:
    """Loss-slope detector settings for the stable-region switch."""

    window: int = 10
    slope_threshold: float = 1e-3
    patience: int = 3


@dataclass
class RoundRecord:
    round: int
    region: str
    loss: float
    accuracy: float
    mse: float
    nu: float
    omega: float
    mean_theta: float
    E_uplink: float
    E_compute: float
    E_total: float
    T_total: float


@dataclass
class SemiFLState:
    model: ModelSplit
    t: int = 0
    region: str = NON_STABLE
    loss_history: list[float] = field(default_factory=list)
    records: list[RoundRecord] = field(default_factory=list)
    cumulative_energy: float = 0.0


def local_gradient(learner, model: ModelSplit, idx) -> np.ndarray:
    """Sum of per-sample gradients over a device's retained local samples.
    Empty index sets contribute a zero gradient."""
    if len(idx) == 0:
        return np.zeros(model.w.shape)
    return learner.grad_sum(model.w, idx)


def edge_gradient(learner, model: ModelSplit, intermediates) -> np.ndarray:
    """Deep-layer gradient computed at the BS from uploaded intermediate
    outputs only; never touches shallow parameters."""
    if intermediates is None:
        return np.zeros(len(model.deep))
    return learner.edge_grad_sum(model.deep, intermediates)


def round_update(model: ModelSplit, agg_gradient: np.ndarray,
                 edge_grad: np.ndarray, theta_k: np.ndarray,
                 eta: float) -> ModelSplit:
    """Split update: shallow layers follow the aggregated gradient alone;
    deep layers mix it with the edge gradient by the data-split weights
    rho_L = 1 - mean(theta), rho_E = mean(theta)."""
    rho_e = float(np.mean(theta_k))
    rho_l = 1.0 - rho_e
    w = model.w.copy()
    w[:model.q1] -= eta * agg_gradient[:model.q1]
    w[model.q1:] -= eta * (rho_l * agg_gradient[model.q1:] + rho_e * edge_grad)
    return ModelSplit(w=w, q1=model.q1)


def detect_region(losses, window: int = 10, slope_threshold: float = 1e-3,
                  patience: int = 3) -> str:
    """Classify a loss history: stable once ``patience`` consecutive windows
    show a least-squares slope below threshold; the flag never reverts."""
    losses = np.asarray(losses, dtype=float)
    if len(losses) < window:
        return NON_STABLE
    x = np.arange(window, dtype=float)
    x -= x.mean()
    denom = float(np.sum(x * x))
    streak = 0
    for t in range(window, len(losses) + 1):
        seg = losses[t - window:t]
        slope = float(np.sum(x * (seg - seg.mean()))) / denom
        streak = streak + 1 if abs(slope) < slope_threshold else 0
        if streak >= patience:
            return STABLE
    return NON_STABLE


def _pool_intermediates(learner, model, parts):
    """Concatenate per-device intermediate outputs in device order."""
    parts = [p for p in parts if p is not None]
    if not parts:
        return None
    first = parts[0]
    if isinstance(first, tuple):
        return tuple(np.concatenate([p[i] for p in parts]) for i in range(len(first)))
    return np.concatenate(parts)


def run_semifl(learner, partition: DataPartition, cfg: NetworkConfig,
               thresholds: RegionThresholds, *, eta: float, rounds: int,
               rng: np.random.Generator,
               baseline: str | None = None,
               beamformer_method: str = "matched",
               solver_opts: SolverOptions | None = None,
               region_policy: RegionPolicy | None = None,
               region_mode: str = "two_region",
               fading: str = "rayleigh", rician_k: float = 10.0,
               csi_error_ratio: float = 0.0,
               noise: NoiseModel | None = None,
               gap_constants=None,
               aggregation: str = "gradient",
               w0: np.ndarray | None = None,
               ) -> tuple[list[RoundRecord], SemiFLState]:
    """Run a full SemiFL training trajectory.

    ``region_mode`` is 'two_region' (switch to the stable allocator once the
    loss flattens), 'ns_only', or 's_only' (pin one allocator throughout).
    ``aggregation='parameter'`` switches to model-parameter uploads (the
    federated-averaging variant); devices then take one local step and
    transmit their normalized updated parameters instead of gradients.
    ``gap_constants`` may be a tuple (L, mu, A2) for the stable-region gap
    constraint, or ``'auto'`` to estimate them from a quadratic learner.
    Deterministic per ``rng`` seed.
    """
    if partition.K != cfg.K:
        raise ConfigError(f"partition has {partition.K} devices, config {cfg.K}")
    if aggregation not in ("gradient", "parameter"):
        raise ConfigError(f"unknown aggregation mode {aggregation!r}")
    if region_mode not in ("two_region", "ns_only", "s_only"):
        raise ConfigError(f"unknown region mode {region_mode!r}")
    solver_opts = solver_opts or SolverOptions()
    policy = region_policy or RegionPolicy()
    noise = noise or NoiseModel(kind="gaussian", sigma2=cfg.sigma2)

    model = ModelSplit(w=learner.init_weights(rng) if w0 is None else np.array(w0, dtype=float),
                       q1=learner.split)
    if cfg.Q != learner.dim or cfg.Q1 != learner.split:
        raise ConfigError(
            f"network model dims (Q={cfg.Q}, Q1={cfg.Q1}) do not match the "
            f"learner (dim={learner.dim}, split={learner.split})")
    state = SemiFLState(model=model)
    grad_norm_peak = 0.0

    if region_mode == "s_only":
        state.region = STABLE

    for t in range(1, rounds + 1):
        if region_mode == "two_region":
            region_flag = detect_region(state.loss_history, policy.window,
                                        policy.slope_threshold, policy.patience)
            if region_flag == STABLE:
                state.region = STABLE       # hysteresis: never reverts
        region = "s" if state.region == STABLE else "ns"

        ch = sample_channels(cfg, fading, rician_k, rng)
        if csi_error_ratio > 0:
            hG_est, hG_true = apply_csi_error(ch.hG, csi_error_ratio, rng)
            ch.hG, ch.hG_true = hG_est, hG_true

        gaps = gap_constants
        if gaps == "auto":
            gaps = _auto_gap_constants(learner, grad_norm_peak)
        try:
            alloc, costs, info = run_bcd(region, cfg, ch, thresholds,
                                         solver_opts, gap_constants=gaps,
                                         beamformer_method=beamformer_method,
                                         baseline=baseline, rng=rng)
        except InfeasibleError as err:
            err.context["round"] = t
            raise

        # per-device split into uploaded and retained samples
        signals = np.empty((cfg.K, cfg.Q))
        stats: list[NormalizationStats] = []
        inter_parts = []
        for k in range(cfg.K):
            dev_idx = partition.device_indices[k]
            n_edge = int(round(alloc.theta_k[k] * cfg.D))
            perm = rng.permutation(len(dev_idx))
            edge_idx = dev_idx[perm[:n_edge]]
            local_idx = dev_idx[perm[n_edge:]]
            inter_parts.append(learner.intermediates(state.model.w, edge_idx)
                               if n_edge > 0 else None)
            if aggregation == "gradient":
                payload = local_gradient(learner, state.model, local_idx)
            else:
                local_w = state.model.w - eta * local_gradient(learner, state.model, local_idx)
                payload = local_w
            signals[k], stat = normalize_gradient(payload)
            stats.append(stat)

        agg = aggregate_over_air(signals, alloc.bf, ch, alloc.sf, noise, rng)
        restored = denormalize_aggregate(agg, stats)
        pooled = _pool_intermediates(learner, state.model, inter_parts)
        g_edge = edge_gradient(learner, state.model, pooled)

        if aggregation == "gradient":
            state.model = round_update(state.model, restored, g_edge,
                                       alloc.theta_k, eta)
        else:
            rho_e = float(np.mean(alloc.theta_k))
            w = state.model.w.copy()
            w[:state.model.q1] = restored[:state.model.q1]
            w[state.model.q1:] = ((1.0 - rho_e) * restored[state.model.q1:]
                                  + rho_e * (state.model.deep - eta * g_edge))
            state.model = ModelSplit(w=w, q1=state.model.q1)

        if hasattr(learner, "global_grad"):
            grad_norm_peak = max(grad_norm_peak,
                                 float(np.linalg.norm(learner.global_grad(state.model.w))))

        loss = learner.loss_mean(state.model.w)
        if not np.isfinite(loss):
            loss = float("inf")
        state.loss_history.append(loss)
        state.t = t
        state.cumulative_energy += costs.E_all
        state.records.append(RoundRecord(
            round=t, region=state.region, loss=loss,
            accuracy=learner.accuracy(state.model.w),
            mse=info["mse"], nu=alloc.sf.nu, omega=alloc.sf.omega,
            mean_theta=float(np.mean(alloc.theta_k)),
            E_uplink=costs.E_uplink, E_compute=costs.E_compute,
            E_total=costs.E_all, T_total=costs.T_all,
        ))

    return state.records, state


def run_semifedavg(*args, **kwargs):
    """Parameter-aggregation variant: devices take one local step and upload
    their normalized model parameters instead of gradients; the BS adopts the
    aggregated shallow parameters directly. Same pipeline otherwise."""
    kwargs["aggregation"] = "parameter"
    return run_semifl(*args, **kwargs)


def _auto_gap_constants(learner, grad_norm_peak: float):
    """Stable-region constants for learners with a known curvature."""
    if not hasattr(learner, "global_hessian_diag"):
        return None
    hess = learner.global_hessian_diag()
    L, mu = float(np.max(hess)), float(np.min(hess))
    if mu <= 0:
        return None
    A2 = max(grad_norm_peak, 1e-12) ** 2 * 1.5
    return (L, mu, A2)
