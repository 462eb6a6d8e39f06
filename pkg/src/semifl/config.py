"""Experiment configuration: schema validation, unit normalization, defaults.

Configs are JSON. Unknown keys are rejected with the offending path so typos
never silently fall back to defaults. Powers may be given in dBm (``*_dbm``)
or watts (``*_w``); everything is converted to SI at load. Omitted network
fields fall back to the standard simulation parameters (23 dBm transmit
power, 10 kHz segments, -80 dBm noise, 1 ms blocks of 14 signals, 3000
samples per device, CPU figures in the 1e8-cycle range, 1e-28 capacitances,
1/10 GHz frequency caps, theta in [0.2, 0.3]).
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path

import jsonschema
import numpy as np

from .allocator import RegionThresholds, SolverOptions
from .errors import ConfigError
from .learners import make_learner
from .netmodel import NetworkConfig, NoiseModel, dbm_to_watts
from .training import RegionPolicy

_SCHEMA = None


def experiment_schema() -> dict:
    global _SCHEMA
    if _SCHEMA is None:
        with resources.files("semifl.schema").joinpath("experiment.schema.json").open() as f:
            _SCHEMA = json.load(f)
    return _SCHEMA


def learner_dims(spec: dict) -> tuple[int, int, int]:
    """(total dim, shallow dim, intermediate output dim) without sampling."""
    kind = spec.get("kind", "logistic")
    if kind == "quadratic":
        dim, split = spec.get("dim", 50), spec.get("split", 25)
        return dim, split, dim - split
    if kind == "logistic":
        dim, split = spec.get("dim", 20), spec.get("split", 10)
        return dim, split, dim - split + 1
    if kind == "mlp":
        in_dim = spec.get("in_dim", 8)
        hidden = spec.get("hidden", 16)
        n_classes = spec.get("n_classes", 10)
        split = hidden * (in_dim + 1)
        return split + n_classes * (hidden + 1), split, hidden + 1
    raise ConfigError(f"unknown learner kind {kind!r}", field="learner.kind")


@dataclass
class ExperimentConfig:
    network: NetworkConfig
    thresholds: RegionThresholds
    learner_spec: dict
    allocator_mode: str = "proposed"
    beamformer: str = "matched"
    region_mode: str = "two_region"
    gap_constants: object = "auto"
    solver: SolverOptions = field(default_factory=SolverOptions)
    fading: str = "rayleigh"
    rician_k: float = 10.0
    csi_error_ratio: float = 0.0
    noise: NoiseModel | None = None
    region_policy: RegionPolicy = field(default_factory=RegionPolicy)
    eta: float = 0.01
    rounds: int = 100
    loss_threshold: float | None = None
    aggregation: str = "gradient"
    partition_scheme: str = "iid"
    partition_alpha: float = 1.0
    seeds: list[int] = field(default_factory=lambda: [0])
    sweep: dict | None = None
    bounds: dict = field(default_factory=dict)
    raw: dict = field(default_factory=dict)

    def build_runtime(self, seed: int):
        """Learner, partition, and run generator for one seed.

        A single generator seeds the dataset, the partition, and the round
        loop in a fixed order, so a (config, seed) pair fixes every byte of
        the trajectory.
        """
        from .data import partition_data

        rng = np.random.default_rng(seed)
        spec = dict(self.learner_spec)
        spec.setdefault("n", self.network.K * self.network.D)
        learner = make_learner(spec, rng)
        partition = partition_data(learner.labels, self.network.K,
                                   self.network.D, self.partition_scheme,
                                   self.partition_alpha, rng)
        return learner, partition, rng


def _json_path(err: jsonschema.ValidationError) -> str:
    return ".".join(str(p) for p in err.absolute_path) or "<root>"


def load_config(path) -> ExperimentConfig:
    """Parse, validate, and normalize an experiment config file."""
    text = Path(path).read_text()
    try:
        raw = json.loads(text)
    except json.JSONDecodeError as e:
        raise ConfigError(f"invalid JSON: {e}", field=str(path))
    return config_from_dict(raw)


def config_from_dict(raw: dict) -> ExperimentConfig:
    try:
        jsonschema.validate(raw, experiment_schema())
    except jsonschema.ValidationError as e:
        raise ConfigError(e.message, field=_json_path(e))

    net_in = dict(raw.get("network", {}))
    if "sigma2_dbm" in net_in and "sigma2_w" in net_in:
        raise ConfigError("give sigma2 in dBm or watts, not both", field="network")
    if "p_max_dbm" in net_in and "p_max_w" in net_in:
        raise ConfigError("give p_max in dBm or watts, not both", field="network")
    sigma2 = net_in.pop("sigma2_w", None)
    if sigma2 is None:
        sigma2 = dbm_to_watts(net_in.pop("sigma2_dbm", -80.0))
    else:
        net_in.pop("sigma2_dbm", None)
    p_max = net_in.pop("p_max_w", None)
    if p_max is None:
        p_max = dbm_to_watts(net_in.pop("p_max_dbm", 23.0))
    else:
        net_in.pop("p_max_dbm", None)

    K = int(net_in.pop("K", 20))
    learner_spec = dict(raw.get("learner", {}))
    dim, split, inter_dim = learner_dims(learner_spec)

    chat = net_in.pop("Chat_cycles", None)
    if chat is None:
        chat_arr = np.linspace(1.5e8, 2.8e8, K) if K > 1 else np.array([1.5e8])
    elif isinstance(chat, dict):
        chat_arr = np.linspace(chat["min"], chat["max"], K) if K > 1 \
            else np.array([chat["min"]])
    else:
        chat_arr = np.asarray(chat, dtype=float)
        if chat_arr.shape != (K,):
            raise ConfigError(f"Chat_cycles must list {K} values",
                              field="network.Chat_cycles")

    q = int(net_in.pop("Q", dim))
    q1 = int(net_in.pop("Q1", split))
    if "learner" in raw and (q != dim or q1 != split):
        raise ConfigError(
            f"network dims (Q={q}, Q1={q1}) conflict with the learner "
            f"(dim={dim}, split={split})", field="network.Q")

    network = NetworkConfig(
        K=K,
        N_r=int(net_in.pop("N_r", 16)),
        B=float(net_in.pop("B_hz", 10e3)),
        sigma2=float(sigma2),
        p_max=float(p_max),
        T_s=float(net_in.pop("T_s", 1e-3)),
        M=int(net_in.pop("M", 14)),
        D=int(net_in.pop("D", 3000)),
        Cbar=float(net_in.pop("Cbar_bits", 32.0 * inter_dim)),
        Chat_k=chat_arr,
        Ctilde=float(net_in.pop("Ctilde_cycles", 1e8)),
        kappa_hat=float(net_in.pop("kappa_hat", 1e-28)),
        kappa_tilde=float(net_in.pop("kappa_tilde", 1e-28)),
        fhat_max=float(net_in.pop("fhat_max", 1e9)),
        ftilde_max=float(net_in.pop("ftilde_max", 10e9)),
        Q=q, Q1=q1,
    )
    if net_in:
        raise ConfigError(f"unhandled network keys {sorted(net_in)}", field="network")

    thr_in = raw.get("thresholds", {})
    thresholds = RegionThresholds(
        eps1=thr_in.get("eps1", 5.0), eps2=thr_in.get("eps2", 5.0),
        eps3=thr_in.get("eps3", 0.8), eps4=thr_in.get("eps4", 0.01),
        theta_max=thr_in.get("theta_max", 0.3),
        theta_min=thr_in.get("theta_min", 0.2),
        T_max=thr_in.get("T_max", 1000.0),
    )

    alloc_in = raw.get("allocator", {})
    solver = SolverOptions(**alloc_in.get("solver", {}))
    gap = alloc_in.get("gap_constants", "auto")
    if isinstance(gap, list):
        gap = tuple(float(x) for x in gap)

    ch_in = raw.get("channel", {})
    noise_in = raw.get("noise", {})
    noise = NoiseModel(kind=noise_in.get("kind", "gaussian"),
                       sigma2=network.sigma2,
                       alpha=noise_in.get("alpha", 2.0),
                       scale=noise_in.get("scale", np.sqrt(network.sigma2) / 2.0))

    reg_in = raw.get("region", {})
    policy = RegionPolicy(window=reg_in.get("window", 10),
                          slope_threshold=reg_in.get("slope_threshold", 1e-3),
                          patience=reg_in.get("patience", 3))

    tr_in = raw.get("training", {})
    part_in = tr_in.get("partition", {})
    alpha = part_in.get("alpha", 1.0)
    if alpha == "inf":
        alpha = float("inf")

    return ExperimentConfig(
        network=network, thresholds=thresholds, learner_spec=learner_spec,
        allocator_mode=alloc_in.get("mode", "proposed"),
        beamformer=alloc_in.get("beamformer", "matched"),
        region_mode=alloc_in.get("region_mode", "two_region"),
        gap_constants=gap, solver=solver,
        fading=ch_in.get("fading", "rayleigh"),
        rician_k=ch_in.get("rician_k", 10.0),
        csi_error_ratio=ch_in.get("csi_error_ratio", 0.0),
        noise=noise, region_policy=policy,
        eta=tr_in.get("eta", 0.01), rounds=tr_in.get("rounds", 100),
        loss_threshold=tr_in.get("loss_threshold"),
        aggregation=tr_in.get("aggregation", "gradient"),
        partition_scheme=part_in.get("scheme", "iid"),
        partition_alpha=float(alpha),
        seeds=list(raw.get("seeds", [0])),
        sweep=raw.get("sweep"), bounds=raw.get("bounds", {}),
        raw=raw,
    )
