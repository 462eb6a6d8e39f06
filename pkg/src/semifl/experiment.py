"""Experiment orchestration: seeded runs, sweeps, CSV/JSON result emission.

Output contract: ``rounds.csv`` has a fixed column order
(seed, round, region, loss, accuracy, mse, nu, omega, mean_theta,
E_uplink, E_compute, E_total, T_total); floats are written with 17
significant digits so repeated runs are byte-identical. ``summary.json``
aggregates per seed and overall. Files are written to a temp name and
renamed, so readers never observe partial output.
"""

from __future__ import annotations

import json
import logging
import os
from pathlib import Path

import numpy as np

from .config import ExperimentConfig
from .training import RoundRecord, run_semifl

log = logging.getLogger("semifl")

CSV_COLUMNS = ("seed", "round", "region", "loss", "accuracy", "mse", "nu",
               "omega", "mean_theta", "E_uplink", "E_compute", "E_total",
               "T_total")


def _fmt(x) -> str:
    if x is None:
        return ""
    if isinstance(x, float):
        return f"{x:.17g}"
    return str(x)


def _atomic_write(path: Path, text: str) -> None:
    tmp = path.with_name(path.name + ".tmp")
    tmp.write_text(text)
    os.replace(tmp, path)


def records_to_csv(rows: list[tuple[int, RoundRecord]]) -> str:
    lines = [",".join(CSV_COLUMNS)]
    for seed, r in rows:
        lines.append(",".join(_fmt(v) for v in (
            seed, r.round, r.region, r.loss, r.accuracy, r.mse, r.nu, r.omega,
            r.mean_theta, r.E_uplink, r.E_compute, r.E_total, r.T_total)))
    return "\n".join(lines) + "\n"


def _seed_summary(cfg: ExperimentConfig, records: list[RoundRecord]) -> dict:
    losses = [r.loss for r in records]
    rtt = None
    if cfg.loss_threshold is not None:
        rtt = next((r.round for r in records if r.loss <= cfg.loss_threshold), None)
    switch = next((r.round for r in records if r.region == "stable"), None)
    return {
        "rounds": len(records),
        "final_loss": losses[-1] if losses else None,
        "final_accuracy": records[-1].accuracy if records else None,
        "rounds_to_threshold": rtt,
        "stable_switch_round": switch,
        "energy_uplink_total": float(sum(r.E_uplink for r in records)),
        "energy_compute_total": float(sum(r.E_compute for r in records)),
        "energy_total": float(sum(r.E_total for r in records)),
    }


def run_single(cfg: ExperimentConfig, seed: int) -> tuple[list[RoundRecord], dict]:
    """One deterministic trajectory for one seed."""
    learner, partition, rng = cfg.build_runtime(seed)
    baseline = None if cfg.allocator_mode in ("proposed", "sdr") else cfg.allocator_mode
    beamformer = "sdr" if cfg.allocator_mode == "sdr" else cfg.beamformer
    records, _state = run_semifl(
        learner, partition, cfg.network, cfg.thresholds,
        eta=cfg.eta, rounds=cfg.rounds, rng=rng,
        baseline=baseline, beamformer_method=beamformer,
        solver_opts=cfg.solver, region_policy=cfg.region_policy,
        region_mode=cfg.region_mode, fading=cfg.fading, rician_k=cfg.rician_k,
        csi_error_ratio=cfg.csi_error_ratio, noise=cfg.noise,
        gap_constants=cfg.gap_constants, aggregation=cfg.aggregation)
    return records, _seed_summary(cfg, records)


def run_experiment(cfg: ExperimentConfig, out_dir) -> dict:
    """All configured seeds; writes rounds.csv and summary.json."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    rows: list[tuple[int, RoundRecord]] = []
    per_seed = {}
    for seed in cfg.seeds:
        log.info("running seed %d", seed)
        records, summary = run_single(cfg, seed)
        rows.extend((seed, r) for r in records)
        per_seed[str(seed)] = summary

    _atomic_write(out / "rounds.csv", records_to_csv(rows))
    finals = [s["final_loss"] for s in per_seed.values()]
    rtts = [s["rounds_to_threshold"] for s in per_seed.values()]
    summary = {
        "seeds": per_seed,
        "median_final_loss": float(np.median(finals)) if finals else None,
        "median_rounds_to_threshold": (
            float(np.median([r for r in rtts if r is not None]))
            if any(r is not None for r in rtts) else None),
        "energy_total_sum": float(sum(s["energy_total"] for s in per_seed.values())),
    }
    _atomic_write(out / "summary.json", json.dumps(summary, indent=2) + "\n")
    return summary


def _set_by_path(d: dict, dotted: str, value) -> None:
    keys = dotted.split(".")
    cur = d
    for k in keys[:-1]:
        cur = cur.setdefault(k, {})
    cur[keys[-1]] = value


def run_sweep(cfg: ExperimentConfig, out_dir) -> dict:
    """One experiment per sweep-axis value, merged by (value, seed)."""
    from .config import config_from_dict

    if not cfg.sweep:
        raise ValueError("config has no sweep section")
    axis, values = cfg.sweep["axis"], cfg.sweep["values"]
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)

    merged = {"axis": axis, "points": []}
    lines = ["axis_value,seed,rounds_to_threshold,final_loss,final_accuracy,"
             "energy_uplink_total,energy_compute_total,energy_total"]
    for value in values:
        raw = json.loads(json.dumps(cfg.raw))   # deep copy
        raw.pop("sweep", None)
        _set_by_path(raw, axis, value)
        sub_cfg = config_from_dict(raw)
        sub_dir = out / f"{axis.replace('.', '_')}={value}"
        summary = run_experiment(sub_cfg, sub_dir)
        merged["points"].append({"value": value, "summary": summary})
        for seed, s in summary["seeds"].items():
            lines.append(",".join(_fmt(v) for v in (
                value, int(seed), s["rounds_to_threshold"], s["final_loss"],
                s["final_accuracy"], s["energy_uplink_total"],
                s["energy_compute_total"], s["energy_total"])))

    _atomic_write(out / "sweep.csv", "\n".join(lines) + "\n")
    _atomic_write(out / "sweep_summary.json", json.dumps(merged, indent=2) + "\n")
    return merged
