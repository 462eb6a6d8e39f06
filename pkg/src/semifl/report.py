"""Figure rendering for experiment outputs.

Consumes only the documented CSV contract (rounds.csv / sweep.csv), never the
in-memory state, so any result directory can be re-rendered later. Figures
are written as PNG next to the data files.
"""

from __future__ import annotations

import csv
from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402


def _read_rounds(csv_path: Path) -> dict[int, dict[str, np.ndarray]]:
    by_seed: dict[int, list[dict]] = {}
    with open(csv_path, newline="") as f:
        for row in csv.DictReader(f):
            by_seed.setdefault(int(row["seed"]), []).append(row)
    out = {}
    for seed, rows in by_seed.items():
        rows.sort(key=lambda r: int(r["round"]))
        out[seed] = {
            "round": np.array([int(r["round"]) for r in rows]),
            "loss": np.array([float(r["loss"]) for r in rows]),
            "region": np.array([r["region"] for r in rows]),
            "E_uplink": np.array([float(r["E_uplink"]) for r in rows]),
            "E_compute": np.array([float(r["E_compute"]) for r in rows]),
            "mse": np.array([float(r["mse"]) for r in rows]),
        }
    return out


def render_simulation_report(csv_path, out_dir=None) -> list[Path]:
    """Loss curves with the stable-region switch marked, plus a per-round
    energy breakdown. Returns the written figure paths."""
    csv_path = Path(csv_path)
    out_dir = csv_path.parent if out_dir is None else Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    data = _read_rounds(csv_path)
    written = []

    fig, ax = plt.subplots(figsize=(7, 4.5))
    max_t = 1
    for seed, d in sorted(data.items()):
        ax.plot(d["round"], d["loss"], alpha=0.35, lw=0.9, label=f"seed {seed}")
        switch = np.flatnonzero(d["region"] == "stable")
        if switch.size:
            ax.axvline(d["round"][switch[0]], color="grey", ls=":", lw=0.7)
        max_t = max(max_t, int(d["round"][-1]))
    rounds = np.arange(1, max_t + 1)
    stacked = np.full((len(data), max_t), np.nan)
    for i, (_, d) in enumerate(sorted(data.items())):
        stacked[i, :len(d["loss"])] = d["loss"]
    med = np.nanmedian(stacked, axis=0)
    ax.plot(rounds, med, color="k", lw=2, label="median")
    ax.set_xlabel("round")
    ax.set_ylabel("training loss")
    ax.set_yscale("log")
    if len(data) <= 8:
        ax.legend(fontsize=8)
    fig.tight_layout()
    p = out_dir / "loss_curves.png"
    fig.savefig(p, dpi=130)
    plt.close(fig)
    written.append(p)

    fig, ax = plt.subplots(figsize=(7, 4.5))
    first = data[sorted(data)[0]]
    ax.stackplot(first["round"], first["E_compute"], first["E_uplink"],
                 labels=["compute", "uplink"], alpha=0.8)
    ax.set_xlabel("round")
    ax.set_ylabel("energy per round (J)")
    ax.legend(fontsize=8)
    fig.tight_layout()
    p = out_dir / "energy_breakdown.png"
    fig.savefig(p, dpi=130)
    plt.close(fig)
    written.append(p)
    return written


def render_sweep_report(sweep_csv, out_dir=None) -> list[Path]:
    """Final loss and rounds-to-threshold versus the sweep axis."""
    sweep_csv = Path(sweep_csv)
    out_dir = sweep_csv.parent if out_dir is None else Path(out_dir)
    rows = list(csv.DictReader(open(sweep_csv, newline="")))
    values = sorted({r["axis_value"] for r in rows}, key=lambda v: float(v))
    written = []

    def collect(col):
        out = []
        for v in values:
            xs = [float(r[col]) for r in rows
                  if r["axis_value"] == v and r[col] not in ("", "None")]
            out.append(np.median(xs) if xs else np.nan)
        return np.array(out)

    x = [float(v) for v in values]
    for col, name in (("final_loss", "median final loss"),
                      ("rounds_to_threshold", "median rounds to threshold"),
                      ("energy_total", "median total energy (J)")):
        med = collect(col)
        if np.all(np.isnan(med)):
            continue
        fig, ax = plt.subplots(figsize=(6, 4))
        ax.plot(x, med, "o-")
        ax.set_xlabel(Path(sweep_csv).parent.name or "axis")
        ax.set_ylabel(name)
        if len(set(x)) > 3 and max(x) / max(min(x), 1e-12) > 50:
            ax.set_xscale("log")
        fig.tight_layout()
        p = out_dir / f"sweep_{col}.png"
        fig.savefig(p, dpi=130)
        plt.close(fig)
        written.append(p)
    return written
