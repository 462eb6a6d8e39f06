"""Command-line interface.

Subcommands: ``validate`` (config check), ``optimize ns|s`` (single-round
allocation as JSON), ``simulate`` (full training run), ``sweep`` (one run per
axis value), ``bounds`` (convergence-bound evaluators). Infeasibility exits
with code 2 and a machine-readable error object on stdout; config errors exit
with code 1. The ``SEMIFL_LOG`` environment variable (debug/info/warning/
quiet) controls verbosity.
"""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys
from pathlib import Path

import numpy as np

from . import theory
from .allocator import run_bcd
from .config import load_config
from .errors import ConfigError, InfeasibleError, SemiflError
from .experiment import run_experiment, run_sweep
from .netmodel import sample_channels

log = logging.getLogger("semifl")


def _setup_logging() -> None:
    level = os.environ.get("SEMIFL_LOG", "warning").lower()
    levels = {"debug": logging.DEBUG, "info": logging.INFO,
              "warning": logging.WARNING, "quiet": logging.CRITICAL}
    logging.basicConfig(level=levels.get(level, logging.WARNING),
                        format="%(levelname)s %(name)s: %(message)s")


def _error_json(err: Exception, kind: str) -> str:
    payload = {"error": kind, "message": str(err)}
    if isinstance(err, InfeasibleError):
        payload["context"] = {k: (v.tolist() if isinstance(v, np.ndarray) else v)
                              for k, v in err.context.items()}
    if isinstance(err, ConfigError) and err.field:
        payload["field"] = err.field
    return json.dumps(payload, indent=2, default=str)


def _apply_overrides(args) -> dict:
    cfg = load_config(args.config)
    if getattr(args, "seed", None) is not None:
        cfg.seeds = [args.seed]
    if getattr(args, "rounds", None) is not None:
        cfg.rounds = args.rounds
    if getattr(args, "baseline", None):
        cfg.allocator_mode = args.baseline
    return cfg


def cmd_validate(args) -> int:
    load_config(args.config)
    print(json.dumps({"status": "ok", "config": str(args.config)}))
    return 0


def cmd_optimize(args) -> int:
    cfg = _apply_overrides(args)
    seed = cfg.seeds[0]
    rng = np.random.default_rng(seed)
    ch = sample_channels(cfg.network, cfg.fading, cfg.rician_k, rng)
    gap = cfg.gap_constants
    if gap == "auto":
        b = cfg.bounds
        gap = (b["L"], b["mu"], b["A2"]) if {"L", "mu", "A2"} <= b.keys() else None
    baseline = None if cfg.allocator_mode in ("proposed", "sdr") else cfg.allocator_mode
    beamformer = "sdr" if cfg.allocator_mode == "sdr" else \
        ("dc" if cfg.beamformer == "matched" else cfg.beamformer)
    alloc, costs, info = run_bcd(args.region, cfg.network, ch, cfg.thresholds,
                                 cfg.solver, gap_constants=gap,
                                 beamformer_method=beamformer,
                                 baseline=baseline, rng=rng)
    result = {
        "region": args.region,
        "seed": seed,
        "baseline": baseline,
        "allocation": {
            "nu": alloc.sf.nu, "omega": alloc.sf.omega,
            "amplitude_ratio": alloc.sf.amplitude_ratio,
            "zeta_k": alloc.sf.zeta_k.tolist(),
            "theta_k": alloc.theta_k.tolist(),
            "fhat_k": alloc.fhat_k.tolist(),
            "ftilde": alloc.ftilde,
        },
        "mse": info["mse"],
        "costs": {
            "T_all": costs.T_all, "E_all": costs.E_all,
            "E_uplink": costs.E_uplink, "E_compute": costs.E_compute,
            "T_G": costs.T_G, "T_E": costs.T_E,
            "T_D_k": costs.T_D_k.tolist(), "T_F_k": costs.T_F_k.tolist(),
        },
        "E_all_trace": info["E_all_trace"],
    }
    text = json.dumps(result, indent=2)
    if args.out:
        Path(args.out).mkdir(parents=True, exist_ok=True)
        (Path(args.out) / "allocation.json").write_text(text + "\n")
    print(text)
    return 0


def cmd_simulate(args) -> int:
    cfg = _apply_overrides(args)
    out_dir = Path(args.out or "results")
    summary = run_experiment(cfg, out_dir)
    if args.plots:
        from .report import render_simulation_report
        figs = render_simulation_report(out_dir / "rounds.csv")
        log.info("figures: %s", ", ".join(str(f) for f in figs))
    print(json.dumps({"status": "ok", "out": str(out_dir),
                      "median_final_loss": summary["median_final_loss"]}))
    return 0


def cmd_sweep(args) -> int:
    cfg = _apply_overrides(args)
    out_dir = Path(args.out or "results")
    run_sweep(cfg, out_dir)
    if args.plots:
        from .report import render_sweep_report
        render_sweep_report(out_dir / "sweep.csv")
    print(json.dumps({"status": "ok", "out": str(out_dir)}))
    return 0


def cmd_bounds(args) -> int:
    cfg = _apply_overrides(args)
    b = dict(cfg.bounds)
    if not {"L", "mu", "A2"} <= b.keys():
        raise ConfigError("bounds require at least L, mu, A2", field="bounds")
    L, mu, A2 = b["L"], b["mu"], b["A2"]
    sigma2 = cfg.network.sigma2
    Q = cfg.network.Q
    out: dict = {"constants": {"L": L, "mu": mu, "A2": A2,
                               "xi": theory.contraction_factor(L, mu)}}
    eps = b.get("eps", float(np.sqrt(A2 / (2 * mu))))
    if {"eta", "ratio", "rhoL", "nu"} <= b.keys():
        out["thm1_lower_bound"] = theory.thm1_lower_bound(
            b["eta"], mu, eps, A2, b["ratio"], b["rhoL"], sigma2, Q, b["nu"])
        if {"C", "delta_d"} <= b.keys():
            out["cor1_lower_bound"] = theory.cor1_lower_bound(
                b["eta"], mu, eps, A2, b["ratio"], b["rhoL"], 1.0 - b["rhoL"],
                b.get("sigma", float(np.sqrt(sigma2))), Q, b["nu"],
                b["ratio"] ** 2 * b["nu"], b["C"], cfg.network.K, b["delta_d"])
    if "nu" in b and 4 * mu > L:
        out["thm2_gap"] = theory.thm2_gap(b["nu"], L, mu, A2, sigma2, Q)
        if {"C", "delta_d", "rhoL"} <= b.keys() and 2 * mu > L:
            val, rem = theory.cor2_gap(L, mu, A2, sigma2, Q, b["nu"], b["C"],
                                       cfg.network.K, [b["delta_d"]], [b["rhoL"]])
            out["cor2_gap"] = {"value": val, "remainder_bound": rem}
    if {"nu_low", "nu_high", "T_prime"} <= b.keys() and 4 * mu > L:
        limit, legacy = theory.two_region_gap(
            b["T_prime"], b["nu_low"], b["nu_high"], L, mu, A2, sigma2, Q)
        out["two_region_gap"] = {
            "limit": limit,
            "legacy_at_10x_T_prime": legacy(10 * b["T_prime"]),
        }
    text = json.dumps(out, indent=2)
    if args.out:
        Path(args.out).mkdir(parents=True, exist_ok=True)
        (Path(args.out) / "bounds.json").write_text(text + "\n")
    print(text)
    return 0


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="semifl",
                                description="SemiFL over-the-air training simulator")
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp, out=True):
        sp.add_argument("--config", required=True, help="experiment config JSON")
        sp.add_argument("--seed", type=int, default=None, help="override the seed list")
        if out:
            sp.add_argument("--out", default=None, help="output directory")

    sp = sub.add_parser("validate", help="check a config file")
    sp.add_argument("--config", required=True)
    sp.set_defaults(fn=cmd_validate)

    sp = sub.add_parser("optimize", help="solve one round's allocation")
    sp.add_argument("region", choices=["ns", "s"])
    common(sp)
    sp.add_argument("--baseline", default=None,
                    choices=["mmse_ci", "max_tp", "max_cpu", "rda", "sdr"])
    sp.set_defaults(fn=cmd_optimize)

    sp = sub.add_parser("simulate", help="run the full training loop")
    common(sp)
    sp.add_argument("--baseline", default=None,
                    choices=["mmse_ci", "max_tp", "max_cpu", "rda", "sdr"])
    sp.add_argument("--rounds", type=int, default=None)
    sp.add_argument("--plots", dest="plots", action="store_true", default=True)
    sp.add_argument("--no-plots", dest="plots", action="store_false")
    sp.set_defaults(fn=cmd_simulate)

    sp = sub.add_parser("sweep", help="run the configured sweep")
    common(sp)
    sp.add_argument("--plots", dest="plots", action="store_true", default=True)
    sp.add_argument("--no-plots", dest="plots", action="store_false")
    sp.set_defaults(fn=cmd_sweep)

    sp = sub.add_parser("bounds", help="evaluate convergence bounds")
    common(sp)
    sp.set_defaults(fn=cmd_bounds)
    return p


def main(argv=None) -> int:
    _setup_logging()
    args = build_parser().parse_args(argv)
    try:
        return args.fn(args)
    except InfeasibleError as err:
        print(_error_json(err, "infeasible"))
        return 2
    except ConfigError as err:
        print(_error_json(err, "config"))
        return 1
    except SemiflError as err:
        print(_error_json(err, "error"))
        return 1


if __name__ == "__main__":
    sys.exit(main())
