"""KKT closed-form CPU frequencies and the data-allocation linear program."""

from __future__ import annotations

import numpy as np
from scipy.optimize import linprog

from ..errors import FrequencyCapExceeded, LatencyInfeasible, LpInfeasible
from ..netmodel import NetworkConfig
from .constants import DataAllocConstants, cpu_constants
from .types import RegionThresholds


def solve_cpu(cfg: NetworkConfig, theta: np.ndarray, T_D_k: np.ndarray,
              T_G: float, T_max: float) -> tuple[np.ndarray, float, float]:
    """Slowest CPU frequencies that still finish both pipelines by T_max.

    The energy terms are increasing in the frequencies while the latency
    constraints lower-bound them, so the KKT point sits where each compute
    path is exactly latency-tight: fhat_k = D (1-theta_k) Chat_k / (T_max -
    T_G), ftilde = D Ctilde sum(theta) / (T_max - max_k T_D_k). Devices with
    theta_k = 1 (no local work) get fhat_k = 0; sum(theta) = 0 gives
    ftilde = 0. Returns (fhat_k, ftilde, tau2 = T_max).
    """
    theta = np.atleast_1d(np.asarray(theta, dtype=float))
    T_D_k = np.atleast_1d(np.asarray(T_D_k, dtype=float))
    cc = cpu_constants(cfg, theta)

    fhat = np.zeros(cfg.K)
    work = cc.C13_k > 0
    if np.any(work):
        if T_max <= T_G:
            raise LatencyInfeasible(
                "gradient upload alone exceeds the round budget",
                T_G=T_G, T_max=T_max)
        fhat[work] = cc.C13_k[work] / (T_max - T_G)
        if np.any(fhat > cfg.fhat_max * (1.0 + 1e-12)):
            k = int(np.argmax(fhat))
            raise FrequencyCapExceeded(
                "device CPU frequency above cap", device=k,
                required=float(fhat[k]), cap=cfg.fhat_max)

    ftilde = 0.0
    if cc.C14 > 0:
        data_worst = float(np.max(T_D_k))
        if T_max <= data_worst:
            raise LatencyInfeasible(
                "data upload alone exceeds the round budget",
                worst_T_D=data_worst, T_max=T_max)
        ftilde = cc.C14 / (T_max - data_worst)
        if ftilde > cfg.ftilde_max * (1.0 + 1e-12):
            raise FrequencyCapExceeded(
                "BS CPU frequency above cap", required=ftilde, cap=cfg.ftilde_max)

    return fhat, ftilde, T_max


def solve_data_allocation(region: str, cfg: NetworkConfig, thr: RegionThresholds,
                          dc: DataAllocConstants, T_G: float,
                          lp_tol: float = 1e-9,
                          theta_current: np.ndarray | None = None,
                          ) -> tuple[np.ndarray, float]:
    """Minimize the theta-linear part of the round energy subject to latency.

    Box is [0, theta_max] in the non-stable region and [theta_min, 1] in the
    stable region; devices that cannot upload (infinite per-unit data latency)
    are pinned to theta_k = 0. Solved as a dense LP. Returns (theta_k, tau3).

    Cyclic callers often hand the LP a polytope that is latency-tight on both
    pipelines at once; if the solver reports numerical infeasibility but the
    incoming ``theta_current`` verifiably satisfies every constraint, that
    point is kept instead of failing the round.
    """
    if region not in ("ns", "s"):
        raise ValueError(f"region must be 'ns' or 's', got {region!r}")
    K = cfg.K
    lo = np.zeros(K) if region == "ns" else np.full(K, dc.C23)
    hi = np.full(K, dc.C19) if region == "ns" else np.ones(K)

    no_upload = ~np.isfinite(dc.C16_k)
    if np.any(no_upload):
        if region == "s":
            raise LpInfeasible(
                "stable region requires theta_k >= theta_min but a device "
                "has zero uplink rate", devices=list(np.flatnonzero(no_upload)))
        lo[no_upload] = 0.0
        hi[no_upload] = 0.0

    rows, rhs = [], []
    # data pipeline: C16_k theta_k + C17 sum(theta) <= T_max
    c17 = dc.C17
    if not np.isfinite(c17):
        # BS frequency is zero: no edge work can be accepted at all
        rows.append(np.ones(K))
        rhs.append(0.0)
        c17 = 0.0
    for k in range(K):
        if no_upload[k]:
            continue
        row = np.full(K, c17)
        row[k] += dc.C16_k[k]
        rows.append(row)
        rhs.append(thr.T_max)
    # FL pipeline: C18_k (1 - theta_k) + T_G <= T_max
    for k in range(K):
        if not np.isfinite(dc.C18_k[k]):
            # zero device frequency: any local work is impossible
            lo[k] = max(lo[k], 1.0)
            continue
        row = np.zeros(K)
        row[k] = -dc.C18_k[k]
        rows.append(row)
        rhs.append(thr.T_max - T_G - dc.C18_k[k])

    if np.any(lo > hi + 1e-15):
        raise LpInfeasible("empty theta box after pinning stuck devices",
                           lo=lo.tolist(), hi=hi.tolist())

    A = np.array(rows) if rows else None
    b = np.array(rhs) if rhs else None
    res = linprog(dc.C15_k, A_ub=A, b_ub=b, bounds=list(zip(lo, hi)),
                  method="highs",
                  options={"primal_feasibility_tolerance": lp_tol})
    if not res.success:
        if theta_current is not None:
            th = np.asarray(theta_current, dtype=float)
            tol = 1e-7 * max(thr.T_max, 1.0)
            rows_ok = A is None or np.all(A @ th <= b + tol)
            box_ok = np.all(th >= lo - 1e-9) and np.all(th <= hi + 1e-9)
            if rows_ok and box_ok:
                return th.copy(), thr.T_max
        raise LpInfeasible(f"data-allocation LP failed: {res.message}",
                           status=int(res.status))
    return np.clip(res.x, lo, hi), thr.T_max
