"""Block-coordinate descent over scaling factors, beamformers, CPU
frequencies, and data allocation, plus the pinned-block baseline allocators.

Cycle order is scaling -> beamformers -> CPU -> data allocation. Every block
step keeps the joint point feasible (each subproblem carries the latency and
power constraints), and each step only replaces its block when that does not
increase the round energy, so the E_all trace is non-increasing.

The BS frequency needs care at initialization: because the closed-form
data normalizations make the data path latency-tight, the later CPU step can
never move the BS frequency off its incoming value. Starting it at the cap
would therefore lock in maximal edge-compute energy. The initial point
instead picks the edge-compute share of the latency budget by a direct 1-D
search that trades data-upload energy against edge-compute energy.
"""

from __future__ import annotations

import numpy as np

from ..aircomp import (Beamformers, ScalingFactors, exp2_m1, log2_1p,
                       mse_closed_form, uplink_rate)
from ..costs import Allocation, CostBreakdown, compute_costs, latency_data, \
    latency_edge, latency_gradient, latency_local
from ..errors import InfeasibleError, LatencyInfeasible
from ..netmodel import ChannelRealization, NetworkConfig
from .beamformers import dc_beamformers, sdr_beamformers, _gram_eigvec
from .compute import solve_cpu, solve_data_allocation
from .constants import (beamformer_weights, data_alloc_constants, data_gains,
                        grad_gains, scaling_constants)
from .scaling import (_check_compute_path, _zeta_closed_form, solve_scaling_ns,
                      solve_scaling_s)
from .types import RegionThresholds, SolverOptions

BASELINES = ("mmse_ci", "max_tp", "max_cpu", "rda", "sdr")


def _latencies(cfg: NetworkConfig, alloc: Allocation):
    """Current T_E, per-device T_F, per-device T_D, and T_G."""
    T_G = latency_gradient(cfg.Q, cfg.M, cfg.T_s)
    T_E = latency_edge(cfg.D, float(np.sum(alloc.theta_k)), cfg.Ctilde, alloc.ftilde)
    T_F = np.array([latency_local(cfg.D, alloc.theta_k[k], cfg.Chat_k[k],
                                  alloc.fhat_k[k]) for k in range(cfg.K)])
    rates = np.array([uplink_rate(alloc.sf.zeta_k[k], cfg.sigma2, cfg.B)
                      for k in range(cfg.K)])
    T_D = np.array([latency_data(cfg.D, alloc.theta_k[k], cfg.Cbar, rates[k])
                    for k in range(cfg.K)])
    return T_E, T_F, T_D, T_G


def _upload_energy(cfg: NetworkConfig, theta: np.ndarray, g_data: np.ndarray,
                   zeta: np.ndarray) -> float:
    """sum_k E_D with the given data normalizations."""
    log_t = log2_1p(zeta / cfg.sigma2)
    C1 = cfg.D * cfg.Cbar * theta / (g_data * cfg.B)
    return float(np.sum(np.where(zeta > 0,
                                 C1 * zeta / np.where(log_t > 0, log_t, 1.0), 0.0)))


def _edge_share_costs(cfg: NetworkConfig, thr: RegionThresholds,
                      theta: np.ndarray, g_data: np.ndarray,
                      tp_caps: bool, n_grid: int = 64):
    """Candidate (ftilde, E_D + E_E) pairs for a fixed data-ratio vector.

    Searches the edge-compute share s of the latency budget with the data
    normalizations latency-tight at each s (or pinned at the power caps for
    the max-power baseline, which fixes the data time).
    """
    C14 = cfg.D * cfg.Ctilde * float(np.sum(theta))
    if C14 <= 0:
        return np.array([0.0]), np.array([0.0])
    C3 = cfg.D * cfg.Cbar * theta / cfg.B
    C4 = cfg.p_max * g_data
    active = C3 > 0
    cap_exp = log2_1p(C4[active] / cfg.sigma2)
    t_min = C3[active] / cap_exp                      # data time at full power
    s_max = thr.T_max - (float(np.max(t_min)) if t_min.size else 0.0)
    # floor keeps T_max - s representable when the edge workload is tiny
    s_min = max(C14 / cfg.ftilde_max, thr.T_max * 1e-9)
    if s_max <= 0 or s_min > s_max:
        return np.array([]), np.array([])

    # the slight pullback from the exact boundary keeps the data-allocation
    # polytope full-dimensional at the starting point
    s_max = max(s_min, s_max * (1.0 - 1e-6))
    if tp_caps:
        zeta = C4.copy()
        e_data = _upload_energy(cfg, theta, g_data, zeta)
        ftilde = C14 / s_max
        return (np.array([ftilde]),
                np.array([cfg.kappa_tilde * C14 * ftilde ** 2 + e_data]))

    grid = np.unique(np.concatenate([np.linspace(s_min, s_max, n_grid),
                                     np.geomspace(s_min, s_max, n_grid)]))
    # by construction log2(1 + zeta/sigma2) equals the exponent, so the data
    # energy is C1 * zeta / exps entrywise
    exps = C3[active][None, :] / (thr.T_max - grid[:, None])
    ok = np.all(exps <= cap_exp[None, :], axis=1)
    if not np.any(ok):
        return np.array([]), np.array([])
    grid, exps = grid[ok], exps[ok]
    zeta = cfg.sigma2 * exp2_m1(exps)
    C1 = cfg.D * cfg.Cbar * theta[active] / (g_data[active] * cfg.B)
    e_data = np.sum(np.where(exps > 0,
                             C1[None, :] * zeta / np.where(exps > 0, exps, 1.0),
                             0.0), axis=1)
    ftilde = C14 / grid
    cost = cfg.kappa_tilde * C14 * ftilde ** 2 + e_data
    return ftilde, cost


def _search_initial_point(region: str, cfg: NetworkConfig, thr: RegionThresholds,
                          g_data: np.ndarray, baseline: str | None,
                          theta_fixed: np.ndarray | None = None,
                          n_theta: int = 25):
    """Starting (theta, ftilde) by coarse joint search.

    The cyclic solver can only shrink the data ratios (the latency-tight data
    normalizations leave the LP no headroom upward) and can never move the BS
    frequency, so both must start near their jointly good values. The search
    scans uniform ratios over the region box crossed with the edge-compute
    share of the latency budget, scoring each point with the closed-form
    energy of the theta-dependent terms.
    """
    lo, hi = (0.0, thr.theta_max) if region == "ns" else (thr.theta_min, 1.0)
    T_G = latency_gradient(cfg.Q, cfg.M, cfg.T_s)
    slack_f = thr.T_max - T_G
    tp_caps = baseline == "max_tp"

    if theta_fixed is not None:
        candidates = [np.asarray(theta_fixed, dtype=float)]
    else:
        grid = np.linspace(lo, hi, n_theta)
        candidates = [np.full(cfg.K, v) for v in grid]

    best = None
    for theta in candidates:
        c13 = cfg.D * (1.0 - theta) * cfg.Chat_k
        if slack_f <= 0 and np.any(c13 > 0):
            continue
        fhat = np.where(c13 > 0, c13 / max(slack_f, 1e-300), 0.0)
        if np.any(fhat > cfg.fhat_max * (1 + 1e-12)):
            continue
        e_local = float(np.sum(c13 * cfg.kappa_hat * fhat ** 2))
        if baseline == "max_cpu":
            C14 = cfg.D * cfg.Ctilde * float(np.sum(theta))
            f_arr = np.array([cfg.ftilde_max])
            c_arr = np.array([cfg.kappa_tilde * C14 * cfg.ftilde_max ** 2])
        else:
            f_arr, c_arr = _edge_share_costs(cfg, thr, theta, g_data, tp_caps)
        if len(c_arr) == 0:
            continue
        j = int(np.argmin(c_arr))
        total = c_arr[j] + e_local
        if best is None or total < best[2]:
            best = (theta, float(f_arr[j]), total)
    if best is None:
        raise LatencyInfeasible(
            "no starting point fits the latency budget for any data ratio",
            T_max=thr.T_max)
    return best[0], best[1]


def initial_allocation(region: str, cfg: NetworkConfig, ch: ChannelRealization,
                       thr: RegionThresholds, opts: SolverOptions | None = None,
                       gap_constants=None, baseline: str | None = None,
                       rng: np.random.Generator | None = None) -> Allocation:
    """Feasible starting point: matched-filter data beamformers, the Gram
    leading eigenvector for the gradient beamformer, device frequencies at
    their caps, data ratios and BS frequency from the coarse joint search
    (random ratios for the RDA baseline), and closed-form scaling."""
    opts = opts or SolverOptions()
    K = cfg.K
    v0 = ch.hD / np.linalg.norm(ch.hD, axis=1, keepdims=True)
    bf = Beamformers(b=_gram_eigvec(ch.hG), v_k=v0)
    g_grad = grad_gains(bf.b, ch.hG)
    g_data = data_gains(bf.v_k, ch.hD)

    theta_fixed = None
    if baseline == "rda":
        if rng is None:
            raise ValueError("the RDA baseline needs an rng for its random ratios")
        lo, hi = (0.0, thr.theta_max) if region == "ns" else (thr.theta_min, 1.0)
        theta_fixed = rng.uniform(lo, hi, K)

    theta, ftilde = _search_initial_point(region, cfg, thr, g_data, baseline,
                                          theta_fixed=theta_fixed)
    fhat = np.full(K, cfg.fhat_max)
    if baseline == "max_cpu":
        ftilde = cfg.ftilde_max

    T_G = latency_gradient(cfg.Q, cfg.M, cfg.T_s)
    T_E = latency_edge(cfg.D, float(np.sum(theta)), cfg.Ctilde, ftilde)
    T_F = cfg.D * (1.0 - theta) * cfg.Chat_k / cfg.fhat_max
    sf, _ = _scaling_for(region, cfg, thr, g_grad, g_data, theta, T_E, T_F, T_G,
                         gap_constants, baseline)
    return Allocation(theta_k=theta, fhat_k=fhat, ftilde=ftilde, sf=sf, bf=bf)


def _scaling_for(region, cfg, thr, g_grad, g_data, theta, T_E, T_F, T_G,
                 gap_constants, baseline) -> tuple[ScalingFactors, float]:
    """Scaling block: region closed forms, or the pinned baseline variants."""
    if baseline in ("mmse_ci", "max_tp"):
        sc = scaling_constants(cfg, thr, g_grad, g_data, theta)
        _check_compute_path(T_F, T_G, thr.T_max)
        if baseline == "mmse_ci":
            # full gradient power at ratio 1 minimizes the aggregation MSE
            nu = omega = sc.C5
            zeta = _zeta_closed_form(cfg, sc, T_E, thr.T_max)
        else:
            omega = sc.C5
            nu = omega / thr.eps1 ** 2 if region == "ns" else omega
            zeta = sc.C4_k.copy()
        return ScalingFactors(nu=nu, omega=omega, zeta_k=zeta), thr.T_max
    if region == "ns":
        return solve_scaling_ns(cfg, thr, g_grad, g_data, theta, T_E, T_F, T_G)
    return solve_scaling_s(cfg, thr, g_grad, g_data, theta, T_E, T_F, T_G,
                           gap_constants=gap_constants)


def run_bcd(region: str, cfg: NetworkConfig, ch: ChannelRealization,
            thr: RegionThresholds, opts: SolverOptions | None = None,
            gap_constants=None, beamformer_method: str = "dc",
            baseline: str | None = None, rng: np.random.Generator | None = None,
            ) -> tuple[Allocation, CostBreakdown, dict]:
    """Alternating minimization of the round energy for one channel draw.

    ``region`` selects the non-stable ('ns') or stable ('s') problem.
    ``baseline`` pins one block to a reference policy; ``beamformer_method``
    is 'dc', 'sdr', or 'matched' (keep the initial matched filters).
    Returns the final allocation, its cost breakdown, and a trace dict with
    the non-increasing E_all sequence.
    """
    if region not in ("ns", "s"):
        raise ValueError(f"region must be 'ns' or 's', got {region!r}")
    if baseline is not None and baseline not in BASELINES:
        raise ValueError(f"unknown baseline {baseline!r}")
    opts = opts or SolverOptions()
    if baseline == "sdr":
        baseline, beamformer_method = None, "sdr"

    alloc = initial_allocation(region, cfg, ch, thr, opts, gap_constants,
                               baseline, rng)
    costs = compute_costs(cfg, ch, alloc)
    trace = [costs.E_all]

    n_done = 0
    for n in range(opts.bcd_max_iter):
        try:
            alloc = _cycle(region, cfg, ch, thr, opts, alloc, gap_constants,
                           beamformer_method, baseline)
        except InfeasibleError as err:
            err.context["outer_iteration"] = n + 1
            raise
        costs = compute_costs(cfg, ch, alloc)
        trace.append(costs.E_all)
        n_done = n + 1
        rel = (trace[-2] - trace[-1]) / max(abs(trace[-2]), 1e-300)
        if abs(rel) < opts.tol_obj:
            break

    info = {
        "E_all_trace": trace,
        "iterations": n_done,
        "mse": mse_closed_form(cfg.K, alloc.sf.omega, alloc.sf.nu, cfg.sigma2),
        "region": region,
        "baseline": baseline,
    }
    return alloc, costs, info


def _cycle(region, cfg, ch, thr, opts, alloc: Allocation, gap_constants,
           beamformer_method, baseline) -> Allocation:
    K = cfg.K
    theta = alloc.theta_k
    bf = alloc.bf

    # 1) scaling factors
    g_grad = grad_gains(bf.b, ch.hG)
    g_data = data_gains(bf.v_k, ch.hD)
    T_E, T_F, _, T_G = _latencies(cfg, alloc)
    sf, _ = _scaling_for(region, cfg, thr, g_grad, g_data, theta, T_E, T_F, T_G,
                         gap_constants, baseline)

    # 2) beamformers (warm-started; never worse than the incoming ones)
    if beamformer_method != "matched":
        weights = beamformer_weights(cfg, theta, sf.zeta_k, sf.omega)
        solver = dc_beamformers if beamformer_method == "dc" else sdr_beamformers
        bf, _info = solver(ch.hD, ch.hG, weights.C9_k, weights.C10,
                           sf.zeta_k, sf.omega, cfg.p_max, opts, start=bf)
        g_grad = grad_gains(bf.b, ch.hG)
        g_data = data_gains(bf.v_k, ch.hD)

    # 3) CPU frequencies
    rates = np.array([uplink_rate(sf.zeta_k[k], cfg.sigma2, cfg.B) for k in range(K)])
    T_D = np.array([latency_data(cfg.D, theta[k], cfg.Cbar, rates[k]) for k in range(K)])
    if baseline == "max_cpu":
        fhat, ftilde = np.full(K, cfg.fhat_max), cfg.ftilde_max
    else:
        fhat, ftilde, _ = solve_cpu(cfg, theta, T_D, T_G, thr.T_max)

    # 4) data allocation
    if baseline != "rda":
        consts = data_alloc_constants(cfg, thr, g_data, sf.zeta_k, fhat, ftilde)
        theta, _ = solve_data_allocation(region, cfg, thr, consts, T_G,
                                         opts.lp_tol, theta_current=theta)

    return Allocation(theta_k=theta, fhat_k=fhat, ftilde=ftilde, sf=sf, bf=bf)


def baseline_allocation(kind: str, region: str, cfg: NetworkConfig,
                        ch: ChannelRealization, thr: RegionThresholds,
                        opts: SolverOptions | None = None, gap_constants=None,
                        rng: np.random.Generator | None = None,
                        beamformer_method: str = "dc"):
    """Reference allocators: one block pinned, the rest optimized as usual."""
    return run_bcd(region, cfg, ch, thr, opts, gap_constants,
                   beamformer_method=beamformer_method, baseline=kind, rng=rng)
