"""Block-coordinate descent: monotone energy, constraint satisfaction,
baseline behavior, error context."""

import numpy as np
import pytest

from semifl.aircomp import mse_closed_form
from semifl.allocator import (RegionThresholds, SolverOptions, baseline_allocation,
                              initial_allocation, run_bcd)
from semifl.costs import compute_costs
from semifl.errors import InfeasibleError, InfeasibleMse
from semifl.netmodel import NetworkConfig, sample_channels


def _setup(seed, K=3, Nr=3, T_max=1000.0, eps1=3.0, eps2=4.0):
    cfg = NetworkConfig(K=K, N_r=Nr, Q=1400, Q1=700, D=400,
                        Chat_k=np.linspace(1.5e8, 2.8e8, K))
    thr = RegionThresholds(eps1=eps1, eps2=eps2, eps3=0.8, eps4=0.01, T_max=T_max)
    ch = sample_channels(cfg, "rayleigh", rng=np.random.default_rng(seed))
    opts = SolverOptions(bcd_max_iter=4, dc_max_iter=8, inner_max_iter=120)
    return cfg, thr, ch, opts


class TestRunBcd:
    def test_descent_from_initial_point(self):
        cfg, thr, ch, opts = _setup(0)
        alloc0 = initial_allocation("ns", cfg, ch, thr, opts)
        e0 = compute_costs(cfg, ch, alloc0).E_all
        _, costs, info = run_bcd("ns", cfg, ch, thr, opts)
        assert costs.E_all <= e0 * (1 + 1e-12)
        trace = np.asarray(info["E_all_trace"])
        assert np.all(np.diff(trace) <= 1e-8 * np.abs(trace[:-1]) + 1e-30)

    def test_final_constraints_ns(self):
        cfg, thr, ch, opts = _setup(1)
        alloc, costs, info = run_bcd("ns", cfg, ch, thr, opts)
        assert info["mse"] == pytest.approx(thr.eps2, rel=1e-9)
        assert costs.T_all <= thr.T_max + 1e-9
        assert alloc.sf.amplitude_ratio == pytest.approx(thr.eps1, rel=1e-12)
        assert np.all(alloc.theta_k <= thr.theta_max + 1e-9)
        assert np.all(alloc.fhat_k <= cfg.fhat_max * (1 + 1e-12))
        assert alloc.ftilde <= cfg.ftilde_max * (1 + 1e-12)

    def test_final_constraints_s(self):
        cfg, thr, ch, opts = _setup(2)
        alloc, costs, info = run_bcd("s", cfg, ch, thr, opts,
                                     gap_constants=(1.5, 1.0, 0.5))
        assert info["mse"] <= thr.eps4 * (1 + 1e-9)
        assert alloc.sf.nu == alloc.sf.omega
        assert costs.T_all <= thr.T_max + 1e-9
        assert np.all(alloc.theta_k >= thr.theta_min - 1e-9)

    def test_objective_recompute_matches(self):
        cfg, thr, ch, opts = _setup(3)
        alloc, costs, info = run_bcd("ns", cfg, ch, thr, opts)
        again = compute_costs(cfg, ch, alloc)
        assert again.E_all == pytest.approx(info["E_all_trace"][-1], rel=1e-9)
        assert again.E_all == pytest.approx(costs.E_all, rel=1e-12)

    def test_dominates_baselines(self):
        for seed in (4, 5):
            cfg, thr, ch, opts = _setup(seed, K=4)
            _, costs, _ = run_bcd("ns", cfg, ch, thr, opts)
            for kind in ("max_tp", "max_cpu", "rda"):
                _, bc, _ = baseline_allocation(kind, "ns", cfg, ch, thr, opts,
                                               rng=np.random.default_rng(99))
                assert costs.E_all <= bc.E_all * (1 + 1e-9), (seed, kind)

    def test_error_carries_outer_iteration_and_context(self):
        cfg, thr, ch, opts = _setup(6, eps1=10.0, eps2=1.0)
        with pytest.raises(InfeasibleMse) as exc:
            run_bcd("ns", cfg, ch, thr, opts)
        assert "eps1" in exc.value.context

    def test_dc_beamformer_path(self):
        cfg, thr, ch, opts = _setup(7)
        _, costs_mf, _ = run_bcd("ns", cfg, ch, thr, opts,
                                 beamformer_method="matched")
        _, costs_dc, info = run_bcd("ns", cfg, ch, thr, opts,
                                    beamformer_method="dc")
        trace = np.asarray(info["E_all_trace"])
        assert np.all(np.diff(trace) <= 1e-8 * np.abs(trace[:-1]) + 1e-30)
        assert costs_dc.E_all <= costs_mf.E_all * (1 + 1e-6)


class TestBaselines:
    def test_mmse_ci_unit_ratio(self):
        cfg, thr, ch, opts = _setup(8)
        alloc, _, _ = baseline_allocation("mmse_ci", "ns", cfg, ch, thr, opts,
                                          beamformer_method="matched")
        assert alloc.sf.amplitude_ratio == pytest.approx(1.0, rel=1e-12)
        # nu at the largest power-feasible value: the weakest gradient gain cap
        gains = np.abs(ch.hG @ np.conj(alloc.bf.b)) ** 2
        assert alloc.sf.nu == pytest.approx(cfg.p_max * gains.min(), rel=1e-9)

    def test_max_tp_power_caps(self):
        cfg, thr, ch, opts = _setup(9)
        alloc, _, _ = baseline_allocation("max_tp", "ns", cfg, ch, thr, opts,
                                          beamformer_method="matched")
        g_data = np.abs(np.sum(np.conj(alloc.bf.v_k) * ch.hD, axis=1)) ** 2
        assert np.allclose(alloc.sf.zeta_k, cfg.p_max * g_data, rtol=1e-9)
        g_grad = np.abs(ch.hG @ np.conj(alloc.bf.b)) ** 2
        assert alloc.sf.omega == pytest.approx(cfg.p_max * g_grad.min(), rel=1e-9)

    def test_max_cpu_frequency_caps(self):
        cfg, thr, ch, opts = _setup(10)
        alloc, _, _ = baseline_allocation("max_cpu", "ns", cfg, ch, thr, opts)
        assert np.allclose(alloc.fhat_k, cfg.fhat_max)
        assert alloc.ftilde == cfg.ftilde_max

    def test_rda_reproducible(self):
        cfg, thr, ch, opts = _setup(11)
        a1, _, _ = baseline_allocation("rda", "ns", cfg, ch, thr, opts,
                                       rng=np.random.default_rng(5))
        a2, _, _ = baseline_allocation("rda", "ns", cfg, ch, thr, opts,
                                       rng=np.random.default_rng(5))
        assert np.array_equal(a1.theta_k, a2.theta_k)
        assert np.all(a1.theta_k <= thr.theta_max) and np.all(a1.theta_k >= 0)

    def test_sdr_runs(self):
        cfg, thr, ch, opts = _setup(12)
        alloc, costs, _ = baseline_allocation("sdr", "ns", cfg, ch, thr, opts)
        assert costs.T_all <= thr.T_max + 1e-9


class TestInitialAllocation:
    def test_feasible_point(self):
        for region in ("ns", "s"):
            cfg, thr, ch, opts = _setup(13)
            gap = (1.5, 1.0, 0.5) if region == "s" else None
            alloc = initial_allocation(region, cfg, ch, thr, opts,
                                       gap_constants=gap)
            costs = compute_costs(cfg, ch, alloc)
            assert costs.T_all <= thr.T_max * (1 + 1e-9)
            assert mse_closed_form(cfg.K, alloc.sf.omega, alloc.sf.nu, cfg.sigma2) \
                <= (thr.eps2 if region == "ns" else thr.eps4) * (1 + 1e-9)

    def test_theta_within_region_box(self):
        cfg, thr, ch, opts = _setup(14)
        a_ns = initial_allocation("ns", cfg, ch, thr, opts)
        assert np.all(a_ns.theta_k <= thr.theta_max + 1e-12)
        a_s = initial_allocation("s", cfg, ch, thr, opts, gap_constants=None)
        assert np.all(a_s.theta_k >= thr.theta_min - 1e-12)
