"""Closed-form scaling factors: tightness oracles, the feasibility law, and
derived-constant recomputation."""

import numpy as np
import pytest

from semifl.aircomp import mse_closed_form, uplink_rate
from semifl.allocator import (RegionThresholds, scaling_constants,
                              solve_scaling_ns, solve_scaling_s)
from semifl.allocator.constants import stable_scaling_constants
from semifl.costs import latency_data, latency_gradient
from semifl.errors import (GapInfeasible, InfeasibleMse, LatencyInfeasible,
                           PowerBudgetExceeded)
from semifl.netmodel import NetworkConfig
from semifl.theory import thm2_gap


def _cfg(K=20, sigma2=1e-11, **kw):
    kw.setdefault("Chat_k", np.full(K, 2e8))
    kw.setdefault("Q", 14000)
    kw.setdefault("Q1", 7000)
    return NetworkConfig(K=K, N_r=4, sigma2=sigma2, **kw)


def _gains(rng, K, scale=1.0):
    return rng.uniform(0.5, 2.0, K) * scale


def _call_ns(cfg, thr, rng, theta=None, T_E=5.0):
    theta = np.full(cfg.K, 0.15) if theta is None else theta
    g_grad = _gains(rng, cfg.K)
    g_data = _gains(rng, cfg.K)
    T_F = np.full(cfg.K, 0.3 * thr.T_max)
    T_G = latency_gradient(cfg.Q, cfg.M, cfg.T_s)
    sf, tau = solve_scaling_ns(cfg, thr, g_grad, g_data, theta, T_E, T_F, T_G)
    return sf, tau, g_data


class TestNonStableClosedForm:
    def test_hand_value(self):
        cfg = _cfg()
        thr = RegionThresholds(eps1=10.0, eps2=5.0, T_max=600.0)
        sf, _, _ = _call_ns(cfg, thr, np.random.default_rng(0))
        assert sf.nu == pytest.approx(1e-10 / 19.0, rel=1e-12)
        assert sf.omega == pytest.approx(100 * sf.nu, rel=1e-12)
        # tightness: the MSE threshold is met with equality
        assert mse_closed_form(cfg.K, sf.omega, sf.nu, cfg.sigma2) == \
            pytest.approx(thr.eps2, rel=1e-12)

    def test_infeasible_mse(self):
        cfg = _cfg()
        thr = RegionThresholds(eps1=10.0, eps2=1.0, eps4=0.5, T_max=600.0)
        with pytest.raises(InfeasibleMse):
            _call_ns(cfg, thr, np.random.default_rng(0))

    def test_ratio_one_limit(self):
        cfg = _cfg()
        thr = RegionThresholds(eps1=1.0 + 1e-9, eps2=2.0, T_max=600.0)
        sf, _, _ = _call_ns(cfg, thr, np.random.default_rng(1))
        assert sf.nu == pytest.approx(cfg.sigma2 / (2 * thr.eps2), rel=1e-6)

    def test_data_path_latency_tight(self):
        cfg = _cfg(K=5, Chat_k=np.full(5, 2e8))
        thr = RegionThresholds(eps1=2.0, eps2=2.0, T_max=300.0)
        rng = np.random.default_rng(2)
        theta = rng.uniform(0.05, 0.3, cfg.K)
        T_E = 40.0
        sf, tau, g_data = _call_ns(cfg, thr, rng, theta=theta, T_E=T_E)
        assert tau == thr.T_max
        for k in range(cfg.K):
            rate = uplink_rate(sf.zeta_k[k], cfg.sigma2, cfg.B)
            T_D = latency_data(cfg.D, theta[k], cfg.Cbar, rate)
            assert T_D + T_E == pytest.approx(thr.T_max, rel=1e-9)

    def test_power_budget_error(self):
        cfg = _cfg(K=3, Chat_k=np.full(3, 2e8))
        thr = RegionThresholds(eps1=2.0, eps2=2.0, T_max=300.0)
        rng = np.random.default_rng(3)
        # T_E so close to T_max that required rate explodes past the cap
        with pytest.raises(PowerBudgetExceeded):
            _call_ns(cfg, thr, rng, theta=np.full(3, 0.3), T_E=thr.T_max - 1e-6)

    def test_latency_infeasible(self):
        cfg = _cfg(K=3, Chat_k=np.full(3, 2e8))
        thr = RegionThresholds(eps1=2.0, eps2=2.0, T_max=300.0)
        with pytest.raises(LatencyInfeasible):
            _call_ns(cfg, thr, np.random.default_rng(4), T_E=thr.T_max + 1.0)

    def test_compute_path_over_budget(self):
        cfg = _cfg(K=3, Chat_k=np.full(3, 2e8))
        thr = RegionThresholds(eps1=2.0, eps2=2.0, T_max=300.0)
        g = np.ones(3)
        with pytest.raises(LatencyInfeasible):
            solve_scaling_ns(cfg, thr, g, g, np.full(3, 0.1), 5.0,
                             np.full(3, 299.9), 1.0)

    def test_feasibility_law_grid(self):
        # succeeds exactly when (eps1 - 1)^2 < K eps2
        rng = np.random.default_rng(5)
        for K in (2, 5, 20):
            for eps1 in (1.0, 2.0, 5.0, 10.0):
                for eps2 in (0.5, 2.0, 5.0, 12.0):
                    cfg = _cfg(K=K, Chat_k=np.full(K, 2e8))
                    thr = RegionThresholds(eps1=eps1, eps2=eps2,
                                           eps4=min(0.01, eps2 / 10), T_max=600.0)
                    should = (eps1 - 1.0) ** 2 < K * eps2
                    try:
                        _call_ns(cfg, thr, rng)
                        assert should, (K, eps1, eps2)
                    except InfeasibleMse:
                        assert not should, (K, eps1, eps2)


class TestStableClosedForm:
    def _run(self, thr, gap, K=10, sigma2=1e-11, rng=None):
        cfg = _cfg(K=K, sigma2=sigma2, Chat_k=np.full(K, 2e8))
        rng = rng or np.random.default_rng(7)
        g_grad = _gains(rng, K, 1e3)      # generous power headroom
        g_data = _gains(rng, K)
        theta = np.full(K, 0.5)
        T_F = np.full(K, 10.0)
        sf, tau = solve_scaling_s(cfg, thr, g_grad, g_data, theta, 5.0, T_F,
                                  1.0, gap_constants=gap)
        return cfg, sf, tau

    def test_mse_branch_tight(self):
        # large eps3 makes the MSE branch the binding one
        thr = RegionThresholds(eps1=2.0, eps2=5.0, eps3=1e6, eps4=0.01, T_max=600.0)
        cfg, sf, _ = self._run(thr, gap=(1.5, 1.0, 0.5))
        assert sf.nu == sf.omega
        assert mse_closed_form(cfg.K, sf.omega, sf.nu, cfg.sigma2) == \
            pytest.approx(thr.eps4, rel=1e-12)

    def test_gap_branch_tight(self):
        L, mu, A2 = 1.5, 1.0, 0.5
        floor = thm2_gap(np.inf, L, mu, A2, 1e-11, 14000)
        thr = RegionThresholds(eps1=2.0, eps2=5.0, eps3=floor * 1.0001,
                               eps4=0.9, T_max=600.0)
        cfg, sf, _ = self._run(thr, gap=(L, mu, A2))
        # the bound itself is met with equality at nu*
        assert thm2_gap(sf.nu, L, mu, A2, cfg.sigma2, cfg.Q) == \
            pytest.approx(thr.eps3, rel=1e-9)

    def test_gap_infeasible_when_target_below_floor(self):
        L, mu, A2 = 1.5, 1.0, 0.5
        floor = thm2_gap(np.inf, L, mu, A2, 1e-11, 14000)
        thr = RegionThresholds(eps1=2.0, eps2=5.0, eps3=floor * 0.99,
                               eps4=0.9, T_max=600.0)
        with pytest.raises(GapInfeasible):
            self._run(thr, gap=(L, mu, A2))

    def test_without_constants_uses_mse_branch(self):
        thr = RegionThresholds(eps1=2.0, eps2=5.0, eps4=0.02, T_max=600.0)
        cfg, sf, _ = self._run(thr, gap=None)
        assert sf.nu == pytest.approx(cfg.sigma2 / (2 * thr.eps4), rel=1e-12)

    def test_power_budget(self):
        thr = RegionThresholds(eps1=2.0, eps2=5.0, eps4=1e-9, T_max=600.0)
        cfg = _cfg(K=4, Chat_k=np.full(4, 2e8))
        g = np.full(4, 1e-6)              # weak channels, huge nu needed
        with pytest.raises(PowerBudgetExceeded):
            solve_scaling_s(cfg, thr, g, g, np.full(4, 0.5), 5.0,
                            np.full(4, 10.0), 1.0, gap_constants=None)


class TestDerivedConstants:
    def test_recompute_matches(self, rng):
        cfg = _cfg(K=6, Chat_k=np.full(6, 2e8))
        thr = RegionThresholds(eps1=3.0, eps2=4.0, T_max=500.0)
        g_grad, g_data = _gains(rng, 6), _gains(rng, 6)
        theta = rng.uniform(0.05, 0.3, 6)
        sc1 = scaling_constants(cfg, thr, g_grad, g_data, theta)
        sc2 = scaling_constants(cfg, thr, g_grad, g_data, theta)
        for name in ("C1_k", "C2_k", "C3_k", "C4_k"):
            assert np.allclose(getattr(sc1, name), getattr(sc2, name), rtol=1e-12)
        assert sc1.C5 == sc2.C5 and sc1.C7 == sc2.C7 and sc1.C8 == sc2.C8
        # spot formulas
        assert sc1.C8 == pytest.approx(cfg.K * cfg.sigma2 / 2, rel=1e-15)
        assert sc1.C5 == pytest.approx(cfg.p_max * g_grad.min(), rel=1e-15)
        st = stable_scaling_constants(cfg, thr, 1.5, 1.0, 0.5)
        assert st.C21 == pytest.approx(cfg.Q * cfg.sigma2 / 2, rel=1e-15)
        assert st.C22 == pytest.approx(1 - thr.eps4 * cfg.K, rel=1e-12)
