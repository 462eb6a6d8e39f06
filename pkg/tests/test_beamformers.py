"""DC / SDR beamformer optimization: lifting identities, grid-search oracle,
monotone penalized descent, relaxation ordering, rank recovery."""

import numpy as np
import pytest

from semifl.allocator import (SolverOptions, build_H_matrices, composite_to_complex,
                              dc_beamformers, real_composite, sdr_beamformers)
from semifl.errors import NoFeasibleStart


def unit_cvec(rng, n):
    v = rng.standard_normal(n) + 1j * rng.standard_normal(n)
    return v / np.linalg.norm(v)


def grid_objective_b(hG, c10, omega, p_max, step=0.01):
    """Exhaustive unit-sphere search for the shared beamformer (N_r = 2);
    the global phase is irrelevant so two angles parametrize the sphere."""
    phi = np.arange(0.0, np.pi / 2 + step, step)
    psi = np.arange(0.0, 2 * np.pi, step)
    P, S = np.meshgrid(phi, psi, indexing="ij")
    B = np.stack([np.cos(P), np.sin(P) * np.exp(1j * S)], axis=-1)
    gains = np.abs(np.einsum("psn,kn->psk", np.conj(B), hG)) ** 2
    feas = np.all(p_max * gains >= omega - 1e-12, axis=-1)
    obj = np.sum(c10 / gains, axis=-1)
    obj[~feas] = np.inf
    return float(obj.min())


def grid_objective_v(h, c9, zeta, p_max, step=0.01):
    phi = np.arange(0.0, np.pi / 2 + step, step)
    psi = np.arange(0.0, 2 * np.pi, step)
    P, S = np.meshgrid(phi, psi, indexing="ij")
    V = np.stack([np.cos(P), np.sin(P) * np.exp(1j * S)], axis=-1)
    gains = np.abs(np.einsum("psn,n->ps", np.conj(V), h)) ** 2
    obj = np.where(p_max * gains >= zeta - 1e-12, c9 / gains, np.inf)
    return float(obj.min())


def random_instance(rng, K=2, Nr=2):
    hD = (rng.standard_normal((K, Nr)) + 1j * rng.standard_normal((K, Nr))) / np.sqrt(2)
    hG = (rng.standard_normal((K, Nr)) + 1j * rng.standard_normal((K, Nr))) / np.sqrt(2)
    c9 = rng.uniform(0.5, 2.0, K)
    c10 = rng.uniform(0.5, 2.0)
    p_max = 10.0
    zeta = 0.3 * p_max * np.linalg.norm(hD, axis=1) ** 2
    omega = 0.2 * p_max * np.min(np.linalg.norm(hG, axis=1) ** 2)
    return hD, hG, c9, c10, zeta, omega, p_max


class TestHMatrices:
    def test_scalar_channel(self):
        H = build_H_matrices(np.array([1.0 + 0j]))
        assert np.allclose(H, np.eye(2))

    def test_quadratic_form_identity(self, rng):
        for _ in range(30):
            n = rng.integers(1, 6)
            h = rng.standard_normal(n) + 1j * rng.standard_normal(n)
            b = unit_cvec(rng, n)
            H = build_H_matrices(h)
            u = real_composite(b)
            assert u @ H @ u == pytest.approx(abs(np.vdot(b, h)) ** 2, rel=1e-12,
                                              abs=1e-12)

    def test_psd_rank_two(self, rng):
        h = rng.standard_normal(5) + 1j * rng.standard_normal(5)
        eigs = np.linalg.eigvalsh(build_H_matrices(h))
        assert eigs[0] > -1e-10
        assert np.sum(eigs > 1e-10 * eigs[-1]) <= 2

    def test_composite_roundtrip(self, rng):
        b = unit_cvec(rng, 4)
        assert np.allclose(composite_to_complex(real_composite(b)), b)


class TestDcBeamformers:
    def test_scalar_case(self):
        # K=1, N_r=1: the only unit beamformer is a phase; objective C10/|h|^2
        h = np.array([[0.7 - 0.4j]])
        bf, info = dc_beamformers(h, h, np.array([0.0]), 2.0, np.array([0.0]),
                                  0.1 * abs(h[0, 0]) ** 2, 10.0)
        assert abs(np.linalg.norm(bf.b) - 1) < 1e-9
        assert info["objective"] == pytest.approx(2.0 / abs(h[0, 0]) ** 2, rel=1e-9)

    def test_matches_grid_oracle(self):
        rng = np.random.default_rng(42)
        for _ in range(8):
            hD, hG, c9, c10, zeta, omega, p_max = random_instance(rng)
            bf, info = dc_beamformers(hD, hG, c9, c10, zeta, omega, p_max)
            oracle = grid_objective_b(hG, c10, omega, p_max) + sum(
                grid_objective_v(hD[k], c9[k], zeta[k], p_max) for k in range(2))
            assert info["objective"] == pytest.approx(oracle, rel=0.02)

    def test_penalized_traces_monotone(self):
        rng = np.random.default_rng(7)
        hD, hG, c9, c10, zeta, omega, p_max = random_instance(rng, K=3, Nr=3)
        _, info = dc_beamformers(hD, hG, c9, c10, zeta, omega, p_max)
        for tr in info["penalized_traces"]:
            tr = np.asarray(tr)
            assert np.all(np.diff(tr) <= 1e-9 * np.abs(tr[:-1]) + 1e-15)

    def test_rank_gap_closed(self):
        rng = np.random.default_rng(11)
        hD, hG, c9, c10, zeta, omega, p_max = random_instance(rng, K=3, Nr=4)
        _, info = dc_beamformers(hD, hG, c9, c10, zeta, omega, p_max)
        assert info["rank_gap"] <= 1e-6

    def test_power_constraints_hold(self):
        rng = np.random.default_rng(13)
        hD, hG, c9, c10, zeta, omega, p_max = random_instance(rng, K=4, Nr=3)
        bf, _ = dc_beamformers(hD, hG, c9, c10, zeta, omega, p_max)
        for k in range(4):
            assert p_max * abs(np.vdot(bf.b, hG[k])) ** 2 >= omega * (1 - 1e-8)
            assert p_max * abs(np.vdot(bf.v_k[k], hD[k])) ** 2 >= zeta[k] * (1 - 1e-8)

    def test_warm_start_never_worse(self):
        rng = np.random.default_rng(17)
        hD, hG, c9, c10, zeta, omega, p_max = random_instance(rng, K=3, Nr=3)
        bf1, info1 = dc_beamformers(hD, hG, c9, c10, zeta, omega, p_max)
        bf2, info2 = dc_beamformers(hD, hG, c9, c10, zeta, omega, p_max, start=bf1)
        assert info2["objective"] <= info1["objective"] * (1 + 1e-9)

    def test_infeasible_start_raises(self):
        rng = np.random.default_rng(19)
        hD, hG, c9, c10, zeta, _, p_max = random_instance(rng)
        # omega beyond any beamformer's reach: max gain is ||h||^2
        omega = 2 * p_max * max(np.linalg.norm(hG, axis=1) ** 2)
        with pytest.raises(NoFeasibleStart):
            dc_beamformers(hD, hG, c9, c10, zeta, omega, p_max)


class TestSdrBeamformers:
    def test_lower_bounds_dc(self):
        rng = np.random.default_rng(23)
        for _ in range(6):
            hD, hG, c9, c10, zeta, omega, p_max = random_instance(rng, K=2, Nr=3)
            _, dc_info = dc_beamformers(hD, hG, c9, c10, zeta, omega, p_max)
            _, sdr_info = sdr_beamformers(hD, hG, c9, c10, zeta, omega, p_max)
            assert dc_info["objective"] >= sdr_info["relaxation_value"] * (1 - 1e-6)

    def test_rank_one_instance_recovered(self):
        # single device: the relaxation optimum is the matched filter itself
        rng = np.random.default_rng(29)
        h = (rng.standard_normal((1, 3)) + 1j * rng.standard_normal((1, 3))) / np.sqrt(2)
        zeta = np.array([0.0])
        bf, info = sdr_beamformers(h, h, np.array([1.0]), 1.0, zeta,
                                   0.1 * np.linalg.norm(h) ** 2, 10.0)
        assert info["rank_gap"] <= 1e-6
        gain = abs(np.vdot(bf.b, h[0])) ** 2
        assert gain == pytest.approx(np.linalg.norm(h) ** 2, rel=1e-6)

    def test_scalar_equals_dc(self):
        h = np.array([[1.3 + 0.2j]])
        args = (h, h, np.array([0.5]), 1.5, np.array([0.05]),
                0.1 * abs(h[0, 0]) ** 2, 10.0)
        _, dc_info = dc_beamformers(*args)
        _, sdr_info = sdr_beamformers(*args)
        assert dc_info["objective"] == pytest.approx(sdr_info["objective"], rel=1e-9)
