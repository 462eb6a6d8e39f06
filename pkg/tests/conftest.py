import numpy as np
import pytest

from semifl.netmodel import NetworkConfig


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


@pytest.fixture
def small_cfg():
    """Table-2-scale network at toy size: 4 devices, 3 antennas."""
    return NetworkConfig(K=4, N_r=3, Q=140, Q1=70, D=120, B=1e4,
                         sigma2=1e-11, T_s=1e-3, M=14,
                         Chat_k=np.linspace(1.5e8, 2.8e8, 4), Cbar=100.0)


def unit(v):
    return v / np.linalg.norm(v)
