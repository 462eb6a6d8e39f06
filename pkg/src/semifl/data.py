"""Device data partitioning and the heterogeneity measure.

Heterogeneity of a partition is the squared deviation of every device's class
proportions from uniform, summed over devices and classes; it is zero exactly
when each device holds a class-balanced sample.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ConfigError


@dataclass
class DataPartition:
    """Disjoint per-device sample index sets and their class proportions."""

    device_indices: list[np.ndarray]
    proportions: np.ndarray         # (K, C), rows sum to 1
    n_classes: int

    def __post_init__(self):
        sizes = {len(ix) for ix in self.device_indices}
        if len(sizes) != 1:
            raise ConfigError("all devices must hold the same number of samples")
        all_idx = np.concatenate(self.device_indices)
        if len(np.unique(all_idx)) != len(all_idx):
            raise ConfigError("device index sets must be disjoint")
        row_sums = self.proportions.sum(axis=1)
        if np.any(np.abs(row_sums - 1.0) > 1e-9):
            raise ConfigError("class proportions must sum to 1 per device")

    @property
    def K(self) -> int:
        return len(self.device_indices)


def heterogeneity_delta(partition: DataPartition) -> float:
    """sum_k sum_c (p_kc - 1/C)^2."""
    C = partition.n_classes
    return float(np.sum((partition.proportions - 1.0 / C) ** 2))


def partition_data(labels: np.ndarray, K: int, D: int, scheme: str = "iid",
                   alpha: float = 1.0,
                   rng: np.random.Generator | None = None) -> DataPartition:
    """Split a labeled pool into K disjoint device datasets of D samples each.

    ``iid`` deals each class round-robin so devices end up class-balanced.
    ``dirichlet`` draws per-device class proportions from Dirichlet(alpha);
    alpha = inf degenerates to uniform proportions. Rounding and pool
    exhaustion are settled greedily while keeping sizes exactly D.
    """
    labels = np.asarray(labels)
    rng = np.random.default_rng() if rng is None else rng
    classes = np.unique(labels)
    C = len(classes)
    if C < 2:
        raise ConfigError("partitioning needs at least 2 classes")
    if K * D > len(labels):
        raise ConfigError(f"need {K * D} samples but the pool has {len(labels)}")

    pools = {c: rng.permutation(np.flatnonzero(labels == c)).tolist() for c in classes}

    if scheme == "iid":
        targets = np.full((K, C), D // C, dtype=int)
        for k in range(K):                    # spread the remainder evenly
            extra = rng.permutation(C)[:D - targets[k].sum()]
            targets[k, extra] += 1
    elif scheme == "dirichlet":
        if alpha <= 0:
            raise ConfigError("dirichlet alpha must be > 0 (or inf)")
        if np.isinf(alpha):
            props = np.full((K, C), 1.0 / C)
        else:
            props = rng.dirichlet(np.full(C, alpha), size=K)
        targets = np.floor(props * D).astype(int)
        for k in range(K):                    # fix rounding to an exact D
            deficit = D - targets[k].sum()
            order = np.argsort(-(props[k] * D - targets[k]))
            targets[k, order[:deficit]] += 1
    else:
        raise ConfigError(f"unknown partition scheme {scheme!r}")

    device_indices = []
    counts = np.zeros((K, C), dtype=int)
    for k in range(K):
        taken: list[int] = []
        for ci, c in enumerate(classes):
            take = min(targets[k, ci], len(pools[c]))
            taken.extend(pools[c][:take])
            del pools[c][:take]
            counts[k, ci] = take
        short = D - len(taken)
        if short > 0:                         # exhausted classes: fill wherever stock remains
            stock = sorted(pools, key=lambda c: -len(pools[c]))
            for c in stock:
                take = min(short, len(pools[c]))
                taken.extend(pools[c][:take])
                del pools[c][:take]
                counts[k, list(classes).index(c)] += take
                short -= take
                if short == 0:
                    break
        if len(taken) != D:
            raise ConfigError("insufficient data to fill every device")
        device_indices.append(np.array(sorted(taken)))

    return DataPartition(device_indices=device_indices,
                         proportions=counts / float(D), n_classes=C)
