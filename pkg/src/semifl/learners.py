"""Desk-scale synthetic learners with an explicit shallow/deep parameter split.

Each learner owns a pooled synthetic dataset of ``n`` samples and exposes
index-based operations so devices can be plain index sets. Gradients are sums
of per-sample gradients (the learning rate absorbs the sample-count scale);
reported losses are means so curves are comparable across sizes.

The split-learning flow is: devices push selected samples through the shallow
parameters and upload only the resulting intermediate outputs (plus labels);
the deep gradient is then computable at the BS from those intermediates and
the deep parameters alone.
"""

from __future__ import annotations

import numpy as np

from .errors import ConfigError


def _sigmoid(z):
    out = np.empty_like(z)
    pos = z >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-z[pos]))
    ez = np.exp(z[~pos])
    out[~pos] = ez / (1.0 + ez)
    return out


def _softplus(z):
    return np.logaddexp(0.0, z)


class QuadraticLearner:
    """Per-sample loss 0.5 (w - x)^T diag(curv) (w - x) with known curvature.

    The intermediate output of a sample is its deep-coordinate block, which is
    exactly what the deep gradient needs. Pseudo-labels from sign patterns of
    the first coordinate pair make class-based partitioning applicable.
    """

    kind = "quadratic"

    def __init__(self, dim: int, split: int, n: int, curvature=None,
                 n_classes: int = 2, spread: float = 1.0,
                 clustered: bool = False, cluster_scales=(0.5, 3.0),
                 jitter: float = 0.5,
                 rng: np.random.Generator | None = None):
        if not 0 < split < dim:
            raise ConfigError("split must satisfy 0 < split < dim")
        rng = np.random.default_rng() if rng is None else rng
        self.dim, self.split, self.n = dim, split, n
        if curvature is None:
            curvature = np.ones(dim)
        self.curv = np.asarray(curvature, dtype=float)
        if self.curv.shape != (dim,):
            raise ConfigError("curvature must be a length-dim vector")
        if np.any(self.curv < 0):
            raise ConfigError("curvature must be PSD (non-negative entries)")
        self.labels = rng.integers(0, n_classes, size=n)
        self.n_classes = n_classes
        if clustered:
            # classes with geometrically spread center norms give classes
            # genuinely distinct gradients, so label-skewed partitions bite
            scales = np.geomspace(cluster_scales[0], cluster_scales[1], n_classes)
            centers = rng.standard_normal((n_classes, dim)) * scales[:, None]
            self.X = centers[self.labels] + jitter * rng.standard_normal((n, dim))
        else:
            self.X = spread * rng.standard_normal((n, dim))
        self.w_star = self.X.mean(axis=0)

    @property
    def intermediate_dim(self) -> int:
        return self.dim - self.split

    def init_weights(self, rng: np.random.Generator) -> np.ndarray:
        return self.w_star + rng.standard_normal(self.dim)

    def grad_sum(self, w, idx) -> np.ndarray:
        Xs = self.X[idx]
        return self.curv * (len(idx) * w - Xs.sum(axis=0))

    def intermediates(self, w, idx):
        return self.X[idx][:, self.split:]

    def edge_grad_sum(self, w_deep, inter) -> np.ndarray:
        return self.curv[self.split:] * (len(inter) * w_deep - inter.sum(axis=0))

    def loss_mean(self, w, idx=None) -> float:
        Xs = self.X if idx is None else self.X[idx]
        diff = w[None, :] - Xs
        return float(0.5 * np.mean(np.sum(self.curv * diff ** 2, axis=1)))

    def accuracy(self, w, idx=None) -> float:
        return float("nan")

    def global_grad(self, w) -> np.ndarray:
        """Exact gradient of the pooled sum-form loss."""
        return self.grad_sum(w, np.arange(self.n))

    def global_hessian_diag(self) -> np.ndarray:
        return self.n * self.curv


class LogisticLearner:
    """Binary logistic regression on a two-Gaussian mixture.

    Weights cover the raw features; the shallow block holds the first
    ``split`` coordinates. A device uploads, per selected sample, the partial
    logit through the shallow block together with the deep features and the
    label; the BS completes the logit with its own deep weights.
    """

    kind = "logistic"

    def __init__(self, dim: int, split: int, n: int, separation: float = 2.0,
                 noise: float = 1.0, rng: np.random.Generator | None = None):
        if not 0 < split < dim:
            raise ConfigError("split must satisfy 0 < split < dim")
        rng = np.random.default_rng() if rng is None else rng
        self.dim, self.split, self.n = dim, split, n
        self.labels = rng.integers(0, 2, size=n)
        direction = rng.standard_normal(dim)
        direction /= np.linalg.norm(direction)
        signs = 2.0 * self.labels - 1.0
        self.X = (separation / 2.0) * signs[:, None] * direction[None, :] \
            + noise * rng.standard_normal((n, dim))
        self.n_classes = 2

    @property
    def intermediate_dim(self) -> int:
        return self.dim - self.split + 1    # deep features plus partial logit

    def init_weights(self, rng: np.random.Generator) -> np.ndarray:
        return 0.01 * rng.standard_normal(self.dim)

    def _margins(self, w, Xs):
        return Xs @ w

    def grad_sum(self, w, idx) -> np.ndarray:
        Xs = self.X[idx]
        err = _sigmoid(Xs @ w) - self.labels[idx]
        return err @ Xs

    def intermediates(self, w, idx):
        Xs = self.X[idx]
        partial = Xs[:, :self.split] @ w[:self.split]
        return partial, Xs[:, self.split:], self.labels[idx]

    def edge_grad_sum(self, w_deep, inter) -> np.ndarray:
        partial, Xd, y = inter
        err = _sigmoid(partial + Xd @ w_deep) - y
        return err @ Xd

    def loss_mean(self, w, idx=None) -> float:
        Xs = self.X if idx is None else self.X[idx]
        y = self.labels if idx is None else self.labels[idx]
        z = Xs @ w
        return float(np.mean(_softplus(z) - y * z))

    def accuracy(self, w, idx=None) -> float:
        Xs = self.X if idx is None else self.X[idx]
        y = self.labels if idx is None else self.labels[idx]
        return float(np.mean((Xs @ w > 0) == (y == 1)))


class MlpLearner:
    """One-hidden-layer tanh network with softmax output on class blobs.

    Shallow block: input-to-hidden weights and biases. Deep block:
    hidden-to-output. Intermediate outputs are the hidden activations.
    """

    kind = "mlp"

    def __init__(self, in_dim: int = 8, hidden: int = 16, n_classes: int = 10,
                 n: int = 2000, spread: float = 0.6,
                 rng: np.random.Generator | None = None):
        rng = np.random.default_rng() if rng is None else rng
        self.in_dim, self.hidden, self.n_classes, self.n = in_dim, hidden, n_classes, n
        self.split = hidden * (in_dim + 1)
        self.dim = self.split + n_classes * (hidden + 1)
        self.labels = rng.integers(0, n_classes, size=n)
        angles = 2.0 * np.pi * self.labels / n_classes
        centers = np.zeros((n, in_dim))
        centers[:, 0] = 2.0 * np.cos(angles)
        centers[:, 1] = 2.0 * np.sin(angles)
        if in_dim > 2:
            extra = rng.standard_normal((n_classes, in_dim - 2))
            centers[:, 2:] = extra[self.labels]
        self.X = centers + spread * rng.standard_normal((n, in_dim))

    @property
    def intermediate_dim(self) -> int:
        return self.hidden + 1              # activations plus label

    def init_weights(self, rng: np.random.Generator) -> np.ndarray:
        w1 = rng.standard_normal((self.hidden, self.in_dim)) / np.sqrt(self.in_dim)
        b1 = np.zeros(self.hidden)
        w2 = rng.standard_normal((self.n_classes, self.hidden)) / np.sqrt(self.hidden)
        b2 = np.zeros(self.n_classes)
        return np.concatenate([w1.ravel(), b1, w2.ravel(), b2])

    def _unpack(self, w):
        h, d, c = self.hidden, self.in_dim, self.n_classes
        w1 = w[:h * d].reshape(h, d)
        b1 = w[h * d:h * (d + 1)]
        deep = w[self.split:]
        w2 = deep[:c * h].reshape(c, h)
        b2 = deep[c * h:]
        return w1, b1, w2, b2

    def _forward(self, w, Xs):
        w1, b1, w2, b2 = self._unpack(w)
        hid = np.tanh(Xs @ w1.T + b1)
        logits = hid @ w2.T + b2
        logits -= logits.max(axis=1, keepdims=True)
        p = np.exp(logits)
        p /= p.sum(axis=1, keepdims=True)
        return hid, p

    def grad_sum(self, w, idx) -> np.ndarray:
        Xs, y = self.X[idx], self.labels[idx]
        w1, b1, w2, b2 = self._unpack(w)
        hid, p = self._forward(w, Xs)
        delta = p.copy()
        delta[np.arange(len(y)), y] -= 1.0            # (n, C)
        dw2 = delta.T @ hid
        db2 = delta.sum(axis=0)
        back = (delta @ w2) * (1.0 - hid ** 2)        # (n, hidden)
        dw1 = back.T @ Xs
        db1 = back.sum(axis=0)
        return np.concatenate([dw1.ravel(), db1, dw2.ravel(), db2])

    def intermediates(self, w, idx):
        w1, b1, _, _ = self._unpack(w)
        hid = np.tanh(self.X[idx] @ w1.T + b1)
        return hid, self.labels[idx]

    def edge_grad_sum(self, w_deep, inter) -> np.ndarray:
        hid, y = inter
        c, h = self.n_classes, self.hidden
        w2 = w_deep[:c * h].reshape(c, h)
        b2 = w_deep[c * h:]
        logits = hid @ w2.T + b2
        logits -= logits.max(axis=1, keepdims=True)
        p = np.exp(logits)
        p /= p.sum(axis=1, keepdims=True)
        delta = p
        delta[np.arange(len(y)), y] -= 1.0
        return np.concatenate([(delta.T @ hid).ravel(), delta.sum(axis=0)])

    def loss_mean(self, w, idx=None) -> float:
        sel = np.arange(self.n) if idx is None else np.asarray(idx)
        _, p = self._forward(w, self.X[sel])
        y = self.labels[sel]
        return float(-np.mean(np.log(p[np.arange(len(y)), y] + 1e-300)))

    def accuracy(self, w, idx=None) -> float:
        sel = np.arange(self.n) if idx is None else np.asarray(idx)
        _, p = self._forward(w, self.X[sel])
        return float(np.mean(p.argmax(axis=1) == self.labels[sel]))


def make_learner(spec: dict, rng: np.random.Generator):
    """Build a learner from its config block."""
    kind = spec.get("kind", "logistic")
    if kind == "quadratic":
        return QuadraticLearner(
            dim=spec.get("dim", 50), split=spec.get("split", 25),
            n=spec["n"], curvature=spec.get("curvature"),
            n_classes=spec.get("n_classes", 2),
            spread=spec.get("spread", 1.0),
            clustered=spec.get("clustered", False),
            cluster_scales=tuple(spec.get("cluster_scales", (0.5, 3.0))),
            jitter=spec.get("jitter", 0.5), rng=rng)
    if kind == "logistic":
        return LogisticLearner(
            dim=spec.get("dim", 20), split=spec.get("split", 10),
            n=spec["n"], separation=spec.get("separation", 2.0),
            noise=spec.get("noise", 1.0), rng=rng)
    if kind == "mlp":
        return MlpLearner(
            in_dim=spec.get("in_dim", 8), hidden=spec.get("hidden", 16),
            n_classes=spec.get("n_classes", 10), n=spec["n"],
            spread=spec.get("spread", 0.6), rng=rng)
    raise ConfigError(f"unknown learner kind {kind!r}", field="learner.kind")
