"""Convergence-bound evaluators and numeric constant estimation.

These functions evaluate the closed-form descent and optimality-gap bounds
that govern the two-region distortion policy: a per-round loss-reduction
floor in the non-stable region (increasing in the amplitude ratio), and an
asymptotic gap ceiling in the stable region (decreasing in the receiver
normalization). They are checked empirically on quadratic learners whose
smoothness/convexity constants are exact; for other learners the values are
advisory.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ConfigError


@dataclass
class AssumptionConstants:
    """Smoothness L, strong convexity mu, gradient second-moment bound A2,
    region boundary eps, and the contraction factor xi = L/(2 mu) - 1."""

    L: float
    mu: float
    A2: float
    eps: float
    xi: float

    def as_tuple(self):
        return (self.L, self.mu, self.A2)


def thm1_lower_bound(eta: float, mu: float, eps: float, A2: float,
                     ratio: float, rhoL: float, sigma2: float, Q: int,
                     nu: float) -> float:
    """Worst-case expected one-round loss reduction in the non-stable region:

        (eta^2/4)(2 mu eps^2 - A^2)[1 + (ratio - 1) rhoL]^2 - A^2
        + mu sigma2 Q eta^2 rhoL^2 / (4 nu)

    Requires eps >= sqrt(A2 / (2 mu)) and 0 <= rhoL <= 1.
    """
    if nu <= 0:
        raise ConfigError("nu must be > 0")
    if not 0 <= rhoL <= 1:
        raise ConfigError("rhoL must lie in [0, 1]")
    if eps < np.sqrt(A2 / (2.0 * mu)) * (1.0 - 1e-12):
        raise ConfigError("bound requires eps >= sqrt(A2 / (2 mu))")
    bracket = 1.0 + (ratio - 1.0) * rhoL
    return (eta ** 2 / 4.0) * (2.0 * mu * eps ** 2 - A2) * bracket ** 2 \
        - A2 + mu * sigma2 * Q * eta ** 2 * rhoL ** 2 / (4.0 * nu)


def cor1_lower_bound(eta: float, mu: float, eps: float, A2: float,
                     ratio: float, rhoL: float, rhoE: float, sigma: float,
                     Q: int, nu: float, omega: float, C: int, K: int,
                     delta_d: float) -> float:
    """Non-i.i.d. variant of the one-round descent floor, with the
    heterogeneity penalty -(A^2 C / K) rhoL^2 delta_d. Evaluated exactly as
    displayed (the noise term carries sigma, not sigma squared)."""
    if nu <= 0:
        raise ConfigError("nu must be > 0")
    if delta_d < 0:
        raise ConfigError("delta_d must be >= 0")
    mix = rhoL * ratio + rhoE
    return (mu ** 2 * eta ** 2 / 2.0) * mix ** 2 * eps ** 2 \
        + mu * sigma * Q * eta ** 2 * rhoL ** 2 / (4.0 * nu) \
        - (A2 * C / K) * rhoL ** 2 * delta_d \
        - (eta ** 2 * omega / (4.0 * nu) + (eta ** 2 / 4.0) * mix ** 2 + 1.0) * A2


def thm2_gap(nu: float, L: float, mu: float, A2: float, sigma2: float,
             Q: int) -> float:
    """Asymptotic optimality-gap ceiling in the stable region:
    psi(nu) = (L / mu) (1 / (4 mu - L)) (A2 + sigma2 Q / (2 nu))."""
    if 4.0 * mu <= L:
        raise ConfigError("gap bound requires 4 mu > L")
    if nu <= 0:
        raise ConfigError("nu must be > 0")
    return (L / mu) * (1.0 / (4.0 * mu - L)) * (A2 + sigma2 * Q / (2.0 * nu))


def cor2_gap(L: float, mu: float, A2: float, sigma2: float, Q: int, nu: float,
             C: int, K: int, delta_d_seq, rhoL_seq,
             horizon: int = 10_000) -> tuple[float, float]:
    """Non-i.i.d. asymptotic gap ceiling: the stationary term with denominator
    (2 mu - L) plus the geometric accumulation of heterogeneity.

    Sequences shorter than ``horizon`` are extended with their last value.
    Returns (value, remainder_bound) where the remainder bounds the truncated
    geometric tail.
    """
    xi = contraction_factor(L, mu)
    if abs(xi) >= 1:
        raise ConfigError("accumulation requires |xi| < 1 (contractive regime)")
    if 2.0 * mu <= L:
        raise ConfigError("stationary term requires 2 mu > L")
    dd = np.atleast_1d(np.asarray(delta_d_seq, dtype=float))
    rl = np.atleast_1d(np.asarray(rhoL_seq, dtype=float))
    n = max(len(dd), len(rl), 1)
    steps = max(n, horizon)
    acc = 0.0
    for t in range(steps):
        x = rl[min(t, len(rl) - 1)] ** 2 * dd[min(t, len(dd) - 1)]
        acc = xi * acc + x
    tail_x = rl[-1] ** 2 * dd[-1]
    remainder = abs(xi) ** steps * (tail_x / (1.0 - abs(xi)) + abs(acc))
    first = (L / mu) * (1.0 / (2.0 * mu - L)) * (A2 + sigma2 * Q / (2.0 * nu))
    coeff = L * A2 * C / (mu ** 2 * K)
    return first + coeff * acc, coeff * remainder


def contraction_factor(L: float, mu: float) -> float:
    """xi = L / (2 mu) - 1."""
    if mu <= 0 or L <= 0:
        raise ConfigError("L and mu must be > 0")
    return L / (2.0 * mu) - 1.0


def two_region_gap(T_prime: int, nu_low: float, nu_high: float, L: float,
                   mu: float, A2: float, sigma2: float, Q: int,
                   initial_gap: float = 1.0):
    """Asymptotic gap under the two-region policy plus the finite-round legacy
    of the low-normalization phase.

    Returns ``(limit, legacy)`` where ``limit`` depends only on nu_high and
    ``legacy(t)`` evaluates the decaying contribution of the first T_prime - 1
    rounds (amplified-distortion phase) at round t; it vanishes as t grows.
    """
    xi = contraction_factor(L, mu)
    if abs(xi) >= 1:
        raise ConfigError("two-region limit requires |xi| < 1")
    limit = thm2_gap(nu_high, L, mu, A2, sigma2, Q)
    per_round_low = (L / (2.0 * mu ** 2)) * (A2 + sigma2 * Q / (2.0 * nu_low))

    def legacy(t: int) -> float:
        if t < T_prime:
            raise ConfigError("legacy term is defined for t >= T_prime")
        # sum_{tau=1}^{T'-1} xi^{t-1-tau} x  +  xi^{t-1} * initial gap
        if xi == 0:
            geo = 0.0
        else:
            geo = sum(abs(xi) ** (t - 1 - tau) for tau in range(1, T_prime))
        return per_round_low * geo + abs(xi) ** (t - 1) * initial_gap

    return limit, legacy


def estimate_constants(hessian, grad_samples, eps: float | None = None,
                       margin: float = 1.0) -> AssumptionConstants:
    """Constants of a quadratic objective from its Hessian and sampled
    gradients.

    ``hessian`` is the full-objective Hessian (matrix or diagonal vector);
    L and mu are its extreme eigenvalues. A2 is the max squared gradient norm
    over the samples times ``margin``, so it upper-bounds every sampled value
    by construction. ``eps`` defaults to the smallest admissible boundary
    sqrt(A2 / (2 mu)).
    """
    H = np.asarray(hessian, dtype=float)
    if H.ndim == 1:
        eigs = H
    else:
        if not np.allclose(H, H.T, atol=1e-10):
            raise ConfigError("hessian must be symmetric")
        eigs = np.linalg.eigvalsh(H)
    if np.min(eigs) < 0:
        raise ConfigError("hessian must be positive semidefinite")
    L, mu = float(np.max(eigs)), float(np.min(eigs))
    grads = np.atleast_2d(np.asarray(grad_samples, dtype=float))
    A2 = float(np.max(np.sum(grads ** 2, axis=1))) * margin
    if eps is None:
        eps = float(np.sqrt(A2 / (2.0 * mu))) if mu > 0 else 0.0
    return AssumptionConstants(L=L, mu=mu, A2=A2, eps=eps,
                               xi=contraction_factor(L, mu) if mu > 0 else float("nan"))
