"""Receive-beamformer optimization via DC programming over the PSD cone.

Complex beamformers are lifted to real rank-one matrices (real/imaginary
composite), the rank-one constraint is rewritten as trace minus spectral norm
equal to zero, and its linearization around the current iterate is added to
the objective as a penalty. Each resulting convex subproblem is solved by
projected gradient descent on {X PSD, tr X = 1, power floors}; the projection
is an eigenvalue simplex projection, combined with halfspace corrections via
Dykstra's scheme when a power floor is active. Dropping the penalty and
keeping the same machinery yields the SDR relaxation, whose value lower
bounds every rank-one feasible objective.

The subproblem separates across matrices: each data beamformer V_k sees only
its own channel and the shared power floor, and the gradient beamformer B
sees all K gradient channels.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..aircomp import Beamformers
from ..errors import InnerSolverFailure, NoFeasibleStart
from .types import SolverOptions

_FEAS_TOL = 1e-9        # relative slack tolerated on power floors


def build_H_matrices(h: np.ndarray) -> np.ndarray:
    """Real 2N x 2N quadratic-form matrix with tr(B H) = |b^H h|^2 for the
    real composite B of b. PSD with rank at most 2."""
    h = np.asarray(h, dtype=complex)
    hr, hi = h.real, h.imag
    a = np.outer(hr, hr) + np.outer(hi, hi)
    c = np.outer(hr, hi) - np.outer(hi, hr)
    return np.block([[a, c], [-c, a]])


def real_composite(b: np.ndarray) -> np.ndarray:
    """Stack real and imaginary parts of a complex vector."""
    b = np.asarray(b, dtype=complex)
    return np.concatenate([b.real, b.imag])


def composite_to_complex(u: np.ndarray) -> np.ndarray:
    n = len(u) // 2
    return u[:n] + 1j * u[n:]


def _canonical_sign(u: np.ndarray) -> np.ndarray:
    """Fix the sign ambiguity of an eigenvector deterministically: flip so the
    vector compares lexicographically greater than its negation."""
    for x in u:
        if abs(x) > 1e-14:
            return u if x > 0 else -u
    return u


def _simplex_projection(v: np.ndarray) -> np.ndarray:
    """Euclidean projection of a vector onto the probability simplex."""
    u = np.sort(v)[::-1]
    css = np.cumsum(u) - 1.0
    rho = np.nonzero(u - css / np.arange(1, len(v) + 1) > 0)[0][-1]
    tau = css[rho] / (rho + 1.0)
    return np.maximum(v - tau, 0.0)


def _project_spectrahedron(X: np.ndarray) -> np.ndarray:
    """Projection onto {X PSD, tr X = 1}: clip eigenvalues to the simplex."""
    X = 0.5 * (X + X.T)
    vals, vecs = np.linalg.eigh(X)
    return (vecs * _simplex_projection(vals)) @ vecs.T


@dataclass
class _MatrixProblem:
    """min sum_j c_j / tr(X G_j) over {X PSD, tr X = 1, tr(X G_j) >= w_j}."""

    G: list[np.ndarray]
    c: np.ndarray
    w: np.ndarray

    def traces(self, X: np.ndarray) -> np.ndarray:
        return np.array([float(np.tensordot(X, G, axes=2)) for G in self.G])

    def f_obj(self, X: np.ndarray) -> float:
        t = self.traces(X)
        active = self.c > 0
        if np.any(t[active] <= 0):
            return np.inf
        return float(np.sum(self.c[active] / t[active]))

    def grad(self, X: np.ndarray) -> np.ndarray:
        t = self.traces(X)
        g = np.zeros_like(X)
        for cj, tj, Gj in zip(self.c, t, self.G):
            if cj > 0:
                g -= (cj / tj ** 2) * Gj
        return g

    def feasible(self, X: np.ndarray, tol: float = _FEAS_TOL) -> bool:
        t = self.traces(X)
        floor = self.w * (1.0 - tol) - tol * np.max(np.abs(self.w), initial=0.0)
        return bool(np.all(t >= floor))

    def project(self, X: np.ndarray, max_cycles: int = 60) -> np.ndarray:
        """Projection onto the feasible set; Dykstra over the spectrahedron
        and the violated power-floor halfspaces."""
        Y = _project_spectrahedron(X)
        if self.feasible(Y):
            return Y
        sets = [None] + [j for j in range(len(self.G)) if self.w[j] > 0]
        incr = [np.zeros_like(X) for _ in sets]
        Z = X.copy()
        for _ in range(max_cycles):
            for i, j in enumerate(sets):
                W = Z + incr[i]
                if j is None:
                    Z = _project_spectrahedron(W)
                else:
                    t = float(np.tensordot(W, self.G[j], axes=2))
                    if t < self.w[j]:
                        Z = W + ((self.w[j] - t) / np.sum(self.G[j] ** 2)) * self.G[j]
                    else:
                        Z = W
                incr[i] = W - Z
            if self.feasible(Z) and abs(np.trace(Z) - 1.0) < 1e-10:
                evals = np.linalg.eigvalsh(Z)
                if evals[0] > -1e-10:
                    return _project_spectrahedron(Z)
        return _project_spectrahedron(Z)


def _solve_inner(prob: _MatrixProblem, X0: np.ndarray, P: np.ndarray,
                 opts: SolverOptions) -> tuple[np.ndarray, float]:
    """Projected gradient with backtracking for min f_obj(X) - tr(X P) over
    the feasible set. Only accepts descent steps, so the returned objective
    never exceeds the starting one."""

    def f(X):
        val = prob.f_obj(X)
        return val if np.isinf(val) else val - float(np.tensordot(X, P, axes=2))

    X = X0
    fX = f(X)
    if np.isinf(fX):
        raise InnerSolverFailure("inner solver started at an invalid point")
    step = 1.0
    stall = 0
    for _ in range(opts.inner_max_iter):
        g = prob.grad(X) - P
        gnorm = np.linalg.norm(g)
        if gnorm == 0:
            break
        t = step / gnorm
        accepted = False
        for _ in range(40):
            Xc = prob.project(X - t * g)
            fc = f(Xc)
            if fc < fX:
                accepted = True
                break
            t *= 0.5
        if not accepted:
            break
        rel = (fX - fc) / max(abs(fX), 1e-300)
        X, fX = Xc, fc
        step = min(t * gnorm * 2.0, 1e6)
        stall = stall + 1 if rel < opts.inner_tol else 0
        if stall >= 3:
            break
    return X, fX


def _rank_gap(X: np.ndarray) -> float:
    return float(np.trace(X) - np.linalg.eigvalsh(X)[-1])


def _dc_single(prob: _MatrixProblem, X0: np.ndarray, opts: SolverOptions,
               ) -> tuple[np.ndarray, list[float], float]:
    """Run the DC loop on one matrix variable.

    Returns the final matrix, the exact penalized-objective trace of the last
    penalty level (monotone non-increasing), and the rank gap at termination.
    The penalty weight starts at beta scaled by the starting objective and is
    escalated (restarting the trace) if the gap has not closed at convergence.
    """
    X = prob.project(X0)
    f0 = prob.f_obj(X)
    beta_eff = opts.beta * (f0 if f0 > 0 else 1.0)

    trace: list[float] = []
    for _escalation in range(4):
        def pen(Xm):
            return prob.f_obj(Xm) + beta_eff * (float(np.trace(Xm))
                                                - float(np.linalg.eigvalsh(Xm)[-1]))

        trace = [pen(X)]
        for _ in range(opts.dc_max_iter):
            vals, vecs = np.linalg.eigh(X)
            u = _canonical_sign(vecs[:, -1])
            X, _ = _solve_inner(prob, X, beta_eff * np.outer(u, u), opts)
            trace.append(pen(X))
            rel = (trace[-2] - trace[-1]) / max(abs(trace[-2]), 1e-300)
            if rel < opts.tol_obj:
                break
        if _rank_gap(X) <= opts.tol_rank:
            break
        beta_eff *= 10.0
    return X, trace, _rank_gap(X)


def _recover(X: np.ndarray) -> np.ndarray:
    vals, vecs = np.linalg.eigh(X)
    u = _canonical_sign(vecs[:, -1])
    v = composite_to_complex(u)
    return v / np.linalg.norm(v)


def _start_matrix(prob: _MatrixProblem, candidates: list[np.ndarray]):
    """First rank-one candidate satisfying the power floors."""
    for u in candidates:
        X = np.outer(u, u)
        if prob.feasible(X):
            return X, u
    raise NoFeasibleStart(
        "no candidate beamformer satisfies the power floors",
        floors=list(np.asarray(prob.w, dtype=float)))


def _gram_eigvec(h_list: np.ndarray) -> np.ndarray:
    """Leading eigenvector of sum_k h_k h_k^H; a robust shared beamformer."""
    gram = np.einsum("ki,kj->ij", h_list, np.conj(h_list))
    _, vecs = np.linalg.eigh(gram)
    v = vecs[:, -1]
    return v / np.linalg.norm(v)


def _maxmin_start(prob: _MatrixProblem, X0: np.ndarray, iters: int = 300):
    """Feasible matrix via projected subgradient ascent on the worst power
    floor margin; returns None when no margin-positive point is found."""
    X = _project_spectrahedron(X0)
    scale = max(float(np.linalg.norm(G)) for G in prob.G)
    best, best_margin = X, -np.inf
    for it in range(iters):
        t = prob.traces(X)
        margins = t - prob.w
        j = int(np.argmin(margins))
        if margins[j] > best_margin:
            best, best_margin = X, margins[j]
        if best_margin > 1e-12:
            d = prob.traces(best) - prob.w
            if np.all(d >= 0):
                return best
        X = _project_spectrahedron(X + (0.5 / (scale * (1.0 + it / 20.0))) * prob.G[j])
    return best if prob.feasible(best) else None


def dc_beamformers(hD: np.ndarray, hG: np.ndarray, c9_k: np.ndarray, c10: float,
                   zeta_k: np.ndarray, omega: float, p_max: float,
                   opts: SolverOptions | None = None,
                   start: Beamformers | None = None):
    """Optimize all receive beamformers for the current scaling/data blocks.

    Returns ``(Beamformers, info)`` where ``info`` carries the uplink-energy
    objective at the recovered unit-norm beamformers, the per-matrix penalized
    traces (each monotone non-increasing), and the worst rank gap. When a
    feasible ``start`` is given the result is never worse than it.
    """
    opts = opts or SolverOptions()
    hD = np.atleast_2d(hD)
    hG = np.atleast_2d(hG)
    K = hD.shape[0]
    c9_k = np.asarray(c9_k, dtype=float)
    zeta_k = np.asarray(zeta_k, dtype=float)

    HD = [build_H_matrices(hD[k]) for k in range(K)]
    HG = [build_H_matrices(hG[k]) for k in range(K)]

    traces: list[list[float]] = []
    gaps: list[float] = []

    # data beamformers: one single-channel problem per device
    v_out = np.empty((K, hD.shape[1]), dtype=complex)
    for k in range(K):
        prob = _MatrixProblem(G=[HD[k]], c=np.array([c9_k[k]]),
                              w=np.array([zeta_k[k] / p_max]))
        cands = []
        if start is not None:
            cands.append(real_composite(start.v_k[k]))
        cands.append(real_composite(hD[k] / np.linalg.norm(hD[k])))
        X0, u0 = _start_matrix(prob, cands)
        X, tr_k, gap = _dc_single(prob, X0, opts)
        v = _recover(X)
        Xr = np.outer(real_composite(v), real_composite(v))
        if not prob.feasible(Xr, tol=1e-8) or prob.f_obj(Xr) > prob.f_obj(np.outer(u0, u0)):
            v = composite_to_complex(u0)    # recovered point no better than start
            tr_k, gap = [prob.f_obj(np.outer(u0, u0))], 0.0
        v_out[k] = v
        traces.append(tr_k)
        gaps.append(gap)

    # gradient beamformer: shared across devices, multistart
    prob_b = _MatrixProblem(G=HG, c=np.full(K, c10),
                            w=np.full(K, omega / p_max))
    b_cands = []
    if start is not None:
        b_cands.append(real_composite(start.b))
    b_cands.append(real_composite(_gram_eigvec(hG)))
    weakest = int(np.argmin(np.linalg.norm(hG, axis=1)))
    b_cands.append(real_composite(hG[weakest] / np.linalg.norm(hG[weakest])))

    starts = [np.outer(u, u) for u in b_cands if prob_b.feasible(np.outer(u, u))]
    fallback_obj = np.inf
    if starts and start is not None:
        fallback_obj = prob_b.f_obj(starts[0])     # warm start is never beaten
    if not starts:
        X_mm = _maxmin_start(prob_b, np.outer(b_cands[-1], b_cands[-1]))
        if X_mm is None:
            raise NoFeasibleStart(
                "no candidate gradient beamformer satisfies the power floors",
                omega=omega, p_max=p_max)
        starts = [X_mm]

    best = None
    for X0 in starts:
        X, tr_b, gap = _dc_single(prob_b, X0, opts)
        b = _recover(X)
        Xr = np.outer(real_composite(b), real_composite(b))
        obj = prob_b.f_obj(Xr) if prob_b.feasible(Xr, tol=1e-8) else np.inf
        if best is None or obj < best[1]:
            best = (b, obj, tr_b, gap)
    if start is not None and fallback_obj < best[1]:
        best = (start.b, fallback_obj, [fallback_obj], 0.0)
    if np.isinf(best[1]):
        raise InnerSolverFailure(
            "DC iteration failed to recover a feasible gradient beamformer")
    b, b_obj, tr_b, gap_b = best
    traces.append(tr_b)
    gaps.append(gap_b)

    bf = Beamformers(b=b, v_k=v_out)
    info = {
        "objective": _p6_objective(bf, HD, HG, c9_k, c10),
        "penalized_traces": traces,
        "rank_gap": float(max(gaps)),
    }
    return bf, info


def sdr_beamformers(hD: np.ndarray, hG: np.ndarray, c9_k: np.ndarray, c10: float,
                    zeta_k: np.ndarray, omega: float, p_max: float,
                    opts: SolverOptions | None = None,
                    start: Beamformers | None = None):
    """Rank-relaxed variant: solve the convex problems without the rank-one
    penalty and recover beamformers from leading eigenvectors.

    ``info['relaxation_value']`` is the optimal value of the relaxation; it
    lower-bounds the objective of every rank-one feasible beamformer set.
    """
    opts = opts or SolverOptions()
    hD = np.atleast_2d(hD)
    hG = np.atleast_2d(hG)
    K = hD.shape[0]
    c9_k = np.asarray(c9_k, dtype=float)
    zeta_k = np.asarray(zeta_k, dtype=float)

    HD = [build_H_matrices(hD[k]) for k in range(K)]
    HG = [build_H_matrices(hG[k]) for k in range(K)]

    relax_value = 0.0
    gaps = []
    v_out = np.empty((K, hD.shape[1]), dtype=complex)
    for k in range(K):
        prob = _MatrixProblem(G=[HD[k]], c=np.array([c9_k[k]]),
                              w=np.array([zeta_k[k] / p_max]))
        cands = []
        if start is not None:
            cands.append(real_composite(start.v_k[k]))
        cands.append(real_composite(hD[k] / np.linalg.norm(hD[k])))
        X0, _ = _start_matrix(prob, cands)
        X, fX = _solve_inner(prob, X0, np.zeros_like(X0), opts)
        relax_value += fX
        gaps.append(_rank_gap(X))
        v_out[k] = _recover(X)

    prob_b = _MatrixProblem(G=HG, c=np.full(K, c10), w=np.full(K, omega / p_max))
    cands = []
    if start is not None:
        cands.append(real_composite(start.b))
    cands.append(real_composite(_gram_eigvec(hG)))
    weakest = int(np.argmin(np.linalg.norm(hG, axis=1)))
    cands.append(real_composite(hG[weakest] / np.linalg.norm(hG[weakest])))
    try:
        X0, _ = _start_matrix(prob_b, cands)
    except NoFeasibleStart:
        X0 = _maxmin_start(prob_b, np.outer(cands[-1], cands[-1]))
        if X0 is None:
            raise
    X, fX = _solve_inner(prob_b, X0, np.zeros_like(X0), opts)
    relax_value += fX
    gaps.append(_rank_gap(X))
    b = _recover(X)

    bf = Beamformers(b=b, v_k=v_out)
    info = {
        "objective": _p6_objective(bf, HD, HG, c9_k, c10),
        "relaxation_value": float(relax_value),
        "rank_gap": float(max(gaps)),
    }
    return bf, info


def _p6_objective(bf: Beamformers, HD, HG, c9_k, c10) -> float:
    """Uplink-energy objective evaluated at unit-norm beamformers."""
    total = 0.0
    for k, H in enumerate(HD):
        if c9_k[k] > 0:
            u = real_composite(bf.v_k[k])
            total += c9_k[k] / float(u @ H @ u)
    ub = real_composite(bf.b)
    for H in HG:
        if c10 > 0:
            total += c10 / float(ub @ H @ ub)
    return float(total)
