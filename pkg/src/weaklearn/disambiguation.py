"""Label completion: recover fully supervised labels from weak sets, then
learn with a plain supervised estimator.

Two solvers for the completion problem over C_n = prod_i S_i:

* alternate minimization with a principled embedding initialization
  (hull-relaxed: ties resolve to the centroid of the tied vertices, which
  keeps the objective monotone and lets information propagate through
  neighborhoods instead of stalling on the smallest-id vertex);
* a convexified integer-quadratic relaxation built from the eigendecomposition
  of the loss table, solved by projected gradient descent and rounded to the
  nearest feasible vertex.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import linprog

from .core import ConstraintSet, LossSpec, constraint_contains, embed_kendall, pair_index
from .mfas import MfasInstance, solve_brute, solve_lp

__all__ = [
    "DisambiguationProblem",
    "DisambiguatedLabels",
    "init_xi",
    "disambiguate_altmin",
    "disambiguate_iqp",
    "disambiguate_intervals",
    "supervised_inference",
]


@dataclass
class DisambiguationProblem:
    """Weights A[i, j] = alpha_j(x_i), per-sample constraint sets, and a loss
    with a bilinear embedding over a finite output space."""

    A: np.ndarray
    constraints: tuple[ConstraintSet, ...]
    loss: LossSpec

    def __post_init__(self):
        self.A = np.asarray(self.A, dtype=float)
        self.constraints = tuple(self.constraints)
        n = len(self.constraints)
        if self.A.shape != (n, n):
            raise ValueError("A must be n x n with n = number of constraints")
        if not np.all(np.isfinite(self.A)):
            raise ValueError("A must be finite")

    @property
    def n(self) -> int:
        return self.A.shape[0]


@dataclass
class DisambiguatedLabels:
    labels: tuple
    objective_trace: list[float]


# ---------------------------------------------------------------------------
# Initialization


def init_xi(s: ConstraintSet, loss: LossSpec) -> np.ndarray:
    """Embedding vector xi_s such that z -> <psi(z), xi_s> is minimized
    exactly on s.

    zeroOne/finite: uniform average of phi over the candidates.
    kendallPartial: observed coordinates +-1, zeros elsewhere (affine slot 1).
    multilabel box: known tags +-1, zeros on unknown tags (affine slot 1).
    table/finite:   signed-measure weights from a small LP (a uniform average
                    is not minimized on s for a general loss table).
    """
    kind = loss.kind
    if s.variant == "finite":
        if kind in ("zeroOne", "hamming", "kendall") or len(s.labels) == 1:
            vecs = [loss.phi(y) for y in s.labels]
            return np.mean(vecs, axis=0)
        if kind == "table":
            return _signed_measure_xi(s, loss)
        raise ValueError(f"unsupported loss kind {kind!r} for finite sets")
    if s.variant == "kendallPartial" and kind == "kendall":
        m = loss.space.m
        xi = np.zeros(m * (m - 1) // 2 + 1)
        for (i, j), v in s.fixed.items():
            xi[pair_index(m, i, j)] = v
        xi[-1] = 1.0
        return xi
    if s.variant == "box" and kind == "hamming":
        m = loss.space.m
        xi = np.zeros(m + 1)
        for j in range(m):
            if s.lower[j] >= 1.0:
                xi[j] = 1.0
            elif s.upper[j] <= 0.0:
                xi[j] = -1.0
        xi[-1] = 1.0
        return xi
    if s.variant == "full":
        if kind in ("zeroOne", "table"):
            return np.mean([loss.phi(y) for y in loss.space.labels()], axis=0)
        xi = np.zeros(loss.embedding_dim)
        xi[-1] = 1.0  # agnostic on every coordinate, affine slot only
        return xi
    raise ValueError(f"unsupported set kind {s.variant!r} for init_xi")


def _signed_measure_xi(s: ConstraintSet, loss: LossSpec) -> np.ndarray:
    """LP for xi = sum_y w_y phi(y) with <psi(z), xi> constant on s and
    at least margin-1 larger off s; minimizes sum |w|."""
    labels = list(loss.space.labels())
    N = len(labels)
    L = loss.table  # <psi(z), phi(y)> = L[z, y] for the table embedding
    in_s = [z for z in range(N) if constraint_contains(s, labels[z])]
    out_s = [z for z in range(N) if z not in in_s]
    # variables: w+ (N), w- (N), t (1); w = w+ - w-
    n_var = 2 * N + 1
    cost = np.concatenate([np.ones(2 * N), [0.0]])
    A_eq, b_eq, A_ub, b_ub = [], [], [], []
    for z in in_s:
        row = np.concatenate([L[z, :], -L[z, :], [-1.0]])
        A_eq.append(row)
        b_eq.append(0.0)
    for z in out_s:
        row = np.concatenate([-L[z, :], L[z, :], [1.0]])  # -(Lw - t) <= -1
        A_ub.append(row)
        b_ub.append(-1.0)
    bounds = [(0, None)] * (2 * N) + [(None, None)]
    res = linprog(
        cost,
        A_ub=np.array(A_ub) if A_ub else None,
        b_ub=np.array(b_ub) if b_ub else None,
        A_eq=np.array(A_eq),
        b_eq=np.array(b_eq),
        bounds=bounds,
        method="highs",
    )
    if not res.success:
        raise ValueError(f"no signed measure found for the set (LP: {res.message})")
    w = res.x[:N] - res.x[N : 2 * N]
    return w  # phi(y) = e_y for table losses, so xi = w


# ---------------------------------------------------------------------------
# Alternate minimization (hull-relaxed)


def _candidate_ids(space, s: ConstraintSet, labels, tol=8):
    if s.variant == "finite":
        return [space.label_id(y) for y in s.labels]
    if s.variant == "full":
        return list(range(len(labels)))
    return [k for k, y in enumerate(labels) if constraint_contains(s, y)]


def disambiguate_altmin(
    problem: DisambiguationProblem, max_iters: int = 200, tol: float = 1e-12
) -> DisambiguatedLabels:
    """Alternate minimization of  sum_ij A[i,j] <zeta_i, xi_j>  with
    zeta_i in hull psi(Y) and xi_j in hull phi(S_j).

    Each half-step minimizes a linear function blockwise, so the objective is
    nonincreasing; tied vertices are averaged (the hull relaxation).  Returns
    per-sample vertex labels (smallest id among final minimizers).
    """
    loss = problem.loss
    space = loss.space
    labels = list(space.labels())
    Psi = loss.psi_matrix()  # (N, D)
    Phi = loss.phi_matrix()
    A = problem.A
    n = problem.n
    cand = [_candidate_ids(space, s, labels) for s in problem.constraints]
    cand_mask = np.zeros((n, len(labels)), dtype=bool)
    for j, ids in enumerate(cand):
        if not ids:
            raise ValueError(f"constraint {j} admits no label")
        cand_mask[j, ids] = True

    Xi = np.array([init_xi(s, loss) for s in problem.constraints])
    Z = np.zeros((n, Psi.shape[1]))
    trace: list[float] = []
    prev_assign = None
    for _ in range(max_iters):
        # z-step: scores[i, z] = <psi(z), (A Xi)[i]>; centroid of argmin psi
        V = A @ Xi
        scores_z = V @ Psi.T
        zmin = scores_z.min(axis=1, keepdims=True)
        zmask = scores_z <= zmin + tol * np.maximum(1.0, np.abs(zmin))
        Z = (zmask @ Psi) / zmask.sum(axis=1, keepdims=True)
        # y-step: scores[j, y] = <(A^T Z)[j], phi(y)> restricted to S_j
        W = A.T @ Z
        scores_y = W @ Phi.T
        scores_y = np.where(cand_mask, scores_y, np.inf)
        ymin = scores_y.min(axis=1, keepdims=True)
        ymask = scores_y <= ymin + tol * np.maximum(1.0, np.abs(ymin))
        Xi = (ymask @ Phi) / ymask.sum(axis=1, keepdims=True)
        obj = float(np.sum((A @ Xi) * Z))
        if trace and obj > trace[-1] + 1e-9 * max(1.0, abs(trace[-1])):
            raise AssertionError("alternate-minimization objective increased")
        trace.append(obj)
        assign = (zmask.tobytes(), ymask.tobytes())
        if assign == prev_assign:
            break
        prev_assign = assign

    # final labels: smallest-id argmin vertex per sample
    W = A.T @ Z
    scores_y = np.where(cand_mask, W @ Phi.T, np.inf)
    out = []
    for j in range(n):
        row = scores_y[j]
        best = row.min()
        ties = np.flatnonzero(row <= best + tol * max(1.0, abs(best)))
        out.append(labels[int(ties[0])])
        assert constraint_contains(problem.constraints[j], labels[int(ties[0])])
    return DisambiguatedLabels(tuple(out), trace)


# ---------------------------------------------------------------------------
# Convexified quadratic relaxation


def quadratic_decomposition(loss: LossSpec):
    """Constant-norm maps with  l(y, z) = <psi(y), psi(z)> - <phi(y), phi(z)>.

    Built from the eigendecomposition of the (symmetric) loss table; a
    per-label correction coordinate pads both maps to constant squared norm
    C = max |eigenvalue| (valid because l(y, y) = 0 makes the psi and phi
    norms equal).
    """
    L = loss.table
    if not np.allclose(L, L.T, atol=1e-12):
        raise ValueError("quadratic decomposition needs a symmetric loss")
    lam, U = np.linalg.eigh(L)
    pos = np.sqrt(np.maximum(lam, 0.0))
    neg = np.sqrt(np.maximum(-lam, 0.0))
    psi_t = U * pos[None, :]  # rows indexed by label id
    phi_t = U * neg[None, :]
    C = float(np.max(np.abs(lam))) if lam.size else 0.0
    norms = np.sum(psi_t**2, axis=1)
    corr = np.sqrt(np.maximum(C - norms, 0.0))
    N = L.shape[0]
    Psi = np.hstack([psi_t, np.diag(corr)])
    Phi = np.hstack([phi_t, np.diag(corr)])
    return Psi, Phi, C


def _project_simplex(v: np.ndarray) -> np.ndarray:
    """Euclidean projection of each row of v onto the probability simplex."""
    n, k = v.shape
    u = -np.sort(-v, axis=1)
    css = np.cumsum(u, axis=1) - 1.0
    idx = np.arange(1, k + 1)
    cond = u - css / idx > 0
    rho = k - np.argmax(cond[:, ::-1], axis=1) - 1
    theta = css[np.arange(n), rho] / (rho + 1)
    return np.maximum(v - theta[:, None], 0.0)


def disambiguate_iqp(
    problem: DisambiguationProblem, max_iters: int = 200
) -> DisambiguatedLabels:
    """Convexified quadratic disambiguation.

    Minimizes tr((s I + A_s) Psi Psi^T) + tr((s I - A_s) Phi Phi^T) over the
    product of candidate hulls (s = nuclear norm of the symmetrized weights,
    making both blocks convex); projected gradient descent in the convex
    coefficients, then rounding to the nearest feasible vertex.
    """
    loss = problem.loss
    space = loss.space
    labels = list(space.labels())
    PsiV, PhiV, C = quadratic_decomposition(loss)
    A_s = (problem.A + problem.A.T) / 2.0
    n = problem.n
    s_norm = float(np.sum(np.abs(np.linalg.eigvalsh(A_s))))  # nuclear norm
    Mp = s_norm * np.eye(n) + A_s
    Mm = s_norm * np.eye(n) - A_s

    cand = [_candidate_ids(space, s, labels) for s in problem.constraints]
    K = max(len(c) for c in cand)
    # padded convex coefficients; padding columns are frozen at zero
    mu = np.zeros((n, K))
    pad = np.zeros((n, K), dtype=bool)
    for j, ids in enumerate(cand):
        mu[j, : len(ids)] = 1.0 / len(ids)
        pad[j, len(ids) :] = True
    cand_psi = np.zeros((n, K, PsiV.shape[1]))
    cand_phi = np.zeros((n, K, PhiV.shape[1]))
    for j, ids in enumerate(cand):
        cand_psi[j, : len(ids)] = PsiV[ids]
        cand_phi[j, : len(ids)] = PhiV[ids]

    vertex_sq = float(np.max(np.sum(PsiV**2, axis=1) + np.sum(PhiV**2, axis=1)))
    lip = 2.0 * _power_norm(Mp, Mm) * max(vertex_sq, 1e-12)
    step = 1.0 / lip

    def assemble(mu):
        Psi = np.einsum("jk,jkd->jd", mu, cand_psi)
        Phi = np.einsum("jk,jkd->jd", mu, cand_phi)
        return Psi, Phi

    for _ in range(max_iters):
        Psi, Phi = assemble(mu)
        Gp = 2.0 * Mp @ Psi  # d/dPsi
        Gm = 2.0 * Mm @ Phi
        grad_mu = np.einsum("jd,jkd->jk", Gp, cand_psi) + np.einsum(
            "jd,jkd->jk", Gm, cand_phi
        )
        mu = mu - step * grad_mu
        mu[pad] = -1e30  # force padding back to zero through the projection
        mu = _project_simplex(mu)
        mu[pad] = 0.0

    # round each block to the nearest feasible (psi, phi) vertex
    Psi, Phi = assemble(mu)
    out = []
    for j, ids in enumerate(cand):
        d = np.sum((PsiV[ids] - Psi[j]) ** 2, axis=1) + np.sum(
            (PhiV[ids] - Phi[j]) ** 2, axis=1
        )
        out.append(labels[ids[int(np.argmin(d))]])
    # objective trace: value of the original quadratic at the rounded vertices
    idx = [space.label_id(y) for y in out]
    val = float(np.sum(A_s * loss.table[np.ix_(idx, idx)].T))
    return DisambiguatedLabels(tuple(out), [val])


def _power_norm(Mp, Mm, iters: int = 200):
    """Spectral norm of blockdiag(Mp, Mm) by power iteration."""

    def pnorm(M):
        v = np.ones(M.shape[0]) / math.sqrt(M.shape[0])
        for _ in range(iters):
            w = M @ v
            nw = np.linalg.norm(w)
            if nw == 0:
                return 0.0
            v = w / nw
        return float(v @ (M @ v))

    return max(pnorm(Mp), pnorm(Mm), 1e-12)


# ---------------------------------------------------------------------------
# Interval (box) disambiguation for regression


def disambiguate_intervals(A: np.ndarray, constraints, max_iters: int = 100):
    """Squared-loss alternate minimization with box sets: the z-step is a
    weighted mean, the y-step clips it back into each sample's box.
    Requires nonnegative weights (e.g. k-NN or Nadaraya-Watson)."""
    A = np.asarray(A, dtype=float)
    if np.any(A < -1e-12):
        raise ValueError("interval disambiguation assumes nonnegative weights")
    lo = np.array([float(s.lower[0]) for s in constraints])
    up = np.array([float(s.upper[0]) for s in constraints])
    y = np.where(np.isfinite(up), (lo + up) / 2.0, lo)  # box midpoints
    row_sum = A.sum(axis=1)
    col_sum = A.sum(axis=0)
    trace = []
    for _ in range(max_iters):
        z = (A @ y) / np.where(row_sum > 0, row_sum, 1.0)
        target = (A.T @ z) / np.where(col_sum > 0, col_sum, 1.0)
        y_new = np.clip(target, lo, up)
        obj = float(np.sum(A * (z[:, None] - y_new[None, :]) ** 2))
        if trace and obj > trace[-1] + 1e-9 * max(1.0, abs(trace[-1])):
            break
        if trace and abs(trace[-1] - obj) <= 1e-14 * max(1.0, abs(obj)):
            y = y_new
            trace.append(obj)
            break
        y = y_new
        trace.append(obj)
    return y, trace


# ---------------------------------------------------------------------------
# Supervised inference on completed labels


def supervised_inference(weights, loss: LossSpec, labels, x):
    """f(x) = argmin_z sum_i alpha_i(x) l(z, y_i); smallest-id ties.

    For the Kendall loss the argmin is a minimum-feedback-arc-set solve; for
    other finite losses the space is scanned directly.
    """
    alpha = weights.weights_at(x) if hasattr(weights, "weights_at") else np.asarray(weights)
    if loss.kind == "kendall":
        m = loss.space.m
        v = sum(a * embed_kendall(y) for a, y in zip(alpha, labels))
        inst = MfasInstance(m, -np.asarray(v) / 2.0)
        if m <= 6:
            sigma, _ = solve_brute(inst)
        else:
            _, sigma, _ = solve_lp(inst)
        return sigma
    if loss.space.kind == "reals":
        raise ValueError("supervised_inference covers finite spaces only")
    best = None
    best_val = math.inf
    for z in loss.space.labels():
        val = sum(a * loss.eval(z, y) for a, y in zip(alpha, labels))
        if val < best_val - 1e-12:
            best, best_val = z, val
    return best
