"""Kernelized Laplacian semi-supervised regularization.

Builds reduced empirical operators from kernel values and kernel derivatives
at p anchor points, solves the generalized eigenproblem of (covariance,
Dirichlet-energy + mu * metric), applies a spectral filter (Tikhonov or hard
cutoff), and predicts by kernel expansion over the anchors.  A classical
graph-Laplacian harmonic interpolation is included as the baseline.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.linalg

from .kernels import GaussianKernel, NystromAnchors, derivative_cross, jittered_cholesky

__all__ = [
    "LaplacianOperators",
    "SpectralFilter",
    "SpectralModel",
    "build_operators",
    "gevd",
    "fit_spectral",
    "first_eigenfunctions",
    "graph_laplacian_baseline",
]


@dataclass(frozen=True)
class LaplacianOperators:
    A: np.ndarray  # (1/n) K_np^T K_np        -- reduced covariance
    B: np.ndarray  # (1/n) Z^T Z              -- reduced Dirichlet energy
    G: np.ndarray  # K_pp                     -- anchor metric

    def __post_init__(self):
        for M in (self.A, self.B, self.G):
            if not np.allclose(M, M.T, atol=1e-10):
                raise ValueError("operators must be symmetric")


@dataclass(frozen=True)
class SpectralFilter:
    kind: str  # "tikhonov" | "cutoff"
    lam: float

    def __post_init__(self):
        if self.kind not in ("tikhonov", "cutoff"):
            raise ValueError(f"unknown filter {self.kind!r}")
        if not self.lam > 0:
            raise ValueError("lambda must be positive")

    def apply(self, eigenvalues: np.ndarray) -> np.ndarray:
        lam_max = float(np.max(eigenvalues)) if eigenvalues.size else 0.0
        ev = np.where(eigenvalues < 1e-12 * max(lam_max, 0.0), 0.0, eigenvalues)
        if self.kind == "tikhonov":
            return 1.0 / (ev + self.lam)
        out = np.zeros_like(ev)
        keep = ev > self.lam
        out[keep] = 1.0 / ev[keep]
        return out


@dataclass(frozen=True)
class SpectralModel:
    kernel: GaussianKernel
    anchors: NystromAnchors
    c: np.ndarray  # (p,) or (p, m)
    eigenvalues: np.ndarray  # descending
    U: np.ndarray  # (p, p), columns generalized-orthonormal
    mu: float

    def predict(self, X) -> np.ndarray:
        X = np.atleast_2d(np.asarray(X, dtype=float))
        return self.kernel.gram(X, self.anchors.points) @ self.c


def build_operators(kernel: GaussianKernel, inputs, anchors: NystromAnchors) -> LaplacianOperators:
    X = np.atleast_2d(np.asarray(inputs, dtype=float))
    n = X.shape[0]
    Knp = anchors.K_np
    Z = derivative_cross(kernel, X, anchors.points)
    A = (Knp.T @ Knp) / n
    B = (Z.T @ Z) / n
    A = (A + A.T) / 2.0
    B = (B + B.T) / 2.0
    return LaplacianOperators(A=A, B=B, G=anchors.K_pp)


def gevd(A: np.ndarray, B: np.ndarray, mu: float, G: np.ndarray):
    """Generalized eigenelements A u = lambda (B + mu G) u.

    Returns eigenvalues in descending order and eigenvectors normalized to
    u_i^T (B + mu G) u_j = 1{i=j}.  The right-hand matrix gets escalating
    diagonal jitter if it is not positive definite.
    """
    R = B + mu * G
    R = (R + R.T) / 2.0
    base = float(np.mean(np.diag(R)))
    if base <= 0:
        base = 1.0
    jitter = 0.0
    while True:
        try:
            w, V = scipy.linalg.eigh(A, R + jitter * np.eye(R.shape[0]))
            break
        except (np.linalg.LinAlgError, scipy.linalg.LinAlgError):
            jitter = 1e-10 * base if jitter == 0.0 else jitter * 10.0
            if jitter > 1e-4 * base * (1 + 1e-12):
                raise np.linalg.LinAlgError(
                    "right-hand operator indefinite after jitter escalation"
                )
    order = np.argsort(w)[::-1]
    return w[order], V[:, order]


def fit_spectral(
    kernel: GaussianKernel,
    inputs,
    labels,
    anchors: NystromAnchors,
    filt: SpectralFilter,
    mu: float,
    normalize_by_labeled: bool = False,
) -> SpectralModel:
    """Spectral-filtering estimator from n inputs with labels on the first
    n_l rows.

    b_j = (1/n_l) sum_{i<=n_l} Y_i k(X_i, anchor_j), c = sum psi(lam_i) u_i
    u_i^T b, prediction g(x) = sum_j c_j k(x, anchor_j).  Vector labels are
    handled per output coordinate.
    """
    X = np.atleast_2d(np.asarray(inputs, dtype=float))
    Y = np.asarray(labels, dtype=float)
    n_l = Y.shape[0]
    if not 1 <= n_l <= X.shape[0]:
        raise ValueError("need 1 <= n_l <= n")
    ops = build_operators(kernel, X, anchors)
    if normalize_by_labeled:
        # strict empirical-risk reading: covariance over labeled points only
        Knl = anchors.K_np[:n_l]
        A = (Knl.T @ Knl) / n_l
        A = (A + A.T) / 2.0
        ops = LaplacianOperators(A=A, B=ops.B, G=ops.G)
    w, V = gevd(ops.A, ops.B, mu, ops.G)
    b = anchors.K_np[:n_l].T @ Y / n_l  # (p,) or (p, m)
    fw = filt.apply(w)
    proj = V.T @ b
    c = V @ (fw[:, None] * proj) if proj.ndim > 1 else V @ (fw * proj)
    return SpectralModel(
        kernel=kernel, anchors=anchors, c=c, eigenvalues=w, U=V, mu=mu
    )


def first_eigenfunctions(model: SpectralModel, k: int, eval_points) -> np.ndarray:
    """e_i(x) = sum_j (u_i)_j k(x, anchor_j) for the top k eigenvectors;
    returns an array of shape (k, len(eval_points))."""
    if k > model.U.shape[1]:
        raise ValueError("k exceeds the number of eigenvectors")
    P = np.atleast_2d(np.asarray(eval_points, dtype=float))
    Kxp = model.kernel.gram(P, model.anchors.points)  # (q, p)
    return (Kxp @ model.U[:, :k]).T


def graph_laplacian_baseline(sigma: float, inputs, labeled_values) -> np.ndarray:
    """Harmonic interpolation on the Gaussian-affinity graph.

    The first len(labeled_values) rows of inputs are labeled; returns the
    harmonic solution f_u = (D_uu - W_uu)^{-1} W_ul f_l at the remaining
    rows (transductive).  Raises on a disconnected graph.
    """
    X = np.atleast_2d(np.asarray(inputs, dtype=float))
    f_l = np.asarray(labeled_values, dtype=float)
    n_l = f_l.shape[0]
    n = X.shape[0]
    if not (1 <= n_l < n):
        raise ValueError("need at least one labeled and one unlabeled point")
    W = GaussianKernel(sigma).gram(X)
    D = np.diag(W.sum(axis=1))
    L = D - W
    L_uu = L[n_l:, n_l:]
    W_ul = W[n_l:, :n_l]
    try:
        factor = jittered_cholesky(L_uu)
    except np.linalg.LinAlgError as exc:
        raise np.linalg.LinAlgError(f"disconnected graph: {exc}") from exc
    from scipy.linalg import cho_solve

    return cho_solve(factor, W_ul @ f_l)
