"""Gaussian kernel, its first/second derivatives, Gram assembly, weighting
schemes (kernel ridge / k-NN / Nadaraya-Watson), and Nystrom anchors."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.linalg import cho_factor, cho_solve

from .core import SeededRng

__all__ = [
    "GaussianKernel",
    "WeightingScheme",
    "NystromAnchors",
    "kernel_eval",
    "kernel_partial",
    "kernel_partial2",
    "fit_weights",
    "weights_at",
    "select_anchors",
    "jittered_cholesky",
]


@dataclass(frozen=True)
class GaussianKernel:
    """k(x, x') = exp(-||x - x'||^2 / (2 sigma^2))."""

    sigma: float

    def __post_init__(self):
        if not self.sigma > 0:
            raise ValueError("sigma must be positive")

    def __call__(self, x, y) -> float:
        return kernel_eval(self, x, y)

    def gram(self, X: np.ndarray, Y: np.ndarray | None = None) -> np.ndarray:
        """Kernel matrix K[i, j] = k(X[i], Y[j]) (Y defaults to X)."""
        X = np.atleast_2d(np.asarray(X, dtype=float))
        Y = X if Y is None else np.atleast_2d(np.asarray(Y, dtype=float))
        sq = (
            np.sum(X**2, axis=1)[:, None]
            + np.sum(Y**2, axis=1)[None, :]
            - 2.0 * X @ Y.T
        )
        np.maximum(sq, 0.0, out=sq)
        return np.exp(-sq / (2.0 * self.sigma**2))


def _check_pair(x, y):
    x = np.atleast_1d(np.asarray(x, dtype=float))
    y = np.atleast_1d(np.asarray(y, dtype=float))
    if x.shape != y.shape:
        raise ValueError(f"dimension mismatch: {x.shape} vs {y.shape}")
    return x, y


def kernel_eval(k: GaussianKernel, x, y) -> float:
    x, y = _check_pair(x, y)
    d = x - y
    return float(np.exp(-(d @ d) / (2.0 * k.sigma**2)))


def kernel_partial(k: GaussianKernel, i: int, x, y) -> float:
    """d/dx_i k(x, y) = -((x_i - y_i) / sigma^2) k(x, y)."""
    x, y = _check_pair(x, y)
    if not 0 <= i < x.shape[0]:
        raise IndexError(f"coordinate {i} out of range for dimension {x.shape[0]}")
    return float(-(x[i] - y[i]) / k.sigma**2 * kernel_eval(k, x, y))


def kernel_partial2(k: GaussianKernel, i: int, j: int, x, y) -> float:
    """d/dx_i d/dy_j k(x, y) = (1{i=j}/sigma^2 - (x_i-y_i)(x_j-y_j)/sigma^4) k."""
    x, y = _check_pair(x, y)
    d = x.shape[0]
    if not (0 <= i < d and 0 <= j < d):
        raise IndexError("coordinate out of range")
    s2 = k.sigma**2
    base = kernel_eval(k, x, y)
    term = (1.0 if i == j else 0.0) / s2 - (x[i] - y[i]) * (x[j] - y[j]) / s2**2
    return float(term * base)


def derivative_cross(k: GaussianKernel, X: np.ndarray, A: np.ndarray) -> np.ndarray:
    """Z of shape (n*d, p): Z[(l, j), i] = d/dx_j k(X[l], A[i]).

    Row blocks are per sample l (d consecutive rows), matching a flattening of
    the gradient of the kernel section at each training point.
    """
    X = np.atleast_2d(np.asarray(X, dtype=float))
    A = np.atleast_2d(np.asarray(A, dtype=float))
    n, d = X.shape
    p = A.shape[0]
    K = k.gram(X, A)  # (n, p)
    # diff[l, i, j] = X[l, j] - A[i, j]
    diff = X[:, None, :] - A[None, :, :]
    Z = -(diff / k.sigma**2) * K[:, :, None]  # (n, p, d)
    return Z.transpose(0, 2, 1).reshape(n * d, p)


def jittered_cholesky(M: np.ndarray):
    """Cholesky with escalating diagonal jitter.

    Starts at 1e-10 * mean(diag), multiplies by 10 up to 1e-4 * mean(diag);
    raises LinAlgError if the matrix still fails to factor.
    """
    M = np.asarray(M, dtype=float)
    base = float(np.mean(np.diag(M)))
    if base <= 0:
        base = 1.0
    jitter = 1e-10 * base
    last_exc = None
    try:
        return cho_factor(M, lower=True)
    except np.linalg.LinAlgError as exc:
        last_exc = exc
    while jitter <= 1e-4 * base * (1 + 1e-12):
        try:
            return cho_factor(M + jitter * np.eye(M.shape[0]), lower=True)
        except np.linalg.LinAlgError as exc:
            last_exc = exc
            jitter *= 10.0
    raise np.linalg.LinAlgError(
        f"matrix not positive definite after jitter escalation: {last_exc}"
    )


class WeightingScheme:
    """Trained map from a query point to weights alpha(x) over training inputs.

    kernelRidge: alpha(x) = (K + n lambda I)^{-1} v(x), v(x) = (k(x, X_i))_i.
    knn:         1/k on the k nearest, ties at the k-th distance split the
                 remaining mass equally.
    nadarayaWatson: normalized Gaussian bump weights with bandwidth h.
    """

    def __init__(self, kind: str, inputs: np.ndarray, *, kernel=None, lam=None, k=None, h=None):
        self.kind = kind
        self.inputs = np.atleast_2d(np.asarray(inputs, dtype=float))
        n = self.inputs.shape[0]
        if kind == "kernelRidge":
            if kernel is None or lam is None or lam < 0:
                raise ValueError("kernelRidge needs a kernel and lambda >= 0")
            self.kernel = kernel
            self.lam = float(lam)
            K = kernel.gram(self.inputs)
            self._factor = jittered_cholesky(K + n * self.lam * np.eye(n))
        elif kind == "knn":
            if k is None or not 1 <= k <= n:
                raise ValueError("knn needs 1 <= k <= n")
            self.k = int(k)
        elif kind == "nadarayaWatson":
            if h is None or h <= 0:
                raise ValueError("nadarayaWatson needs h > 0")
            self.h = float(h)
        else:
            raise ValueError(f"unknown weighting kind {kind!r}")

    @property
    def n(self) -> int:
        return self.inputs.shape[0]

    def weights_at(self, x) -> np.ndarray:
        x = np.atleast_1d(np.asarray(x, dtype=float))
        if self.kind == "kernelRidge":
            v = self.kernel.gram(x[None, :], self.inputs)[0]
            return cho_solve(self._factor, v)
        d2 = np.sum((self.inputs - x[None, :]) ** 2, axis=1)
        if self.kind == "knn":
            return _knn_weights(d2, self.k)
        # Nadaraya-Watson; shift by the min squared distance for stability
        logs = -(d2 - d2.min()) / (2.0 * self.h**2)
        w = np.exp(logs)
        return w / w.sum()

    def weights_matrix(self, X) -> np.ndarray:
        """Stacked weights_at over query rows: (len(X), n)."""
        X = np.atleast_2d(np.asarray(X, dtype=float))
        if self.kind == "kernelRidge":
            V = self.kernel.gram(X, self.inputs)  # (q, n)
            return cho_solve(self._factor, V.T).T
        return np.array([self.weights_at(x) for x in X])


def _knn_weights(d2: np.ndarray, k: int) -> np.ndarray:
    n = d2.shape[0]
    order = np.argsort(d2, kind="stable")
    kth = d2[order[k - 1]]
    closer = d2 < kth
    tied = d2 == kth
    c = int(closer.sum())
    p = int(tied.sum())
    w = np.zeros(n)
    w[closer] = 1.0 / k
    w[tied] = (k - c) / (p * k)
    return w


def fit_weights(kind: str, inputs, **params) -> WeightingScheme:
    return WeightingScheme(kind, inputs, **params)


def weights_at(w: WeightingScheme, x) -> np.ndarray:
    return w.weights_at(x)


@dataclass(frozen=True)
class NystromAnchors:
    """p anchor points subsampled from the training inputs."""

    indices: np.ndarray  # (p,)
    points: np.ndarray  # (p, d)
    K_np: np.ndarray  # (n, p) cross Gram
    K_pp: np.ndarray  # (p, p) anchor Gram

    @property
    def p(self) -> int:
        return self.indices.shape[0]


def select_anchors(
    kernel: GaussianKernel, inputs, p: int, rng: SeededRng | None = None
) -> NystromAnchors:
    """Uniformly subsample p distinct anchor indices and precompute Grams."""
    X = np.atleast_2d(np.asarray(inputs, dtype=float))
    n = X.shape[0]
    if not 1 <= p <= n:
        raise ValueError(f"need 1 <= p <= n, got p={p}, n={n}")
    if p == n:
        idx = np.arange(n)
    else:
        if rng is None:
            raise ValueError("rng required when p < n")
        idx = np.sort(rng.choice(n, size=p, replace=False))
    pts = X[idx]
    return NystromAnchors(
        indices=idx, points=pts, K_np=kernel.gram(X, pts), K_pp=kernel.gram(pts)
    )
