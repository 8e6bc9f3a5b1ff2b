"""Active labeling by weak-query SGD.

A Nystrom-parameterized model f_a(x) = sum_ij a_ij k(x, anchor_i) e_j is
trained from one-bit answers: halfspace comparisons sign(<y - z, u>) for
median regression, shifted-halfspace bits for least squares, and set
membership for classification.  Includes the directional constants, the
generic weak-gradient scheme, median-surrogate classification, and the
passive baselines the active strategies are compared against.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.special import gammaln

from . import accel
from .core import SeededRng
from .kernels import GaussianKernel, NystromAnchors

__all__ = [
    "ActiveModel",
    "WeakQuery",
    "DirectionalConstants",
    "median_sgd_step",
    "median_sgd_run",
    "leastsquares_sgd_step",
    "directional_constants",
    "c2_closed_form",
    "c1_closed_form",
    "generic_weak_gradient",
    "median_surrogate_classify",
    "passive_regression_step",
    "passive_classification_step",
]


@dataclass(frozen=True)
class WeakQuery:
    """A single one-bit question about a hidden label y.

    halfspace:         answer sign(<y - z, u>), sign(0) = +1
    membership:        answer 1{y in s}
    shiftedHalfspace:  answer 1{<y, u> < threshold}
    """

    kind: str
    z: np.ndarray | None = None
    u: np.ndarray | None = None
    s: object = None
    threshold: float | None = None

    def __post_init__(self):
        if self.kind not in ("halfspace", "membership", "shiftedHalfspace"):
            raise ValueError(f"unknown query kind {self.kind!r}")
        if self.u is not None:
            u = np.atleast_1d(np.asarray(self.u, dtype=float))
            if abs(float(np.linalg.norm(u)) - 1.0) > 1e-9:
                raise ValueError("query directions must be unit norm")
            object.__setattr__(self, "u", u)
        if self.z is not None:
            object.__setattr__(self, "z", np.atleast_1d(np.asarray(self.z, dtype=float)))


class ActiveModel:
    """Streaming SGD state over a Nystrom expansion.

    a is (p, m); the step schedule is ("constant", g0) or ("decaying", g0)
    meaning g0 / sqrt(t); averaging "runningMean" predicts with the mean of
    the post-update iterates, "last" with the current iterate.
    """

    def __init__(
        self,
        kernel: GaussianKernel,
        anchors: NystromAnchors,
        m: int,
        schedule=("decaying", 1.0),
        lam_reg: float = 0.0,
        averaging: str = "last",
    ):
        if averaging not in ("last", "runningMean"):
            raise ValueError("averaging must be 'last' or 'runningMean'")
        if lam_reg < 0:
            raise ValueError("lam_reg must be >= 0")
        self.kernel = kernel
        self.anchors = anchors
        self.m = int(m)
        self.schedule = (schedule[0], float(schedule[1]))
        if self.schedule[0] not in ("constant", "decaying"):
            raise ValueError("schedule kind must be 'constant' or 'decaying'")
        self.lam_reg = float(lam_reg)
        self.averaging = averaging
        self.a = np.zeros((anchors.p, self.m))
        self.a_sum = np.zeros_like(self.a)
        self.t = 0
        self.query_log: list[tuple[int, WeakQuery, float]] = []

    def gamma(self, t: int) -> float:
        kind, g0 = self.schedule
        return g0 if kind == "constant" else g0 / math.sqrt(t)

    def kx(self, x) -> np.ndarray:
        x = np.atleast_1d(np.asarray(x, dtype=float))
        return self.kernel.gram(x[None, :], self.anchors.points)[0]

    def coefficients(self) -> np.ndarray:
        if self.averaging == "runningMean" and self.t > 0:
            return self.a_sum / self.t
        return self.a

    def predict(self, x) -> np.ndarray:
        return self.kx(x) @ self.coefficients()

    def _apply_update(self, gamma: float, data_term: np.ndarray):
        self.a += data_term
        if self.lam_reg > 0.0:
            self.a -= (gamma * self.lam_reg * 2.0) * (self.anchors.K_pp @ self.a)
        self.a_sum += self.a


def median_sgd_step(model: ActiveModel, x, oracle_answer, rng: SeededRng) -> WeakQuery:
    """One step of median-regression SGD: sample a direction, ask whether the
    label lies above the current prediction along it, move accordingly."""
    u = rng.sphere(model.m)
    kx = model.kx(x)
    z = kx @ model.a
    query = WeakQuery("halfspace", z=z, u=u)
    eps = float(oracle_answer(query))
    if eps not in (-1.0, 1.0):
        raise ValueError("halfspace queries answer +-1")
    model.t += 1
    g = model.gamma(model.t)
    model._apply_update(g, (g * eps) * np.outer(kx, u))
    model.query_log.append((model.t, query, eps))
    return query


def median_sgd_run(model: ActiveModel, xs, ys, rng: SeededRng) -> np.ndarray:
    """Bulk simulated-oracle run of T median-SGD steps (compiled backend when
    available); trajectory matches per-step calls with a simulated oracle."""
    xs = np.atleast_2d(np.asarray(xs, dtype=float))
    ys = np.asarray(ys, dtype=float)
    if ys.ndim == 1:
        ys = ys[:, None]
    T = xs.shape[0]
    us = np.empty((T, model.m))
    for t in range(T):
        us[t] = rng.sphere(model.m)
    kxs = model.kernel.gram(xs, model.anchors.points)
    gammas = np.array([model.gamma(model.t + t + 1) for t in range(T)])
    eps = accel.median_sgd_run(
        model.a,
        np.ascontiguousarray(kxs),
        np.ascontiguousarray(ys),
        us,
        gammas,
        model.lam_reg,
        np.ascontiguousarray(model.anchors.K_pp),
        model.a_sum,
    )
    model.t += T
    return eps


def leastsquares_sgd_step(
    model: ActiveModel, x, M: float, oracle_answer, rng: SeededRng
) -> WeakQuery:
    """One least-squares step: ask the shifted-halfspace bit
    1{<y, u> < <f(x), u> - v} with v uniform on [0, 2M]."""
    if not M > 0:
        raise ValueError("M must be positive")
    u = rng.sphere(model.m)
    v = float(rng.uniform(0.0, 2.0 * M))
    kx = model.kx(x)
    f = kx @ model.a
    query = WeakQuery("shiftedHalfspace", u=u, threshold=float(f @ u) - v)
    bit = float(oracle_answer(query))
    if bit not in (0.0, 1.0):
        raise ValueError("shifted-halfspace queries answer 0/1")
    model.t += 1
    g = model.gamma(model.t)
    model._apply_update(g, (-g * bit) * np.outer(kx, u))
    model.query_log.append((model.t, query, bit))
    return query


# ---------------------------------------------------------------------------
# Directional constants


def c2_closed_form(m: int) -> float:
    """E |<U, e1>| for U uniform on S^{m-1}: Gamma(m/2)/(sqrt(pi) Gamma((m+1)/2))."""
    return float(np.exp(gammaln(m / 2.0) - gammaln((m + 1) / 2.0)) / math.sqrt(math.pi))


def c1_closed_form(m: int, M: float) -> float:
    """E[1{<e1,U> >= V} <U, e1>] with V uniform on [0, 2M]: equals
    E[x1^2 1{x1 > 0}] / (2M) = 1/(4 m M)."""
    return 1.0 / (4.0 * m * M)


@dataclass(frozen=True)
class DirectionalConstants:
    m: int
    c2: float
    c2_se: float
    c1: float
    c1_se: float
    c2_closed: float
    c1_closed: float
    provenance: str
    samples: int


def directional_constants(
    m: int, M: float, rng: SeededRng, samples: int = 10**5
) -> DirectionalConstants:
    """Monte-Carlo estimates of the directional constants with their closed
    forms attached.

    c2 = E |<U, e1>|;  c1 = E[1{<e1,U> >= V} <U, e1>], V ~ Uniform[0, 2M].
    """
    if samples < 10**5:
        raise ValueError("use at least 1e5 samples")
    if m < 1:
        raise ValueError("m >= 1")
    draws = rng.normal(size=(samples, m))
    norms = np.linalg.norm(draws, axis=1)
    x1 = draws[:, 0] / norms
    abs_x1 = np.abs(x1)
    c2 = float(np.mean(abs_x1))
    c2_se = float(np.std(abs_x1, ddof=1) / math.sqrt(samples))
    v = rng.uniform(0.0, 2.0 * M, size=samples)
    vals = np.where(x1 >= v, x1, 0.0)
    c1 = float(np.mean(vals))
    c1_se = float(np.std(vals, ddof=1) / math.sqrt(samples))
    return DirectionalConstants(
        m=m,
        c2=c2,
        c2_se=c2_se,
        c1=c1,
        c1_se=c1_se,
        c2_closed=c2_closed_form(m),
        c1_closed=c1_closed_form(m, M),
        provenance="monteCarlo",
        samples=samples,
    )


def generic_weak_gradient(query_bit, M_theta: float, param_dim: int, rng: SeededRng) -> np.ndarray:
    """One-bit stochastic gradient: sample U on the sphere and V on
    [0, 2 M_theta], ask bit = 1{<grad, U> >= V}, return 4 d M_theta bit U.

    Unbiased for any gradient with norm <= M_theta (the indicator fires with
    probability <grad, U>_+ / (2 M_theta), and E[U <U,g>_+] = g / (2d))."""
    if not M_theta > 0:
        raise ValueError("M_theta must be positive")
    u = rng.sphere(param_dim)
    v = float(rng.uniform(0.0, 2.0 * M_theta))
    bit = float(query_bit(u, v))
    if bit not in (0.0, 1.0):
        raise ValueError("weak-gradient queries answer 0/1")
    return (4.0 * param_dim * M_theta * bit) * u


def median_surrogate_classify(model: ActiveModel, x) -> int:
    """argmax of the score vector; smallest-id ties."""
    return int(np.argmax(model.predict(x)))


# ---------------------------------------------------------------------------
# Passive baselines


def passive_regression_step(model: ActiveModel, x, oracle_answer, rng: SeededRng) -> WeakQuery:
    """Passive 1-D baseline: a Gaussian threshold reveals which half-line the
    label lies in; subgradient step on the infimum absolute deviation."""
    if model.m != 1:
        raise ValueError("passive regression baseline is 1-D")
    thr = float(rng.normal())
    query = WeakQuery("halfspace", z=np.array([thr]), u=np.array([1.0]))
    eps = float(oracle_answer(query))  # +1: y >= thr, so S = [thr, inf)
    if eps not in (-1.0, 1.0):
        raise ValueError("halfspace queries answer +-1")
    kx = model.kx(x)
    f = float(kx @ model.a[:, 0])
    model.t += 1
    g = model.gamma(model.t)
    inside = (f >= thr) if eps > 0 else (f <= thr)
    if inside:
        data = np.zeros_like(model.a)
    else:
        # outside S: |f - boundary| pulls f toward thr with a unit subgradient
        direction = -1.0 if f < thr else 1.0
        data = (-g * direction) * kx[:, None]
    model._apply_update(g, data)
    model.query_log.append((model.t, query, eps))
    return query


def random_nontrivial_set(m: int, rng: SeededRng) -> np.ndarray:
    """Balanced Bernoulli membership mask over m classes, resampled until the
    set is neither empty nor everything."""
    while True:
        mask = rng.uniform(size=m) < 0.5
        k = int(mask.sum())
        if 0 < k < m:
            return mask


def passive_classification_step(
    model: ActiveModel, x, oracle_answer, rng: SeededRng
) -> WeakQuery:
    """Passive baseline on class-membership bits.

    Draws a random non-trivial candidate set, asks 1{Y in S}, replaces S by
    its complement on a negative answer, and takes a normalized-residual step
    toward the simplex vertex of y* = argmax_{y in S} g(x)_y."""
    m = model.m
    mask = random_nontrivial_set(m, rng)
    labels = tuple(int(j) for j in np.flatnonzero(mask))
    from .core import ConstraintSet

    query = WeakQuery("membership", s=ConstraintSet.finite(labels))
    bit = float(oracle_answer(query))
    if bit not in (0.0, 1.0):
        raise ValueError("membership queries answer 0/1")
    if bit == 0.0:
        mask = ~mask
    kx = model.kx(x)
    g_vec = kx @ model.a
    masked = np.where(mask, g_vec, -np.inf)
    y_star = int(np.argmax(masked))
    e = np.zeros(m)
    e[y_star] = 1.0
    residual = g_vec - e
    nrm = float(np.linalg.norm(residual))
    model.t += 1
    g = model.gamma(model.t)
    if nrm < 1e-12:
        data = np.zeros_like(model.a)  # degenerate residual: skip
    else:
        data = (-g) * np.outer(kx, residual / nrm)
    model._apply_update(g, data)
    model.query_log.append((model.t, query, bit))
    return query


def active_classification_step(
    model: ActiveModel, x, oracle_answer, rng: SeededRng
) -> WeakQuery:
    """Active classification: median-regression step onto simplex vertices
    (the labels' one-hot embeddings) via a halfspace comparison."""
    return median_sgd_step(model, x, oracle_answer, rng)
