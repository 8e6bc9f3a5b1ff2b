"""Partial-label risk minimization at inference time.

Given a weighting scheme alpha(x) and a loss l, predictions minimize the
weighted set loss  f(x) = argmin_z  sum_i alpha_i(x) * L(z, S_i)  where L is
the infimum, average, or supremum extension of l to the weak sets S_i.
Task-specific solvers: finite classification, multilabel tag scores,
grid-search interval regression, and alternate-minimization ranking.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .core import ConstraintSet, LossSpec, WeakDataset, constraint_contains, embed_kendall, pair_index
from .kernels import WeightingScheme
from .mfas import MfasInstance, solve_lp

__all__ = [
    "PartialEstimator",
    "pointwise_set_loss",
    "infer_classification",
    "infer_multilabel",
    "infer_interval_regression",
    "infer_ranking",
    "decode",
    "classification_risk_scores",
]

PRINCIPLES = ("infimum", "average", "supremum")


@dataclass
class PartialEstimator:
    weights: WeightingScheme
    loss: LossSpec
    principle: str = "infimum"
    grid_points: int = 1000
    max_iters: int = 50

    def __post_init__(self):
        if self.principle not in PRINCIPLES:
            raise ValueError(f"unknown principle {self.principle!r}")


def _enumerate_constraint(space, s: ConstraintSet):
    """Explicit candidate list for a finite-space constraint set."""
    if s.variant == "finite":
        return list(s.labels)
    if s.variant == "full":
        return list(space.labels())
    if s.variant == "kendallPartial":
        if space.kind != "permutations" or space.m > 8:
            raise ValueError("kendallPartial enumeration needs a small permutation space")
        return [y for y in space.labels() if constraint_contains(s, y)]
    if s.variant == "box" and space.kind == "multilabel":
        return [y for y in space.labels() if constraint_contains(s, y)]
    raise ValueError(f"cannot enumerate constraint variant {s.variant!r}")


def _box_set_loss(loss: LossSpec, principle: str, z, s: ConstraintSet) -> float:
    lo, up = s.lower, s.upper
    z = np.atleast_1d(np.asarray(z, dtype=float))
    if z.shape != lo.shape:
        raise ValueError("dimension mismatch between z and the box")
    if principle == "infimum":
        proj = np.clip(z, lo, up)
        return loss.eval(z, proj)
    unbounded = not (np.all(np.isfinite(lo)) and np.all(np.isfinite(up)))
    if unbounded:
        raise ValueError(f"{principle} loss undefined on an unbounded box (censored data)")
    if principle == "supremum":
        far = np.where(np.abs(z - lo) >= np.abs(z - up), lo, up)
        return loss.eval(z, far)
    # average: uniform measure over the box
    c = (lo + up) / 2.0
    w = up - lo
    if loss.kind == "squared":
        return float(np.sum((z - c) ** 2) + np.sum(w**2) / 12.0)
    if loss.kind == "absoluteDeviation" and z.shape == (1,):
        zz, a, b = float(z[0]), float(lo[0]), float(up[0])
        if b == a:
            return abs(zz - a)
        if zz <= a:
            return (a + b) / 2.0 - zz
        if zz >= b:
            return zz - (a + b) / 2.0
        return ((zz - a) ** 2 + (b - zz) ** 2) / (2.0 * (b - a))
    raise ValueError("average box loss available for squared (any d) and 1-D absoluteDeviation")


def pointwise_set_loss(loss: LossSpec, principle: str, z, s: ConstraintSet) -> float:
    """L(z, S): infimum / average / supremum of l(z, .) over the weak set S."""
    if principle not in PRINCIPLES:
        raise ValueError(f"unknown principle {principle!r}")
    if s.variant == "box" and loss.space.kind == "reals":
        return _box_set_loss(loss, principle, z, s)
    if s.variant == "halfspaceHistory":
        raise ValueError("halfspace-history sets are handled by the active module")
    if s.variant == "full" and principle == "infimum":
        return 0.0
    candidates = _enumerate_constraint(loss.space, s)
    vals = [loss.eval(z, y) for y in candidates]
    if principle == "infimum":
        return min(vals)
    if principle == "average":
        return float(np.mean(vals))
    return max(vals)


def classification_risk_scores(
    loss: LossSpec, principle: str, alpha: np.ndarray, constraints
) -> np.ndarray:
    """Weighted set-loss score of every class:  R(z) = sum_i alpha_i L(z, S_i)."""
    labels = list(loss.space.labels())
    scores = np.zeros(len(labels))
    for a, s in zip(alpha, constraints):
        if a == 0.0:
            continue
        for zi, z in enumerate(labels):
            scores[zi] += a * pointwise_set_loss(loss, principle, z, s)
    return scores


def infer_classification(
    est: PartialEstimator, train: WeakDataset, x, with_flag: bool = False
):
    """argmin_z of the weighted set loss over classes; smallest-id ties.

    Degenerate case (all scores equal / no evidence) returns class 0 and, if
    requested, a flag saying so.
    """
    alpha = est.weights.weights_at(x)
    scores = classification_risk_scores(est.loss, est.principle, alpha, train.constraints)
    degenerate = bool(np.allclose(scores, scores[0]))
    z = int(np.argmin(scores))
    return (z, degenerate) if with_flag else z


def _tag_sets(s: ConstraintSet, m: int):
    """(P, N) tag index sets from a multilabel box constraint."""
    if s.variant == "full":
        return set(), set()
    if s.variant != "box":
        raise ValueError("multilabel weak labels are box constraints over {0,1}^m")
    P = {j for j in range(m) if s.lower[j] >= 1.0}
    N = {j for j in range(m) if s.upper[j] <= 0.0}
    return P, N


def infer_multilabel(est: PartialEstimator, train: WeakDataset, x, mode) -> tuple:
    """Tag scores h_j = sum_{i: j in P_i} alpha_i - sum_{i: j in N_i} alpha_i,
    decoded by thresholding (mode = ("threshold", eps)) or exact top-k
    (mode = ("topk", k))."""
    m = est.loss.space.m
    alpha = est.weights.weights_at(x)
    h = np.zeros(m)
    for a, s in zip(alpha, train.constraints):
        P, N = _tag_sets(s, m)
        for j in P:
            h[j] += a
        for j in N:
            h[j] -= a
    kind, param = mode
    if kind == "threshold":
        return tuple(int(h[j] > param) for j in range(m))
    if kind == "topk":
        k = int(param)
        if k > m:
            raise ValueError("k exceeds the number of tags")
        top = np.argsort(-h, kind="stable")[:k]
        out = [0] * m
        for j in top:
            out[int(j)] = 1
        return tuple(out)
    raise ValueError(f"unknown multilabel mode {kind!r}")


def regression_grid(constraints, grid_points: int) -> np.ndarray:
    """Uniform grid covering all constraint boxes with a 10% range margin."""
    los = [float(s.lower[0]) for s in constraints if s.variant == "box"]
    ups = [float(s.upper[0]) for s in constraints if s.variant == "box"]
    if not los:
        raise ValueError("no box constraints: empty constraint union")
    lo, up = min(los), max(u for u in ups if math.isfinite(u))
    margin = 0.1 * (up - lo)
    return np.linspace(lo - margin, up + margin, grid_points)


def _box_set_loss_grid(loss: LossSpec, principle: str, grid: np.ndarray, s) -> np.ndarray:
    """Vectorized 1-D box set loss over a grid (matches _box_set_loss)."""
    a, b = float(s.lower[0]), float(s.upper[0])
    if principle == "infimum":
        d = grid - np.clip(grid, a, b)
    elif principle == "supremum":
        if not (math.isfinite(a) and math.isfinite(b)):
            raise ValueError("supremum loss undefined on an unbounded box (censored data)")
        d = np.where(np.abs(grid - a) >= np.abs(grid - b), grid - a, grid - b)
    else:
        return np.array([_box_set_loss(loss, principle, z, s) for z in grid])
    if loss.kind == "squared":
        return d**2
    if loss.kind == "absoluteDeviation":
        return np.abs(d)
    raise ValueError("grid path supports squared and absoluteDeviation losses")


def infer_interval_regression(est: PartialEstimator, train: WeakDataset, x) -> float:
    """Grid minimizer of the weighted set loss over a 1-D grid.

    Ties (exact score equality) resolve to the minimizer closest to the grid
    midpoint, then leftmost; this makes the single-interval case return the
    interval's center rather than its lower edge.
    """
    alpha = est.weights.weights_at(x)
    grid = regression_grid(train.constraints, est.grid_points)
    scores = np.zeros(grid.shape[0])
    for a, s in zip(alpha, train.constraints):
        if a == 0.0:
            continue
        if s.variant == "box" and s.lower.shape == (1,):
            scores += a * _box_set_loss_grid(est.loss, est.principle, grid, s)
        else:
            scores += a * np.array(
                [pointwise_set_loss(est.loss, est.principle, z, s) for z in grid]
            )
    best = scores.min()
    ties = np.flatnonzero(scores == best)
    mid = (grid[0] + grid[-1]) / 2.0
    return float(grid[ties[np.argmin(np.abs(grid[ties] - mid), )]])


def _kendall_linear_argmin(m: int, v: np.ndarray, fixed=None):
    """argmin over permutations of -<phi(z), v>, optionally constrained."""
    inst = MfasInstance(m, -np.asarray(v, dtype=float), fixed or {})
    _, sigma, _ = solve_lp(inst)
    return sigma, inst.objective(sigma)


def infer_ranking(
    est: PartialEstimator, train: WeakDataset, x, max_iters: int | None = None
):
    """Alternate minimization of  sum_i alpha_i l(z, y_i)  over z and
    y_i in S_i (Kendall loss, kendallPartial constraints).

    Initialization puts 0 on unobserved pairwise coordinates; both steps are
    minimum-feedback-arc-set solves.  The objective never increases; the loop
    stops at a fixed point or the iteration cap.
    """
    loss = est.loss
    m = loss.space.m
    if max_iters is None:
        max_iters = est.max_iters
    alpha = est.weights.weights_at(x)
    n_pairs = m * (m - 1) // 2

    # init: xi_i has the observed coordinates, zeros elsewhere
    xis = []
    for s in train.constraints:
        xi = np.zeros(n_pairs)
        if s.variant == "kendallPartial":
            for (i, j), v in s.fixed.items():
                xi[pair_index(m, i, j)] = v
        elif s.variant == "finite":
            # explicit candidates: start from the first candidate's embedding
            xi = embed_kendall(s.labels[0])
        elif s.variant != "full":
            raise ValueError("ranking inference needs kendallPartial/full/finite sets")
        xis.append(xi)

    def z_step(vecs):
        v = sum(a * xi for a, xi in zip(alpha, vecs))
        z, _ = _kendall_linear_argmin(m, v)
        return z

    def objective(z, ys):
        return sum(a * loss.eval(z, y) for a, y in zip(alpha, ys))

    z = z_step(xis)
    ys = [None] * len(train)
    prev_obj = math.inf
    for _ in range(max_iters):
        # y-step: per sample, best candidate in S_i for the current z
        phi_z = embed_kendall(z)
        new_ys = []
        for a, s in zip(alpha, train.constraints):
            if s.variant == "finite":
                key = (min if a >= 0 else max)
                y = key(s.labels, key=lambda cand: loss.eval(z, cand))
            else:
                fixed = s.fixed if s.variant == "kendallPartial" else {}
                v = phi_z if a >= 0 else -phi_z
                y, _ = _kendall_linear_argmin(m, v, fixed)
            new_ys.append(y)
        ys_candidate = new_ys
        obj = objective(z, ys_candidate)
        if obj > prev_obj + 1e-9:  # guard: never accept an increase
            break
        ys = ys_candidate
        prev_obj = obj
        # z-step on the disambiguated labels
        z_new = z_step([embed_kendall(y) for y in ys])
        obj_new = objective(z_new, ys)
        if obj_new > prev_obj + 1e-9:
            break
        if z_new == z and obj_new == prev_obj:
            prev_obj = obj_new
            break
        z = z_new
        prev_obj = obj_new
    return z


def decode(loss: LossSpec, g: np.ndarray):
    """f(x) = argmin_z <psi(z), g> over the finite space; smallest-id ties."""
    g = np.asarray(g, dtype=float)
    best = None
    best_val = math.inf
    for z in loss.space.labels():
        val = float(loss.psi(z) @ g)
        if val < best_val - 1e-15:
            best, best_val = z, val
    return best
