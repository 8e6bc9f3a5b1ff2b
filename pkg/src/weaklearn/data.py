"""Dataset ingestion and synthetic generators.

LIBSVM text parsing plus the generators behind every desk-scale experiment:
corrupted classification sets, interval regression, concentric circles,
two-Gaussian semi-supervised splits, partially ordered lines, the signed-power
conditional-mean problem, and the streaming tasks for one-bit SGD.
Every generator retains the hidden truths so simulated oracles and error
measurement stay possible while the learner only sees the constraint sets.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .core import ConstraintSet, SeededRng, WeakDataset

__all__ = [
    "LibsvmRecord",
    "parse_libsvm",
    "write_libsvm",
    "libsvm_to_dense",
    "synthetic_unbalanced_records",
    "corrupt_classification",
    "gen_interval_regression",
    "gen_concentric_circles",
    "CIRCLE_LABELED_POINTS",
    "gen_two_gaussians",
    "gen_ranking_lines",
    "gen_knn_rates_problem",
    "gen_classification_stream",
    "gen_sin_regression",
]


# ---------------------------------------------------------------------------
# LIBSVM text format


@dataclass(frozen=True)
class LibsvmRecord:
    label: float
    features: tuple  # ((index >= 1, value), ...) with strictly increasing indices

    def __post_init__(self):
        idxs = [i for i, _ in self.features]
        if any(b <= a for a, b in zip(idxs, idxs[1:])) or any(i < 1 for i in idxs):
            raise ValueError("feature indices must be strictly increasing and >= 1")


def parse_libsvm(source) -> list:
    """Parse `label idx:val idx:val ...` lines; '#' comment lines and blank
    lines are skipped; any whitespace run separates tokens."""
    if isinstance(source, str):
        lines = source.splitlines()
    else:
        lines = [line.rstrip("\n") for line in source]
    records = []
    for lineno, line in enumerate(lines, start=1):
        stripped = line.strip()
        if not stripped or stripped.startswith("#"):
            continue
        tokens = stripped.split()
        try:
            label = float(tokens[0])
        except ValueError as exc:
            raise ValueError(f"line {lineno}: bad label {tokens[0]!r}") from exc
        feats = []
        for tok in tokens[1:]:
            try:
                idx_s, val_s = tok.split(":", 1)
                idx, val = int(idx_s), float(val_s)
            except ValueError as exc:
                raise ValueError(f"line {lineno}: bad feature {tok!r}") from exc
            feats.append((idx, val))
        idxs = [i for i, _ in feats]
        if any(b <= a for a, b in zip(idxs, idxs[1:])):
            raise ValueError(f"line {lineno}: indices not strictly increasing")
        records.append(LibsvmRecord(label, tuple(feats)))
    return records


def _num(x: float) -> str:
    return str(int(x)) if float(x).is_integer() else repr(float(x))


def write_libsvm(records) -> str:
    lines = []
    for rec in records:
        parts = [_num(rec.label)]
        parts += [f"{i}:{_num(v)}" for i, v in rec.features]
        lines.append(" ".join(parts))
    return "\n".join(lines) + ("\n" if lines else "")


def libsvm_to_dense(records):
    """(X, y) with zero-filled absent features; columns 0..max_index-1."""
    if not records:
        return np.zeros((0, 0)), np.zeros(0)
    d = max((f[-1][0] for f in (r.features for r in records) if f), default=0)
    X = np.zeros((len(records), d))
    y = np.array([r.label for r in records])
    for row, rec in enumerate(records):
        for idx, val in rec.features:
            X[row, idx - 1] = val
    return X, y


def synthetic_unbalanced_records(n: int = 600, seed: int = 20210) -> list:
    """Bundled offline stand-in for user-supplied LIBSVM classification data:
    three Gaussian classes in 4 dimensions with frequencies (0.5, 0.3, 0.2)."""
    rng = SeededRng(seed)
    probs = np.array([0.5, 0.3, 0.2])
    means = np.array(
        [[1.5, 0.0, 0.0, 0.0], [-1.5, 1.0, 0.0, 0.0], [0.0, -1.5, 1.0, 0.0]]
    )
    labels = rng.choice(3, size=n, p=probs)
    records = []
    for lab in labels:
        x = means[lab] + rng.normal(size=4)
        feats = tuple((j + 1, round(float(x[j]), 6)) for j in range(4))
        records.append(LibsvmRecord(float(lab + 1), feats))
    return records


# ---------------------------------------------------------------------------
# Corruption processes


def corrupt_classification(labels, mode: str, c: float, rng: SeededRng, m=None) -> list:
    """Replace each class label by a finite candidate set containing it.

    uniform: every wrong class joins the set independently with probability c.
    skewed: only samples of the most frequent class are enlarged (each wrong
    class joining with probability c); all other samples stay singletons.
    """
    if not 0.0 <= c <= 1.0:
        raise ValueError("corruption level must lie in [0, 1]")
    if mode not in ("uniform", "skewed"):
        raise ValueError("mode must be 'uniform' or 'skewed'")
    labels = np.asarray(labels, dtype=int)
    m = int(m) if m is not None else int(labels.max()) + 1
    majority = int(np.bincount(labels, minlength=m).argmax())
    sets = []
    for y in labels:
        if mode == "skewed" and y != majority:
            sets.append(ConstraintSet.finite((int(y),)))
            continue
        extra = np.flatnonzero(rng.uniform(size=m) < c)
        members = sorted(set(extra.tolist()) | {int(y)})
        sets.append(ConstraintSet.finite(tuple(members)))
    return sets


# ---------------------------------------------------------------------------
# Synthetic problems


def gen_interval_regression(n: int, rng: SeededRng) -> WeakDataset:
    """Noisy-window regression of sin(10x) on [0,1]: half-width
    r = 1 - log(u)/3, offset c uniform on [0, r], window centered at
    y + sign(y)*c — the true value always lies inside."""
    x = rng.uniform(0.0, 1.0, size=n)
    y = np.sin(10.0 * x)
    r = 1.0 - np.log(rng.uniform(size=n)) / 3.0
    c = rng.uniform(0.0, 1.0, size=n) * r
    center = y + np.sign(y) * c
    constraints = [
        ConstraintSet.box(center[i] - r[i], center[i] + r[i]) for i in range(n)
    ]
    return WeakDataset(x[:, None], constraints, truths=list(y))


CIRCLE_LABELED_POINTS = (
    ((-2.0 * math.sqrt(3.0), 2.0), 3),
    ((1.0, -2.0 * math.sqrt(2.0)), 2),
    ((-math.sqrt(3.0), -1.0), 1),
    ((-1.0, 0.0), 0),
)


def gen_concentric_circles(n_unlabeled: int, rng: SeededRng) -> WeakDataset:
    """Four concentric circles of integer radii; class = radius index 0..3.
    n_unlabeled full-set samples followed by one labeled point per class."""
    theta = rng.uniform(0.0, 1.0, size=n_unlabeled)
    radii = rng.integers(1, 5, size=n_unlabeled)
    X = radii[:, None] * np.stack(
        [np.cos(2 * np.pi * theta), np.sin(2 * np.pi * theta)], axis=1
    )
    constraints = [ConstraintSet.full()] * n_unlabeled
    truths = [int(r) - 1 for r in radii]
    pts = [p for p, _ in CIRCLE_LABELED_POINTS]
    X = np.vstack([X, np.array(pts)])
    for _, cls in CIRCLE_LABELED_POINTS:
        constraints.append(ConstraintSet.finite((cls,)))
        truths.append(cls)
    return WeakDataset(X, constraints, truths=truths)


def gen_two_gaussians(n: int, nl: int, rng: SeededRng, d: int = 10, delta: float = 3.0):
    """Two unit-variance Gaussian classes at distance delta on the first axis.
    Returns (X, y) with y in {-1, +1}; the first nl samples are the labeled
    split and alternate classes so both appear."""
    if not 0 <= nl <= n:
        raise ValueError("need 0 <= nl <= n")
    y = np.empty(n, dtype=int)
    y[:nl] = [1 if i % 2 == 0 else -1 for i in range(nl)]
    y[nl:] = rng.choice(np.array([-1, 1]), size=n - nl)
    X = rng.normal(size=(n, d))
    X[:, 0] += y * (delta / 2.0)
    return X, y


def gen_ranking_lines(m: int, n: int, c: float, rng: SeededRng) -> WeakDataset:
    """Order m random lines v_i(x) = a_i x + b_i at inputs x in [0,1]; drop the
    pairwise comparisons whose normalized score distance exceeds c."""
    if not 0.0 <= c <= 1.0:
        raise ValueError("corruption level must lie in [0, 1]")
    a = rng.normal(size=m)
    b = rng.normal(size=m)
    x = rng.uniform(0.0, 1.0, size=n)
    constraints = []
    truths = []
    for xi in x:
        v = a * xi + b
        order = np.argsort(np.argsort(v))  # rank vector: highest score -> m-1
        truths.append(tuple(int(r) for r in order))
        diffs = np.abs(v[:, None] - v[None, :])
        dmax = diffs.max()
        fixed = {}
        for i in range(m):
            for j in range(i + 1, m):
                dij = diffs[i, j] / dmax if dmax > 0 else 0.0
                if dij <= c:
                    fixed[(i, j)] = 1 if v[i] > v[j] else -1
        constraints.append(
            ConstraintSet.kendall_partial(fixed) if fixed else ConstraintSet.full()
        )
    return WeakDataset(x[:, None], constraints, truths=truths)


def gen_knn_rates_problem(alpha: float, n: int, rng: SeededRng):
    """Binary labels on [-1,1] with conditional mean g*(x) = sign(x)|x|^(1/alpha).
    Returns (X, y) with y in {-1, +1}."""
    if alpha <= 0:
        raise ValueError("alpha must be positive")
    x = rng.uniform(-1.0, 1.0, size=n)
    g = np.sign(x) * np.abs(x) ** (1.0 / alpha)
    y = np.where(rng.uniform(size=n) < (1.0 + g) / 2.0, 1, -1)
    return x[:, None], y


def stream_conditional(x: float, m: int) -> np.ndarray:
    """Class distribution at x: Diracs at classes 0, 1, 2 for x = 0, 1/2, 1,
    the uniform distribution at x = 1/4 and 3/4, linear in between."""
    uniform = np.full(m, 1.0 / m)
    anchors = [0.0, 0.25, 0.5, 0.75, 1.0]
    diracs = {0.0: 0, 0.5: 1, 1.0: 2}

    def at(anchor):
        if anchor in diracs:
            p = np.zeros(m)
            p[diracs[anchor]] = 1.0
            return p
        return uniform

    for lo, hi in zip(anchors, anchors[1:]):
        if lo <= x <= hi:
            t = (x - lo) / (hi - lo)
            return (1 - t) * at(lo) + t * at(hi)
    raise ValueError("x outside [0, 1]")


def gen_classification_stream(n: int, m: int, epsilon: float, rng: SeededRng):
    """Streaming classification inputs uniform on [0,1] minus the epsilon-bands
    around 1/4 and 3/4, labels drawn from the interpolated conditional."""
    if m < 3:
        raise ValueError("need at least 3 classes")
    xs = np.empty(n)
    ys = np.empty(n, dtype=int)
    filled = 0
    while filled < n:
        cand = rng.uniform(0.0, 1.0, size=2 * (n - filled))
        keep = cand[
            (np.abs(cand - 0.25) > epsilon) & (np.abs(cand - 0.75) > epsilon)
        ]
        take = keep[: n - filled]
        xs[filled : filled + take.size] = take
        filled += take.size
    for i in range(n):
        ys[i] = rng.choice(m, p=stream_conditional(xs[i], m))
    return xs[:, None], ys


def gen_sin_regression(n: int, rng: SeededRng):
    """Noiseless 1-D stream: y = sin(2 pi x), x uniform on [0,1]."""
    x = rng.uniform(0.0, 1.0, size=n)
    return x[:, None], np.sin(2 * np.pi * x)
