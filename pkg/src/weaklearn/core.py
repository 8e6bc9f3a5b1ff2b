"""Shared domain types: output spaces, weak labels (constraint sets),
losses and their bilinear embeddings, datasets, and seeded randomness.

Conventions fixed here and relied on everywhere else:

* Discrete labels are dense integer ids ``0..m-1`` (an optional name table
  can be attached to :class:`OutputSpace` for display).
* Permutations are represented as rank vectors: ``sigma[i]`` is the rank of
  item ``i``, higher rank = preferred.  The pairwise embedding is
  ``phi(sigma)[(i,j)] = sign(sigma[i] - sigma[j])`` with pairs ``(i, j)``,
  ``i < j``, ordered lexicographically.
* The Kendall loss is the number of discordant pairs,
  ``l(y, z) = (C - <phi(y), phi(z)>) / 2`` with ``C = m(m-1)/2``; it is 0 on
  the diagonal and ``C`` between a permutation and its reverse.
* Multilabel outputs are 0/1 tuples of length m; the Hamming loss counts
  differing coordinates.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from typing import Iterable, Iterator, Mapping, Sequence

import numpy as np

__all__ = [
    "OutputSpace",
    "ConstraintSet",
    "LossSpec",
    "WeakDataset",
    "SeededRng",
    "loss_eval",
    "embed_kendall",
    "constraint_contains",
    "pair_index",
    "all_pairs",
]


# ---------------------------------------------------------------------------
# Output spaces


@dataclass(frozen=True)
class OutputSpace:
    """A structured output space: classes, multilabel tags, permutations of
    m items, or m-dimensional reals."""

    kind: str  # "classes" | "multilabel" | "permutations" | "reals"
    m: int
    names: tuple[str, ...] | None = None

    _KINDS = ("classes", "multilabel", "permutations", "reals")

    def __post_init__(self):
        if self.kind not in self._KINDS:
            raise ValueError(f"unknown output-space kind {self.kind!r}")
        if self.m < 1:
            raise ValueError("m must be >= 1")
        if self.kind == "permutations" and self.m < 2:
            raise ValueError("permutations need m >= 2")
        if self.names is not None and len(self.names) != self.m:
            raise ValueError("name table length must equal m")

    @property
    def is_finite(self) -> bool:
        return self.kind in ("classes", "multilabel", "permutations")

    def size(self) -> int:
        """Cardinality of a finite space."""
        if self.kind == "classes":
            return self.m
        if self.kind == "multilabel":
            return 2**self.m
        if self.kind == "permutations":
            return math.factorial(self.m)
        raise ValueError("reals space is not finite")

    def labels(self) -> Iterator:
        """Enumerate all labels of a finite space in a fixed canonical order
        (this order defines the dense integer ids)."""
        if self.kind == "classes":
            yield from range(self.m)
        elif self.kind == "multilabel":
            for bits in itertools.product((0, 1), repeat=self.m):
                yield bits
        elif self.kind == "permutations":
            for perm in itertools.permutations(range(self.m)):
                yield perm
        else:
            raise ValueError("reals space is not enumerable")

    def label_id(self, y) -> int:
        """Dense integer id of a label in the canonical enumeration order."""
        if self.kind == "classes":
            return int(y)
        if self.kind == "multilabel":
            return int("".join(str(b) for b in y), 2)
        if self.kind == "permutations":
            # Lehmer code of the rank vector in itertools enumeration order.
            items = list(y)
            rank = 0
            for i in range(self.m):
                smaller = sum(1 for j in range(i + 1, self.m) if items[j] < items[i])
                rank += smaller * math.factorial(self.m - 1 - i)
            return rank
        raise ValueError("reals labels have no dense id")

    def contains(self, y) -> bool:
        if self.kind == "classes":
            return isinstance(y, (int, np.integer)) and 0 <= y < self.m
        if self.kind == "multilabel":
            return len(y) == self.m and all(b in (0, 1) for b in y)
        if self.kind == "permutations":
            return len(y) == self.m and sorted(y) == list(range(self.m))
        # reals
        arr = np.atleast_1d(np.asarray(y, dtype=float))
        return arr.shape == (self.m,) and bool(np.all(np.isfinite(arr)))


# ---------------------------------------------------------------------------
# Pair indexing for permutation embeddings


def all_pairs(m: int) -> list[tuple[int, int]]:
    """Lexicographic list of pairs (i, j), i < j, over m items."""
    return [(i, j) for i in range(m) for j in range(i + 1, m)]


def pair_index(m: int, i: int, j: int) -> int:
    """Position of the pair (i, j), i < j, in the lexicographic order."""
    if not 0 <= i < j < m:
        raise ValueError(f"need 0 <= i < j < m, got ({i}, {j}) with m={m}")
    # pairs before row i: (m-1) + (m-2) + ... + (m-i)
    return i * m - i * (i + 1) // 2 + (j - i - 1)


def embed_kendall(sigma: Sequence[int]) -> np.ndarray:
    """Pairwise-sign embedding of a rank vector.

    phi(sigma)[(i,j)] = sign(sigma[i] - sigma[j]) for i < j in lexicographic
    order; entries are exactly +-1 since ranks are distinct.
    """
    m = len(sigma)
    if sorted(sigma) != list(range(m)):
        raise ValueError("sigma must be a permutation of 0..m-1 (a rank vector)")
    out = np.empty(m * (m - 1) // 2)
    k = 0
    for i in range(m):
        for j in range(i + 1, m):
            out[k] = 1.0 if sigma[i] > sigma[j] else -1.0
            k += 1
    return out


# ---------------------------------------------------------------------------
# Constraint sets (weak labels)


@dataclass(frozen=True)
class ConstraintSet:
    """A weak label: the set S the true label is known to lie in.

    Variants:
      finite          -- explicit candidate list (discrete labels)
      box             -- coordinatewise interval [lower, upper] (reals);
                         infinite bounds encode half-lines
      halfspaceHistory-- list of (direction u, offset o, bit) records, each
                         asserting sign(<y, u> - o) == bit with sign(0)=+1
      kendallPartial  -- fixed pairwise-order coordinates (i,j) -> +-1
      full            -- no information
    """

    variant: str
    labels: tuple = ()
    lower: np.ndarray | None = None
    upper: np.ndarray | None = None
    halfspaces: tuple = ()  # ((u, offset, bit), ...)
    fixed: Mapping[tuple[int, int], int] | None = None

    _VARIANTS = ("finite", "box", "halfspaceHistory", "kendallPartial", "full")

    def __post_init__(self):
        if self.variant not in self._VARIANTS:
            raise ValueError(f"unknown constraint variant {self.variant!r}")
        if self.variant == "finite":
            if len(self.labels) == 0:
                raise ValueError("finite constraint set must be non-empty")
        elif self.variant == "box":
            lo = np.atleast_1d(np.asarray(self.lower, dtype=float))
            up = np.atleast_1d(np.asarray(self.upper, dtype=float))
            if lo.shape != up.shape:
                raise ValueError("box bounds must share a shape")
            if np.any(lo > up):
                raise ValueError("box requires lower <= upper coordinatewise")
            object.__setattr__(self, "lower", lo)
            object.__setattr__(self, "upper", up)
        elif self.variant == "halfspaceHistory":
            recs = []
            for u, offset, bit in self.halfspaces:
                u = np.atleast_1d(np.asarray(u, dtype=float))
                if abs(float(np.linalg.norm(u)) - 1.0) > 1e-9:
                    raise ValueError("halfspace directions must be unit norm")
                if bit not in (-1, 1):
                    raise ValueError("halfspace bit must be +-1")
                recs.append((u, float(offset), int(bit)))
            object.__setattr__(self, "halfspaces", tuple(recs))
        elif self.variant == "kendallPartial":
            fixed = {}
            for (i, j), v in dict(self.fixed or {}).items():
                if v not in (-1, 1):
                    raise ValueError("kendallPartial values must be +-1")
                if i == j:
                    raise ValueError("kendallPartial pairs need i != j")
                if i > j:
                    i, j, v = j, i, -v
                if fixed.get((i, j), v) != v:
                    raise ValueError(f"antisymmetry violated on pair ({i},{j})")
                fixed[(i, j)] = v
            object.__setattr__(self, "fixed", fixed)

    # Constructors -----------------------------------------------------------

    @staticmethod
    def finite(labels: Iterable) -> "ConstraintSet":
        return ConstraintSet("finite", labels=tuple(labels))

    @staticmethod
    def box(lower, upper) -> "ConstraintSet":
        return ConstraintSet("box", lower=lower, upper=upper)

    @staticmethod
    def halfspace_history(records) -> "ConstraintSet":
        return ConstraintSet("halfspaceHistory", halfspaces=tuple(records))

    @staticmethod
    def kendall_partial(fixed: Mapping[tuple[int, int], int]) -> "ConstraintSet":
        return ConstraintSet("kendallPartial", fixed=fixed)

    @staticmethod
    def full() -> "ConstraintSet":
        return ConstraintSet("full")

    @property
    def is_singleton(self) -> bool:
        return self.variant == "finite" and len(self.labels) == 1

    def __hash__(self):
        if self.variant == "finite":
            return hash(("finite", self.labels))
        if self.variant == "kendallPartial":
            return hash(("kendallPartial", tuple(sorted(self.fixed.items()))))
        if self.variant == "box":
            return hash(("box", self.lower.tobytes(), self.upper.tobytes()))
        return hash(self.variant)


def constraint_contains(s: ConstraintSet, y) -> bool:
    """True iff label y satisfies every recorded constraint of s."""
    if s.variant == "full":
        return True
    if s.variant == "finite":
        return any(_label_eq(y, cand) for cand in s.labels)
    if s.variant == "box":
        arr = np.atleast_1d(np.asarray(y, dtype=float))
        return bool(np.all(arr >= s.lower) and np.all(arr <= s.upper))
    if s.variant == "halfspaceHistory":
        arr = np.atleast_1d(np.asarray(y, dtype=float))
        for u, offset, bit in s.halfspaces:
            val = float(arr @ u) - offset
            sign = 1 if val >= 0 else -1  # sign(0) = +1 convention
            if sign != bit:
                return False
        return True
    if s.variant == "kendallPartial":
        for (i, j), v in s.fixed.items():
            if (1 if y[i] > y[j] else -1) != v:
                return False
        return True
    raise AssertionError(s.variant)


def _label_eq(a, b) -> bool:
    if isinstance(a, (int, np.integer)) and isinstance(b, (int, np.integer)):
        return int(a) == int(b)
    try:
        return tuple(a) == tuple(b)
    except TypeError:
        return a == b


# ---------------------------------------------------------------------------
# Losses and embeddings


class LossSpec:
    """A loss with an optional bilinear embedding l(z, y) = <psi(z), phi(y)>.

    Finite-space losses carry an exact factorization; regression losses
    (squared, absoluteDeviation) have closed forms only.
    """

    def __init__(self, kind: str, space: OutputSpace, table: np.ndarray | None = None):
        self.kind = kind
        self.space = space
        self._table = table
        if kind == "table":
            t = np.asarray(table, dtype=float)
            if t.ndim != 2 or t.shape[0] != t.shape[1]:
                raise ValueError("loss table must be square")
            if t.shape[0] != space.size():
                raise ValueError("loss table size must match the output space")
            if np.any(np.diag(t) != 0) or np.any(t < 0):
                raise ValueError("loss table must be nonnegative with zero diagonal")
            self._table = t

    # Factories --------------------------------------------------------------

    @staticmethod
    def zero_one(m: int, names: tuple[str, ...] | None = None) -> "LossSpec":
        return LossSpec("zeroOne", OutputSpace("classes", m, names))

    @staticmethod
    def hamming(m: int) -> "LossSpec":
        return LossSpec("hamming", OutputSpace("multilabel", m))

    @staticmethod
    def kendall(m: int) -> "LossSpec":
        return LossSpec("kendall", OutputSpace("permutations", m))

    @staticmethod
    def squared(m: int = 1) -> "LossSpec":
        return LossSpec("squared", OutputSpace("reals", m))

    @staticmethod
    def absolute_deviation(m: int = 1) -> "LossSpec":
        return LossSpec("absoluteDeviation", OutputSpace("reals", m))

    @staticmethod
    def from_table(table, names: tuple[str, ...] | None = None) -> "LossSpec":
        t = np.asarray(table, dtype=float)
        return LossSpec("table", OutputSpace("classes", t.shape[0], names), t)

    # Evaluation ---------------------------------------------------------------

    def eval(self, z, y) -> float:
        sp = self.space
        if self.kind in ("zeroOne", "table"):
            if not (sp.contains(z) and sp.contains(y)):
                raise ValueError("label outside the output space")
            if self.kind == "zeroOne":
                return 0.0 if int(z) == int(y) else 1.0
            return float(self._table[int(z), int(y)])
        if self.kind == "hamming":
            if not (sp.contains(z) and sp.contains(y)):
                raise ValueError("label outside the output space")
            return float(sum(1 for a, b in zip(z, y) if a != b))
        if self.kind == "kendall":
            if not (sp.contains(z) and sp.contains(y)):
                raise ValueError("label outside the output space")
            c = sp.m * (sp.m - 1) / 2
            return float((c - embed_kendall(z) @ embed_kendall(y)) / 2)
        if self.kind == "squared":
            d = np.atleast_1d(np.asarray(z, dtype=float)) - np.atleast_1d(
                np.asarray(y, dtype=float)
            )
            if d.shape != (sp.m,):
                raise ValueError("dimension mismatch")
            return float(d @ d)
        if self.kind == "absoluteDeviation":
            d = np.atleast_1d(np.asarray(z, dtype=float)) - np.atleast_1d(
                np.asarray(y, dtype=float)
            )
            if d.shape != (sp.m,):
                raise ValueError("dimension mismatch")
            return float(np.linalg.norm(d))
        raise AssertionError(self.kind)

    @property
    def table(self) -> np.ndarray:
        """Dense loss table over the finite space (canonical label order)."""
        if self._table is None:
            labels = list(self.space.labels())
            self._table = np.array(
                [[self.eval(z, y) for y in labels] for z in labels]
            )
        return self._table

    # Embeddings ---------------------------------------------------------------
    # zeroOne:  psi(z) = e_z,                      phi(y) = 1 - e_y
    # table:    psi(z) = L[z, :],                  phi(y) = e_y
    # kendall:  psi(z) = (-phi_k(z)/2, C/2),       phi(y) = (phi_k(y), 1)
    # hamming:  psi(z) = (-(2z-1)/2, m/2),         phi(y) = (2y-1, 1)
    # The last two use an affine trick to absorb the constant term.

    @property
    def embedding_dim(self) -> int:
        sp = self.space
        if self.kind in ("zeroOne", "table"):
            return sp.m
        if self.kind == "hamming":
            return sp.m + 1
        if self.kind == "kendall":
            return sp.m * (sp.m - 1) // 2 + 1
        raise ValueError(f"{self.kind} loss has no finite embedding")

    def psi(self, z) -> np.ndarray:
        sp = self.space
        if self.kind == "zeroOne":
            out = np.zeros(sp.m)
            out[int(z)] = 1.0
            return out
        if self.kind == "table":
            return self._table[int(z), :].copy()
        if self.kind == "hamming":
            sz = 2.0 * np.asarray(z, dtype=float) - 1.0
            return np.concatenate([-sz / 2.0, [sp.m / 2.0]])
        if self.kind == "kendall":
            c = sp.m * (sp.m - 1) / 2
            return np.concatenate([-embed_kendall(z) / 2.0, [c / 2.0]])
        raise ValueError(f"{self.kind} loss has no finite embedding")

    def phi(self, y) -> np.ndarray:
        sp = self.space
        if self.kind == "zeroOne":
            out = np.ones(sp.m)
            out[int(y)] = 0.0
            return out
        if self.kind == "table":
            out = np.zeros(sp.m)
            out[int(y)] = 1.0
            return out
        if self.kind == "hamming":
            sy = 2.0 * np.asarray(y, dtype=float) - 1.0
            return np.concatenate([sy, [1.0]])
        if self.kind == "kendall":
            return np.concatenate([embed_kendall(y), [1.0]])
        raise ValueError(f"{self.kind} loss has no finite embedding")

    def psi_matrix(self) -> np.ndarray:
        """Stacked psi over the canonical label order (rows)."""
        return np.array([self.psi(z) for z in self.space.labels()])

    def phi_matrix(self) -> np.ndarray:
        return np.array([self.phi(y) for y in self.space.labels()])


def loss_eval(loss: LossSpec, z, y) -> float:
    """l(z, y): cost of predicting z when the truth is y."""
    return loss.eval(z, y)


# ---------------------------------------------------------------------------
# Datasets


@dataclass(frozen=True)
class WeakDataset:
    """Weakly labeled sample: inputs X (n x d) and one constraint set per row.

    ``truths`` optionally retains the hidden labels for simulated oracles and
    risk evaluation; learning code must not read it.
    """

    inputs: np.ndarray
    constraints: tuple[ConstraintSet, ...]
    truths: tuple | None = None

    def __post_init__(self):
        x = np.asarray(self.inputs, dtype=float)
        if x.ndim == 1:
            x = x[:, None]
        object.__setattr__(self, "inputs", x)
        object.__setattr__(self, "constraints", tuple(self.constraints))
        if len(self.constraints) != x.shape[0]:
            raise ValueError("inputs and constraints must have equal length")
        if self.truths is not None:
            object.__setattr__(self, "truths", tuple(self.truths))
            if len(self.truths) != x.shape[0]:
                raise ValueError("truths length must match inputs")

    def __len__(self) -> int:
        return self.inputs.shape[0]


# ---------------------------------------------------------------------------
# Seeded randomness


class SeededRng:
    """Counter-based seeded generator (Philox) with per-trial substreams.

    Identical (seed, stream) pairs yield bit-identical draw sequences;
    substreams with distinct indices are statistically independent.
    """

    def __init__(self, seed: int, stream: int = 0):
        self.seed = int(seed)
        self.stream = int(stream)
        key = np.array([self.seed % 2**64, self.stream % 2**64], dtype=np.uint64)
        self.generator = np.random.Generator(np.random.Philox(key=key))

    def substream(self, index: int) -> "SeededRng":
        """Independent generator for trial `index` (1-based offsets keep the
        root stream distinct from substream 0)."""
        return SeededRng(self.seed, self.stream * 1_000_003 + 1 + int(index))

    # Pass-throughs used across the package ----------------------------------

    def uniform(self, low=0.0, high=1.0, size=None):
        return self.generator.uniform(low, high, size)

    def normal(self, loc=0.0, scale=1.0, size=None):
        return self.generator.normal(loc, scale, size)

    def integers(self, low, high=None, size=None):
        return self.generator.integers(low, high, size)

    def choice(self, a, size=None, replace=True, p=None):
        return self.generator.choice(a, size=size, replace=replace, p=p)

    def permutation(self, x):
        return self.generator.permutation(x)

    def sphere(self, m: int) -> np.ndarray:
        """Uniform draw on the unit sphere S^{m-1} via normalized Gaussians."""
        while True:
            v = self.generator.normal(size=m)
            n = np.linalg.norm(v)
            if n > 1e-12:
                return v / n
