"""weaklearn: weakly supervised learning toolkit.

Partial-label structured prediction (infimum / average / supremum set
losses), label disambiguation, kernelized Laplacian semi-supervised
regularization, and active labeling from one-bit queries.
"""

__version__ = "0.1.0"

from .core import (
    OutputSpace,
    ConstraintSet,
    LossSpec,
    WeakDataset,
    SeededRng,
    loss_eval,
    embed_kendall,
    constraint_contains,
)

__all__ = [
    "OutputSpace",
    "ConstraintSet",
    "LossSpec",
    "WeakDataset",
    "SeededRng",
    "loss_eval",
    "embed_kendall",
    "constraint_contains",
]
