"""Split each batch into right knowledge and bias by teacher correctness.

A sample carries right knowledge when the teacher's argmax matches its
label (ties broken toward the lowest class index, everywhere). We gather
the two groups by index instead of multiplying by a 0/1 mask: the loss
values are identical, but index gathering never produces 0*ln(0/0) terms.
"""

from dataclasses import dataclass

import numpy as np

from .errors import InvalidBatchError
from .numerics import as_prob_vector


@dataclass(frozen=True)
class BatchSplit:
    """Disjoint index lists whose union covers the batch, order preserved."""

    right_indices: np.ndarray
    bias_indices: np.ndarray


def build_mask(teacher_probs, labels) -> np.ndarray:
    """Boolean flag per sample: teacher argmax == label (lowest-index ties)."""
    teacher_probs = np.asarray(teacher_probs, dtype=np.float64)
    labels = np.asarray(labels, dtype=np.int64)
    if teacher_probs.ndim != 2 or labels.ndim != 1 or teacher_probs.shape[0] != labels.shape[0]:
        raise InvalidBatchError(
            f"batch size mismatch: probs {teacher_probs.shape}, labels {labels.shape}"
        )
    for row in teacher_probs:
        as_prob_vector(row)
    return np.argmax(teacher_probs, axis=1) == labels


def split_batch(mask) -> BatchSplit:
    """Partition batch indices by mask value, preserving original order."""
    mask = np.asarray(mask, dtype=bool)
    idx = np.arange(mask.shape[0])
    return BatchSplit(right_indices=idx[mask], bias_indices=idx[~mask])
