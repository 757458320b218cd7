"""Dynamic easy/hard loss weighting and the assembled distillation objective.

The total loss is

    l_all = (1 - gamma) * (l_ce + l_easy) + gamma * l_hard,   gamma = e / E,

where l_easy is forward KL against the teacher over the right subset and
l_hard is forward KL against rectified targets over the bias subset. Both
subset terms sum their per-sample KL and divide by the FULL batch size
(an empty subset contributes exactly 0). This matches masking the batch
with the correctness mask and taking the batch mean; averaging over the
subset size instead makes the hard term explode whenever the bias subset
is small and destabilizes the end of training, where gamma -> 1.

Modes:

* ``full``            -- elimination + rectification + dynamic gamma.
* ``eliminate_only``  -- bias samples dropped from KL; gamma forced to 0.
* ``rectify_only``    -- no elimination: one full-batch KL where bias
                         samples use rectified (step-c) targets; gamma 0.
* ``vanilla_kd``      -- unmasked KL + CE baseline; gamma 0.
* ``step_b_ablation`` -- like full but hard targets are the unnormalized
                         step-b vectors, used directly in sum t' ln(t'/s).
* ``fixed_gamma``     -- like full but with a constant gamma (the "normal"
                         schedule baseline).
"""

from dataclasses import dataclass

import numpy as np

from . import rectify
from .errors import (
    DivergenceInfiniteError,
    InvalidBatchError,
    InvalidParameterError,
    InvalidScheduleError,
)
from .numerics import softmax_rows as _batch_softmax_rows

MODES = (
    "full",
    "eliminate_only",
    "rectify_only",
    "vanilla_kd",
    "step_b_ablation",
    "fixed_gamma",
)

# Clamp applied only inside logarithms, never to stored probabilities.
_LOG_FLOOR = 1e-12


@dataclass(frozen=True)
class EpochSchedule:
    """Position in training: current epoch e in [0, E)."""

    epoch: int
    total_epochs: int


def gamma(sched: EpochSchedule) -> float:
    """Dynamic adjustment coefficient gamma = e / E in [0, 1 - 1/E]."""
    if sched.total_epochs <= 0:
        raise InvalidScheduleError(f"total epochs must be >= 1, got {sched.total_epochs}")
    if not 0 <= sched.epoch < sched.total_epochs:
        raise InvalidScheduleError(
            f"epoch {sched.epoch} outside [0, {sched.total_epochs})"
        )
    return sched.epoch / sched.total_epochs


@dataclass(frozen=True)
class LossBreakdown:
    l_ce: float
    l_easy: float
    l_hard: float
    gamma: float
    l_all: float
    n_right: int
    n_bias: int


def _batch_softmax(logits: np.ndarray, tau: float) -> np.ndarray:
    return _batch_softmax_rows(logits, tau)


def _safe_log(p: np.ndarray) -> np.ndarray:
    return np.log(np.maximum(p, _LOG_FLOOR))


def _kl_rows(targets: np.ndarray, probs: np.ndarray) -> np.ndarray:
    """Row-wise sum t_i ln(t_i / s_i); t rows need not be normalized (step b)."""
    active = targets > 0.0
    terms = np.where(active, targets * (_safe_log(targets) - _safe_log(probs)), 0.0)
    return terms.sum(axis=1)


def _resolve_gamma(mode: str, sched, fixed_gamma) -> float:
    if mode in ("full", "step_b_ablation"):
        if sched is None:
            raise InvalidParameterError(f"mode {mode!r} requires an epoch schedule")
        return gamma(sched)
    if mode == "fixed_gamma":
        if fixed_gamma is None or not 0.0 <= fixed_gamma < 1.0:
            raise InvalidParameterError(
                f"fixed_gamma mode needs a constant in [0, 1), got {fixed_gamma}"
            )
        return float(fixed_gamma)
    return 0.0


def _validate_batch(student_logits, teacher_probs, labels, tau, mode):
    student_logits = np.asarray(student_logits, dtype=np.float64)
    teacher_probs = np.asarray(teacher_probs, dtype=np.float64)
    labels = np.asarray(labels, dtype=np.int64)
    if student_logits.ndim != 2 or student_logits.shape != teacher_probs.shape:
        raise InvalidBatchError(
            f"shape mismatch: student {student_logits.shape}, teacher {teacher_probs.shape}"
        )
    if labels.shape != (student_logits.shape[0],):
        raise InvalidBatchError(f"labels shape {labels.shape} does not match batch")
    if not np.all(np.isfinite(student_logits)):
        raise InvalidBatchError("student logits contain non-finite entries")
    if not np.isfinite(tau) or tau <= 0.0:
        raise InvalidParameterError(f"temperature must be positive, got {tau}")
    if mode not in MODES:
        raise InvalidParameterError(f"unknown mode {mode!r}; expected one of {MODES}")
    return student_logits, teacher_probs, labels


def _rectified_targets(teacher_probs, labels, bias_idx, stage) -> np.ndarray:
    targets = np.empty((bias_idx.shape[0], teacher_probs.shape[1]))
    for row, i in enumerate(bias_idx):
        try:
            targets[row] = rectify.rectify_sample(
                teacher_probs[i], int(labels[i]), mode=stage
            ).values
        except Exception as exc:
            raise type(exc)(f"sample {int(i)}: {exc}") from exc
    return targets


def compute_batch_loss(
    student_logits,
    teacher_probs,
    labels,
    sched: EpochSchedule | None = None,
    tau: float = 1.0,
    mode: str = "full",
    fixed_gamma: float | None = None,
) -> LossBreakdown:
    """Per-batch loss components and the assembled total."""
    student_logits, teacher_probs, labels = _validate_batch(
        student_logits, teacher_probs, labels, tau, mode
    )
    from .partition import build_mask, split_batch

    n = student_logits.shape[0]
    g = _resolve_gamma(mode, sched, fixed_gamma)
    s = _batch_softmax(student_logits, tau)
    split = split_batch(build_mask(teacher_probs, labels))
    right, bias = split.right_indices, split.bias_indices

    if np.any(s[np.arange(n), labels] == 0.0):
        bad = int(np.flatnonzero(s[np.arange(n), labels] == 0.0)[0])
        raise DivergenceInfiniteError(f"sample {bad}: zero student probability at the true class")
    l_ce = float(-_safe_log(s[np.arange(n), labels]).mean())

    if mode == "vanilla_kd":
        l_easy = float(_kl_rows(teacher_probs, s).mean())
        l_hard = 0.0
    elif mode == "rectify_only":
        targets = teacher_probs.copy()
        if bias.size:
            targets[bias] = _rectified_targets(teacher_probs, labels, bias, rectify.STEP_C)
        l_easy = float(_kl_rows(targets, s).mean())
        l_hard = 0.0
    else:
        l_easy = float(_kl_rows(teacher_probs[right], s[right]).sum() / n) if right.size else 0.0
        if mode == "eliminate_only" or not bias.size:
            l_hard = 0.0
        else:
            stage = rectify.STEP_B if mode == "step_b_ablation" else rectify.STEP_C
            hard_targets = _rectified_targets(teacher_probs, labels, bias, stage)
            l_hard = float(_kl_rows(hard_targets, s[bias]).sum() / n)

    l_all = (1.0 - g) * (l_ce + l_easy) + g * l_hard
    return LossBreakdown(
        l_ce=l_ce,
        l_easy=l_easy,
        l_hard=l_hard,
        gamma=g,
        l_all=l_all,
        n_right=int(right.size),
        n_bias=int(bias.size),
    )


def batch_loss_gradient(
    student_logits,
    teacher_probs,
    labels,
    sched: EpochSchedule | None = None,
    tau: float = 1.0,
    mode: str = "full",
    fixed_gamma: float | None = None,
) -> np.ndarray:
    """Gradient of the assembled batch loss w.r.t. each student logit vector."""
    student_logits, teacher_probs, labels = _validate_batch(
        student_logits, teacher_probs, labels, tau, mode
    )
    from .partition import build_mask, split_batch

    n = student_logits.shape[0]
    g = _resolve_gamma(mode, sched, fixed_gamma)
    s = _batch_softmax(student_logits, tau)
    split = split_batch(build_mask(teacher_probs, labels))
    right, bias = split.right_indices, split.bias_indices

    onehot = np.zeros_like(s)
    onehot[np.arange(n), labels] = 1.0
    grad = (1.0 - g) / n * (s - onehot) / tau

    if mode == "vanilla_kd":
        grad += (s - teacher_probs) / (tau * n)
    elif mode == "rectify_only":
        targets = teacher_probs.copy()
        if bias.size:
            targets[bias] = _rectified_targets(teacher_probs, labels, bias, rectify.STEP_C)
        grad += (s - targets) / (tau * n)
    else:
        if right.size:
            grad[right] += (1.0 - g) / n * (s[right] - teacher_probs[right]) / tau
        if mode != "eliminate_only" and bias.size and g != 0.0:
            stage = rectify.STEP_B if mode == "step_b_ablation" else rectify.STEP_C
            hard_targets = _rectified_targets(teacher_probs, labels, bias, stage)
            mass = hard_targets.sum(axis=1, keepdims=True)
            grad[bias] += g / n * (mass * s[bias] - hard_targets) / tau
    return grad
