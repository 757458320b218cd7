"""Desk-scale training loops: plain-CE teacher training and distillation.

Single-threaded by contract; every run is fully determined by
(config, datasets). The teacher is frozen during distillation: it is only
ever read through ``model.forward``.
"""

from dataclasses import dataclass

import numpy as np

from . import model
from .data import Dataset, batch_iter
from .errors import ConfigError, InvalidParameterError
from .numerics import softmax_rows
from .schedule import EpochSchedule, batch_loss_gradient, compute_batch_loss

METRICS_COLUMNS = (
    "epoch",
    "gamma",
    "loss_total",
    "loss_ce",
    "loss_easy",
    "loss_hard",
    "train_acc",
    "val_acc",
    "teacher_right_fraction",
)

TEACHER_METRICS_COLUMNS = ("epoch", "loss_ce", "train_acc", "val_acc")


@dataclass(frozen=True)
class TrainConfig:
    learning_rate: float = 0.1
    momentum: float = 0.9
    epochs: int = 60
    batch_size: int = 32
    seed: int = 0
    tau: float = 1.0
    mode: str = "full"
    fixed_gamma: float | None = None

    def __post_init__(self):
        if self.learning_rate <= 0.0:
            raise InvalidParameterError(f"learning rate must be positive, got {self.learning_rate}")
        if not 0.0 <= self.momentum < 1.0:
            raise InvalidParameterError(f"momentum must lie in [0, 1), got {self.momentum}")
        if self.epochs < 1 or self.batch_size < 1:
            raise InvalidParameterError("epochs and batch size must be >= 1")
        if self.tau <= 0.0:
            raise InvalidParameterError(f"temperature must be positive, got {self.tau}")


def train_teacher(train_ds: Dataset, dims, cfg: TrainConfig, val_ds: Dataset | None = None):
    """Plain cross-entropy training; returns (params, per-epoch metric rows)."""
    params = model.init(dims, cfg.seed)
    velocity = model.init_velocity(params)
    rows = []
    for epoch in range(cfg.epochs):
        loss_sum = 0.0
        for idx in batch_iter(train_ds, cfg.batch_size, cfg.seed, epoch):
            x, y = train_ds.features[idx], train_ds.labels[idx]
            logits = model.forward(params, x)
            probs = softmax_rows(logits)
            loss_sum += float(
                -np.log(np.maximum(probs[np.arange(len(idx)), y], 1e-12)).sum()
            )
            upstream = probs.copy()
            upstream[np.arange(len(idx)), y] -= 1.0
            grads = model.backward(params, x, upstream / len(idx))
            model.sgd_step(params, grads, velocity, cfg.learning_rate, cfg.momentum)
        train_acc, _ = model.evaluate(params, train_ds.features, train_ds.labels)
        val_acc = (
            model.evaluate(params, val_ds.features, val_ds.labels)[0]
            if val_ds is not None
            else float("nan")
        )
        rows.append(
            {
                "epoch": epoch,
                "loss_ce": loss_sum / train_ds.n,
                "train_acc": train_acc,
                "val_acc": val_acc,
            }
        )
    return params, rows


def distill(
    teacher: model.MlpParams,
    student_dims,
    train_ds: Dataset,
    cfg: TrainConfig,
    val_ds: Dataset | None = None,
):
    """Distill the frozen teacher into a fresh student; returns (params, rows)."""
    if teacher.dims[-1] != train_ds.n_classes:
        raise ConfigError(
            f"teacher output width {teacher.dims[-1]} != dataset classes {train_ds.n_classes}"
        )
    if student_dims[-1] != train_ds.n_classes:
        raise ConfigError(
            f"student output width {student_dims[-1]} != dataset classes {train_ds.n_classes}"
        )
    student = model.init(student_dims, cfg.seed)
    velocity = model.init_velocity(student)
    rows = []
    for epoch in range(cfg.epochs):
        sched = EpochSchedule(epoch=epoch, total_epochs=cfg.epochs)
        sums = {"loss_total": 0.0, "loss_ce": 0.0, "loss_easy": 0.0, "loss_hard": 0.0}
        n_right = 0
        epoch_gamma = 0.0
        for idx in batch_iter(train_ds, cfg.batch_size, cfg.seed, epoch):
            x, y = train_ds.features[idx], train_ds.labels[idx]
            teacher_probs = softmax_rows(model.forward(teacher, x), cfg.tau)
            student_logits = model.forward(student, x)
            breakdown = compute_batch_loss(
                student_logits, teacher_probs, y, sched, cfg.tau, cfg.mode, cfg.fixed_gamma
            )
            upstream = batch_loss_gradient(
                student_logits, teacher_probs, y, sched, cfg.tau, cfg.mode, cfg.fixed_gamma
            )
            grads = model.backward(student, x, upstream)
            model.sgd_step(student, grads, velocity, cfg.learning_rate, cfg.momentum)
            w = len(idx)
            sums["loss_total"] += breakdown.l_all * w
            sums["loss_ce"] += breakdown.l_ce * w
            sums["loss_easy"] += breakdown.l_easy * w
            sums["loss_hard"] += breakdown.l_hard * w
            n_right += breakdown.n_right
            epoch_gamma = breakdown.gamma
        train_acc, _ = model.evaluate(student, train_ds.features, train_ds.labels)
        val_acc = (
            model.evaluate(student, val_ds.features, val_ds.labels)[0]
            if val_ds is not None
            else float("nan")
        )
        rows.append(
            {
                "epoch": epoch,
                "gamma": epoch_gamma,
                "loss_total": sums["loss_total"] / train_ds.n,
                "loss_ce": sums["loss_ce"] / train_ds.n,
                "loss_easy": sums["loss_easy"] / train_ds.n,
                "loss_hard": sums["loss_hard"] / train_ds.n,
                "train_acc": train_acc,
                "val_acc": val_acc,
                "teacher_right_fraction": n_right / train_ds.n,
            }
        )
    return student, rows


def write_metrics_csv(rows, path, columns=METRICS_COLUMNS) -> None:
    """Deterministic decimal-text CSV, fixed column order."""
    lines = [",".join(columns)]
    for row in rows:
        cells = []
        for col in columns:
            v = row[col]
            cells.append(str(v) if isinstance(v, int) else repr(float(v)))
        lines.append(",".join(cells))
    with open(path, "w") as fh:
        fh.write("\n".join(lines) + "\n")
