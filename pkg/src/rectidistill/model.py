"""Minimal dense feed-forward networks with exact reverse-mode gradients.

ReLU hidden layers, identity output (logits). Weights are Glorot-uniform
draws from the repository's PCG64 stream; biases start at zero. The
logit-level upstream gradient comes from the schedule module, so this
module only needs plain backpropagation, momentum SGD, evaluation, and a
human-readable text checkpoint format (documented in the README):

    rectidistill-mlp v1
    layers <L>
    layer <out> <in>
    <out> rows of <in> weight values      (shortest round-trip decimal)
    1 row of <out> bias values
    ... repeated per layer
"""

import os
from dataclasses import dataclass

import numpy as np

from .errors import (
    CheckpointParseError,
    InvalidArchitectureError,
    InvalidInputError,
    TrainingDivergedError,
)
from .rng import generator

_MAGIC = "rectidistill-mlp v1"


@dataclass
class MlpParams:
    """Per-layer (out x in) weight matrices and (out,) bias vectors."""

    weights: list[np.ndarray]
    biases: list[np.ndarray]

    @property
    def dims(self) -> list[int]:
        return [self.weights[0].shape[1]] + [w.shape[0] for w in self.weights]


def init(dims, seed: int) -> MlpParams:
    """Glorot-uniform weights, zero biases, fully determined by the seed."""
    dims = [int(d) for d in dims]
    if len(dims) < 2 or any(d < 1 for d in dims):
        raise InvalidArchitectureError(f"need >= 2 positive layer widths, got {dims}")
    rng = generator(int(seed))
    weights, biases = [], []
    for fan_in, fan_out in zip(dims[:-1], dims[1:]):
        bound = np.sqrt(6.0 / (fan_in + fan_out))
        weights.append(rng.uniform(-bound, bound, size=(fan_out, fan_in)))
        biases.append(np.zeros(fan_out))
    return MlpParams(weights=weights, biases=biases)


def _forward_cached(p: MlpParams, x: np.ndarray):
    """Return (logits, per-layer activations); x is (n, d)."""
    acts = [x]
    h = x
    last = len(p.weights) - 1
    for i, (w, b) in enumerate(zip(p.weights, p.biases)):
        z = h @ w.T + b
        h = z if i == last else np.maximum(z, 0.0)
        acts.append(h)
    return h, acts


def forward(p: MlpParams, x) -> np.ndarray:
    """Logits for a single feature vector (d,) or a batch (n, d)."""
    x = np.asarray(x, dtype=np.float64)
    single = x.ndim == 1
    if single:
        x = x[None, :]
    if x.ndim != 2 or x.shape[1] != p.weights[0].shape[1]:
        raise InvalidInputError(
            f"input width {x.shape} does not match layer width {p.weights[0].shape[1]}"
        )
    logits, _ = _forward_cached(p, x)
    return logits[0] if single else logits


def backward(p: MlpParams, x, upstream) -> list[tuple[np.ndarray, np.ndarray]]:
    """Parameter gradients given d(loss)/d(logits), summed over the batch.

    The upstream already carries any 1/n weighting. ReLU subgradient at 0
    is taken as 0.
    """
    x = np.asarray(x, dtype=np.float64)
    upstream = np.asarray(upstream, dtype=np.float64)
    if x.ndim == 1:
        x = x[None, :]
        upstream = upstream[None, :]
    if upstream.shape != (x.shape[0], p.weights[-1].shape[0]):
        raise InvalidInputError(
            f"upstream shape {upstream.shape} does not match batch/output widths"
        )
    _, acts = _forward_cached(p, x)
    grads: list[tuple[np.ndarray, np.ndarray]] = [None] * len(p.weights)  # type: ignore[list-item]
    delta = upstream
    for i in range(len(p.weights) - 1, -1, -1):
        grads[i] = (delta.T @ acts[i], delta.sum(axis=0))
        if i > 0:
            delta = (delta @ p.weights[i]) * (acts[i] > 0.0)
    return grads


def init_velocity(p: MlpParams) -> list[tuple[np.ndarray, np.ndarray]]:
    return [(np.zeros_like(w), np.zeros_like(b)) for w, b in zip(p.weights, p.biases)]


def sgd_step(p: MlpParams, grads, velocity, lr: float, momentum: float = 0.0) -> None:
    """In-place heavy-ball update: v <- momentum*v + g; p <- p - lr*v."""
    if lr <= 0.0:
        raise InvalidInputError(f"learning rate must be positive, got {lr}")
    for (gw, gb), (vw, vb) in zip(grads, velocity):
        if not (np.all(np.isfinite(gw)) and np.all(np.isfinite(gb))):
            raise TrainingDivergedError("non-finite gradients")
        vw *= momentum
        vw += gw
        vb *= momentum
        vb += gb
    for (w, b), (vw, vb) in zip(zip(p.weights, p.biases), velocity):
        w -= lr * vw
        b -= lr * vb


def evaluate(p: MlpParams, features, labels) -> tuple[float, float]:
    """(top-1 accuracy, mean CE at tau=1); argmax ties go to the lowest index."""
    features = np.asarray(features, dtype=np.float64)
    labels = np.asarray(labels, dtype=np.int64)
    if features.shape[0] == 0:
        raise InvalidInputError("empty dataset")
    logits = forward(p, features)
    e = np.exp(logits - logits.max(axis=1, keepdims=True))
    probs = e / e.sum(axis=1, keepdims=True)
    acc = float(np.mean(np.argmax(logits, axis=1) == labels))
    mean_ce = float(-np.log(np.maximum(probs[np.arange(labels.shape[0]), labels], 1e-12)).mean())
    return acc, mean_ce


def flatten_params(p: MlpParams) -> np.ndarray:
    return np.concatenate([a.ravel() for w, b in zip(p.weights, p.biases) for a in (w, b)])


def unflatten_params(template: MlpParams, vec) -> MlpParams:
    vec = np.asarray(vec, dtype=np.float64)
    weights, biases, k = [], [], 0
    for w, b in zip(template.weights, template.biases):
        weights.append(vec[k : k + w.size].reshape(w.shape).copy())
        k += w.size
        biases.append(vec[k : k + b.size].copy())
        k += b.size
    if k != vec.size:
        raise InvalidInputError(f"flat vector length {vec.size} does not match template ({k})")
    return MlpParams(weights=weights, biases=biases)


def _fmt_row(row: np.ndarray) -> str:
    return " ".join(repr(float(v)) for v in row)


def save_checkpoint(p: MlpParams, path) -> None:
    """Atomic text serialization; every float round-trips exactly."""
    lines = [_MAGIC, f"layers {len(p.weights)}"]
    for w, b in zip(p.weights, p.biases):
        lines.append(f"layer {w.shape[0]} {w.shape[1]}")
        lines.extend(_fmt_row(row) for row in w)
        lines.append(_fmt_row(b))
    tmp = f"{path}.tmp"
    with open(tmp, "w") as fh:
        fh.write("\n".join(lines) + "\n")
    os.replace(tmp, path)


def load_checkpoint(path) -> MlpParams:
    with open(path) as fh:
        lines = fh.read().splitlines()

    def parse_error(lineno: int, msg: str):
        return CheckpointParseError(f"{path}:{lineno}: {msg}")

    def floats(lineno: int, expected: int) -> np.ndarray:
        if lineno > len(lines):
            raise parse_error(lineno, "unexpected end of file")
        parts = lines[lineno - 1].split()
        if len(parts) != expected:
            raise parse_error(lineno, f"expected {expected} values, got {len(parts)}")
        try:
            return np.array([float(v) for v in parts])
        except ValueError as exc:
            raise parse_error(lineno, f"non-numeric value: {exc}") from exc

    if not lines or lines[0] != _MAGIC:
        raise parse_error(1, f"missing header {_MAGIC!r}")
    if len(lines) < 2 or not lines[1].startswith("layers "):
        raise parse_error(2, "missing 'layers <L>' line")
    try:
        n_layers = int(lines[1].split()[1])
    except (IndexError, ValueError) as exc:
        raise parse_error(2, "malformed layer count") from exc
    if n_layers < 1:
        raise parse_error(2, f"layer count must be >= 1, got {n_layers}")

    weights, biases = [], []
    lineno = 3
    for _ in range(n_layers):
        if lineno > len(lines):
            raise parse_error(lineno, "unexpected end of file")
        parts = lines[lineno - 1].split()
        if len(parts) != 3 or parts[0] != "layer":
            raise parse_error(lineno, "expected 'layer <out> <in>'")
        try:
            out_w, in_w = int(parts[1]), int(parts[2])
        except ValueError as exc:
            raise parse_error(lineno, "malformed layer dims") from exc
        if out_w < 1 or in_w < 1:
            raise parse_error(lineno, f"layer dims must be positive, got {out_w}x{in_w}")
        lineno += 1
        w = np.empty((out_w, in_w))
        for r in range(out_w):
            w[r] = floats(lineno, in_w)
            lineno += 1
        b = floats(lineno, out_w)
        lineno += 1
        weights.append(w)
        biases.append(b)
    if any(line.strip() for line in lines[lineno - 1 :]):
        raise parse_error(lineno, "trailing content after final layer")
    for prev, nxt in zip(weights[:-1], weights[1:]):
        if nxt.shape[1] != prev.shape[0]:
            raise CheckpointParseError(
                f"{path}: layer widths do not chain ({prev.shape} -> {nxt.shape})"
            )
    return MlpParams(weights=weights, biases=biases)
