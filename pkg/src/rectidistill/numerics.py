"""Stable probability, loss, and gradient primitives.

All functions are pure and operate on 1-D float64 vectors. Softmax uses
max-subtraction; KL and CE raise rather than return infinities; the two
analytic gradients are paired with a central finite-difference oracle so
each can be checked against an independent path.
"""

from collections.abc import Callable

import numpy as np

from .errors import (
    DivergenceInfiniteError,
    InvalidInputError,
    InvalidParameterError,
    OracleFailureError,
)

PROB_SUM_TOL = 1e-9


def as_logits(z) -> np.ndarray:
    """Validate and convert a logit vector: finite, 1-D, length >= 2."""
    z = np.asarray(z, dtype=np.float64)
    if z.ndim != 1 or z.shape[0] < 2:
        raise InvalidInputError(f"logit vector must be 1-D with length >= 2, got shape {z.shape}")
    if not np.all(np.isfinite(z)):
        raise InvalidInputError("logit vector contains non-finite entries")
    return z


def as_prob_vector(p) -> np.ndarray:
    """Validate a point on the probability simplex (sum within 1e-9 of 1)."""
    p = np.asarray(p, dtype=np.float64)
    if p.ndim != 1 or p.shape[0] < 2:
        raise InvalidInputError(f"probability vector must be 1-D with length >= 2, got shape {p.shape}")
    if not np.all(np.isfinite(p)):
        raise InvalidInputError("probability vector contains non-finite entries")
    if np.any(p < 0.0):
        raise InvalidInputError("probability vector has negative entries")
    total = float(p.sum())
    if abs(total - 1.0) > PROB_SUM_TOL:
        raise InvalidInputError(f"probability vector sums to {total}, not 1")
    return p


def _check_class_index(c: int, n: int) -> int:
    c = int(c)
    if not 0 <= c < n:
        raise InvalidInputError(f"class index {c} outside [0, {n})")
    return c


def softmax(z, tau: float = 1.0) -> np.ndarray:
    """softmax(z / tau) with max-subtraction; argmax is invariant in tau."""
    z = as_logits(z)
    if not np.isfinite(tau) or tau <= 0.0:
        raise InvalidParameterError(f"temperature must be a positive finite scalar, got {tau}")
    scaled = z / tau
    e = np.exp(scaled - scaled.max())
    return e / e.sum()


def softmax_rows(logits, tau: float = 1.0) -> np.ndarray:
    """Row-wise softmax(z / tau) over a (n, k) logit matrix."""
    logits = np.asarray(logits, dtype=np.float64)
    if not np.isfinite(tau) or tau <= 0.0:
        raise InvalidParameterError(f"temperature must be a positive finite scalar, got {tau}")
    scaled = logits / tau
    e = np.exp(scaled - scaled.max(axis=1, keepdims=True))
    return e / e.sum(axis=1, keepdims=True)


def kl_divergence(t, s) -> float:
    """Forward KL sum(t_i ln(t_i / s_i)); terms with t_i = 0 contribute 0."""
    t = as_prob_vector(t)
    s = as_prob_vector(s)
    if t.shape != s.shape:
        raise InvalidInputError(f"length mismatch: {t.shape[0]} vs {s.shape[0]}")
    active = t > 0.0
    if np.any(s[active] == 0.0):
        raise DivergenceInfiniteError("target has mass where the second distribution is exactly 0")
    return float(np.sum(t[active] * np.log(t[active] / s[active])))


def cross_entropy(class_index: int, s) -> float:
    """-ln(s at the true class) for a one-hot label."""
    s = as_prob_vector(s)
    c = _check_class_index(class_index, s.shape[0])
    if s[c] == 0.0:
        raise DivergenceInfiniteError(f"zero probability at the true class {c}")
    return float(-np.log(s[c]))


def ce_softmax_gradient(z, class_index: int, tau: float = 1.0) -> np.ndarray:
    """Gradient of CE(onehot(c), softmax(z/tau)) w.r.t. z: (s - onehot(c)) / tau."""
    s = softmax(z, tau)
    c = _check_class_index(class_index, s.shape[0])
    g = s.copy()
    g[c] -= 1.0
    return g / tau


def kl_softmax_gradient(t, z, tau: float = 1.0) -> np.ndarray:
    """Gradient of KL(t || softmax(z/tau)) w.r.t. z: (s - t) / tau."""
    t = as_prob_vector(t)
    s = softmax(z, tau)
    if t.shape != s.shape:
        raise InvalidInputError(f"length mismatch: {t.shape[0]} vs {s.shape[0]}")
    return (s - t) / tau


def finite_difference_gradient(
    f: Callable[[np.ndarray], float], x, h: float = 1e-5
) -> np.ndarray:
    """Central-difference gradient estimate of a scalar function of a vector."""
    x = np.asarray(x, dtype=np.float64)
    if not np.isfinite(h) or h <= 0.0:
        raise InvalidParameterError(f"step size must be positive, got {h}")
    g = np.empty_like(x)
    for i in range(x.shape[0]):
        step = np.zeros_like(x)
        step[i] = h
        fp = float(f(x + step))
        fm = float(f(x - step))
        if not (np.isfinite(fp) and np.isfinite(fm)):
            raise OracleFailureError(f"non-finite evaluation while differencing coordinate {i}")
        g[i] = (fp - fm) / (2.0 * h)
    return g
