"""Elementwise activations and the output softmax.

softmax/log_softmax always compute in float64 with max-subtraction, so
probability vectors sum to 1 well inside 1e-9 and huge logits cannot
overflow; cell activations stay in the caller's dtype.
"""

import numpy as np


class NumericError(FloatingPointError):
    pass


def sigmoid(x: np.ndarray) -> np.ndarray:
    # split by sign so exp never sees a large positive argument
    out = np.empty_like(x)
    pos = x >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-x[pos]))
    ex = np.exp(x[~pos])
    out[~pos] = ex / (1.0 + ex)
    return out


def softmax(scores: np.ndarray, axis: int = -1) -> np.ndarray:
    """Probabilities from raw scores, float64, argmax preserved."""
    scores = np.asarray(scores, dtype=np.float64)
    shifted = scores - scores.max(axis=axis, keepdims=True)
    e = np.exp(shifted)
    return e / e.sum(axis=axis, keepdims=True)


def log_softmax(scores: np.ndarray, axis: int = -1) -> np.ndarray:
    scores = np.asarray(scores, dtype=np.float64)
    shifted = scores - scores.max(axis=axis, keepdims=True)
    return shifted - np.log(np.exp(shifted).sum(axis=axis, keepdims=True))


def xavier_uniform(rng: np.random.Generator, rows: int, cols: int,
                   dtype=np.float32) -> np.ndarray:
    bound = np.sqrt(6.0 / (rows + cols))
    return rng.uniform(-bound, bound, size=(rows, cols)).astype(dtype)


def require_finite(name: str, *arrays: np.ndarray) -> None:
    for arr in arrays:
        if not np.all(np.isfinite(arr)):
            raise NumericError(f"non-finite values in {name}")
