"""Deterministic ranking helpers shared by every model kind.

Ordering is by descending probability with ties broken by ascending
token id, which makes top-k lists and ranks well-defined even for
models that assign exactly equal probabilities (a fresh softmax layer,
a uniform smoothing floor).
"""

import numpy as np


def rank_order(probs: np.ndarray) -> np.ndarray:
    """All token ids, best first."""
    ids = np.arange(len(probs))
    return np.lexsort((ids, -probs))


def top_k(probs: np.ndarray, k: int) -> list[tuple[int, float]]:
    if k < 1:
        raise ValueError("k must be >= 1")
    order = rank_order(probs)[: min(k, len(probs))]
    return [(int(i), float(probs[i])) for i in order]


def rank_of(probs: np.ndarray, target: int) -> int:
    """1-based rank of target in the full deterministic ranking."""
    p_t = probs[target]
    better = int(np.sum(probs > p_t))
    tied_before = int(np.sum(probs[:target] == p_t))
    return 1 + better + tied_before
