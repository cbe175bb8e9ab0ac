"""Scoring harness: top-k accuracy, mean reciprocal rank, cross-entropy.

One pass over the test examples computes every metric from each
example's full next-token distribution.  Ranks come from the shared
deterministic ordering (descending probability, ties by ascending id),
so rank(target) <= k is exactly "target appears in the top-k list".
"""

import time
from collections.abc import Sequence
from dataclasses import dataclass, field

import numpy as np

from . import UNK_ID
from .neural.model import PROB_FLOOR, SequenceModel
from .ranking import rank_of

DEFAULT_KS = (1, 3, 5, 10)


class EvalError(ValueError):
    pass


@dataclass
class EvalReport:
    model_kind: str
    topk_accuracy: dict[int, float]
    mrr: float
    cross_entropy_bits: float
    example_count: int
    wall_time_s: float
    unk_target_fraction: float
    clamped_probs: int = 0

    def accuracy(self, k: int) -> float:
        return self.topk_accuracy[k]


@dataclass
class _Accumulator:
    ks: tuple[int, ...]
    hits: dict[int, int] = field(default_factory=dict)
    reciprocal_sum: float = 0.0
    log2_sum: float = 0.0
    count: int = 0
    unk_targets: int = 0
    clamped: int = 0

    def __post_init__(self):
        self.hits = {k: 0 for k in self.ks}

    def add(self, probs: np.ndarray, target: int) -> None:
        rank = rank_of(probs, target)
        for k in self.ks:
            if rank <= k:
                self.hits[k] += 1
        self.reciprocal_sum += 1.0 / rank
        p = float(probs[target])
        if p < PROB_FLOOR:
            p = PROB_FLOOR
            self.clamped += 1
        self.log2_sum += -np.log2(p)
        self.count += 1
        if target == UNK_ID:
            self.unk_targets += 1


def _prob_batches(model, contexts: np.ndarray, batch_size: int = 512):
    if isinstance(model, SequenceModel):
        for start in range(0, len(contexts), batch_size):
            yield start, model.prob_matrix(contexts[start : start + batch_size])
    else:
        for i, row in enumerate(contexts):
            yield i, model.prob_vector(row)[None, :]


def evaluate(model, examples: np.ndarray, ks: Sequence[int] = DEFAULT_KS) -> EvalReport:
    """Score a model on (context ids | target id) rows."""
    examples = np.asarray(examples)
    if examples.ndim != 2 or len(examples) == 0:
        raise EvalError("cannot evaluate on an empty example set")
    ks = tuple(sorted(set(int(k) for k in ks)))
    if not ks or ks[0] < 1:
        raise EvalError("ranks must be positive")
    n = examples.shape[1] - 1
    contexts = examples[:, :n].astype(np.int64)
    targets = examples[:, n].astype(np.int64)

    start_time = time.perf_counter()
    acc = _Accumulator(ks=ks)
    for offset, probs in _prob_batches(model, contexts):
        for j in range(len(probs)):
            acc.add(probs[j], int(targets[offset + j]))
    wall = time.perf_counter() - start_time

    return EvalReport(
        model_kind=getattr(model, "kind", "unknown"),
        topk_accuracy={k: acc.hits[k] / acc.count for k in ks},
        mrr=acc.reciprocal_sum / acc.count,
        cross_entropy_bits=acc.log2_sum / acc.count,
        example_count=acc.count,
        wall_time_s=wall,
        unk_target_fraction=acc.unk_targets / acc.count,
        clamped_probs=acc.clamped,
    )


def topk_accuracy(model, examples: np.ndarray, ks: Sequence[int] = DEFAULT_KS) -> dict[int, float]:
    return evaluate(model, examples, ks).topk_accuracy


def mrr(model, examples: np.ndarray) -> float:
    return evaluate(model, examples, ks=(1,)).mrr


def render_table(reports: list[EvalReport], ks: Sequence[int] = DEFAULT_KS) -> str:
    """Human-readable comparison table, one row per model kind."""
    header = ["model"] + [f"top-{k}" for k in ks] + ["mrr", "xent(bits)", "examples", "unk-frac", "secs"]
    rows = [header]
    for r in reports:
        rows.append([r.model_kind]
                    + [f"{r.topk_accuracy[k] * 100:.2f}%" for k in ks]
                    + [f"{r.mrr:.4f}", f"{r.cross_entropy_bits:.4f}",
                       str(r.example_count), f"{r.unk_target_fraction:.4f}",
                       f"{r.wall_time_s:.1f}"])
    widths = [max(len(row[i]) for row in rows) for i in range(len(header))]
    lines = ["  ".join(cell.ljust(w) for cell, w in zip(row, widths)).rstrip()
             for row in rows]
    lines.insert(1, "  ".join("-" * w for w in widths))
    return "\n".join(lines) + "\n"


def render_machine(reports: list[EvalReport], ks: Sequence[int] = DEFAULT_KS) -> str:
    """Tab-separated report with no timing fields, safe to byte-compare."""
    header = ["model"] + [f"top{k}" for k in ks] + [
        "mrr", "cross_entropy_bits", "examples", "unk_target_fraction"]
    lines = ["\t".join(header)]
    for r in reports:
        lines.append("\t".join(
            [r.model_kind]
            + [f"{r.topk_accuracy[k]:.10f}" for k in ks]
            + [f"{r.mrr:.10f}", f"{r.cross_entropy_bits:.10f}",
               str(r.example_count), f"{r.unk_target_fraction:.10f}"]))
    return "\n".join(lines) + "\n"
