"""Mini-batch training with adaptive moments and gradient-norm clipping.

Runs are deterministic for a fixed seed and thread count: the same
generator drives the validation split, the per-epoch shuffles, and the
parameter init, and all updates are plain numpy expressions.  The best
validation-loss epoch is what ends up in the returned checkpoint.
"""

import math
from dataclasses import dataclass, field

import numpy as np

from .checkpoint import Checkpoint
from .model import SequenceModel, backward, batched_log_probs, new_model
from .ops import NumericError

LN2 = math.log(2.0)


@dataclass
class TrainConfig:
    epochs: int = 10
    batch_size: int = 64
    learning_rate: float = 1e-3
    gradient_clip_norm: float = 5.0
    seed: int = 0
    validation_fraction: float = 0.1

    def __post_init__(self):
        if self.epochs < 1 or self.batch_size < 1:
            raise ValueError("epochs and batch_size must be positive")
        if self.learning_rate <= 0 or self.gradient_clip_norm <= 0:
            raise ValueError("learning_rate and gradient_clip_norm must be positive")
        if not 0 < self.validation_fraction < 1:
            raise ValueError("validation_fraction must be in (0, 1)")


@dataclass
class EpochMetrics:
    epoch: int
    train_loss_bits: float
    val_loss_bits: float
    train_acc: float
    val_acc: float


class Adam:
    """Adam updates applied in place after global gradient-norm clipping."""

    def __init__(self, learning_rate: float, clip_norm: float,
                 beta1: float = 0.9, beta2: float = 0.999, eps: float = 1e-8):
        self.lr = learning_rate
        self.clip_norm = clip_norm
        self.beta1 = beta1
        self.beta2 = beta2
        self.eps = eps
        self.t = 0
        self.m: dict[str, np.ndarray] = {}
        self.v: dict[str, np.ndarray] = {}

    def step(self, params: list[tuple[str, np.ndarray]], grads: dict[str, np.ndarray]) -> None:
        norm_sq = 0.0
        for name, _ in params:
            g = grads[name]
            norm_sq += float(np.dot(g.reshape(-1), g.reshape(-1)))
        norm = math.sqrt(norm_sq)
        scale = self.clip_norm / norm if norm > self.clip_norm else 1.0

        self.t += 1
        bc1 = 1.0 - self.beta1 ** self.t
        bc2 = 1.0 - self.beta2 ** self.t
        for name, param in params:
            g = grads[name] * scale
            m = self.m.setdefault(name, np.zeros_like(param))
            v = self.v.setdefault(name, np.zeros_like(param))
            m += (1.0 - self.beta1) * (g - m)
            v += (1.0 - self.beta2) * (g * g - v)
            param -= self.lr * (m / bc1) / (np.sqrt(v / bc2) + self.eps)


@dataclass
class _Snapshot:
    params: dict[str, np.ndarray] = field(default_factory=dict)
    metrics: EpochMetrics | None = None

    @classmethod
    def of(cls, model: SequenceModel, metrics: EpochMetrics | None) -> "_Snapshot":
        return cls(params={name: arr.copy() for name, arr in model.named_params()},
                   metrics=metrics)

    def restore(self, model: SequenceModel) -> None:
        for name, arr in model.named_params():
            arr[...] = self.params[name]


def _evaluate(model: SequenceModel, contexts, targets) -> tuple[float, float]:
    log2p, hits = batched_log_probs(model, contexts, targets)
    return float(-log2p.mean()), float(hits.mean())


def train(examples: np.ndarray, kind: str, config: TrainConfig, *,
          embed_dim: int = 64, hidden_dim: int = 128,
          vocab_size: int, vocab_hash: bytes = b"\x00" * 32,
          log=None) -> tuple[Checkpoint, list[EpochMetrics]]:
    """Train a model of the given kind on (context ids | target id) rows."""
    examples = np.asarray(examples)
    if examples.ndim != 2 or examples.shape[1] < 2:
        raise ValueError("examples must be a (count, context_len + 1) matrix")
    total = len(examples)
    if total < 2:
        raise ValueError("need at least 2 examples to split off a validation set")
    n = examples.shape[1] - 1
    contexts = examples[:, :n].astype(np.int64)
    targets = examples[:, n].astype(np.int64)

    rng = np.random.default_rng(config.seed)
    perm = rng.permutation(total)
    n_val = min(max(1, int(round(total * config.validation_fraction))), total - 1)
    val_idx, train_idx = perm[:n_val], perm[n_val:]

    model = new_model(kind, vocab_size, n, embed_dim, hidden_dim, seed=config.seed,
                      vocab_hash=vocab_hash)
    optimizer = Adam(config.learning_rate, config.gradient_clip_norm)
    params = model.named_params()

    history: list[EpochMetrics] = []
    best: _Snapshot | None = None
    last_good = _Snapshot.of(model, None)
    epochs_completed = 0
    diverged = False

    for epoch in range(1, config.epochs + 1):
        order = train_idx[rng.permutation(len(train_idx))]
        loss_sum = 0.0
        correct = 0
        try:
            for start in range(0, len(order), config.batch_size):
                batch = order[start : start + config.batch_size]
                loss, hits, grads = backward(model, contexts[batch], targets[batch])
                loss_sum += loss * len(batch)
                correct += hits
                optimizer.step(params, grads)
            val_loss, val_acc = _evaluate(model, contexts[val_idx], targets[val_idx])
        except NumericError:
            diverged = True
            break
        if not math.isfinite(val_loss):
            diverged = True
            break
        metrics = EpochMetrics(
            epoch=epoch,
            train_loss_bits=loss_sum / len(order) / LN2,
            val_loss_bits=val_loss,
            train_acc=correct / len(order),
            val_acc=val_acc,
        )
        history.append(metrics)
        epochs_completed = epoch
        last_good = _Snapshot.of(model, metrics)
        if best is None or metrics.val_loss_bits < best.metrics.val_loss_bits:
            best = _Snapshot.of(model, metrics)
        if log is not None:
            log(metrics)

    chosen = best if best is not None else last_good
    chosen.restore(model)
    final = chosen.metrics
    metadata = {
        "kind": kind,
        "epochs_completed": str(epochs_completed),
        "diverged": str(diverged).lower(),
        "best_epoch": str(final.epoch) if final else "0",
        "train_loss_bits": f"{final.train_loss_bits:.10f}" if final else "nan",
        "val_loss_bits": f"{final.val_loss_bits:.10f}" if final else "nan",
        "train_acc": f"{final.train_acc:.10f}" if final else "nan",
        "val_acc": f"{final.val_acc:.10f}" if final else "nan",
        "seed": str(config.seed),
    }
    return Checkpoint(model=model, metadata=metadata), history
