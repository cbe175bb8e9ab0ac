"""Sequence classifiers over fixed-length contexts.

kind="rnn": one tanh recurrence over the window, final state projected
to vocabulary logits.  kind="bigru": two GRUs read the window in
opposite directions; their final states are concatenated before the
projection.  The output projection starts at zero, so a fresh model is
exactly uniform and its loss starts at log2(vocab) bits.
"""

from collections.abc import Sequence
from dataclasses import dataclass

import numpy as np

from ..ranking import top_k
from .cells import (GRUCellParams, RNNCellParams, _gru_backstep, _gru_step,
                    _rnn_backstep, _rnn_step)
from .ops import log_softmax, require_finite, softmax, xavier_uniform

KINDS = ("rnn", "bigru")
PROB_FLOOR = 1e-12


@dataclass
class SequenceModel:
    kind: str
    context_len: int
    embedding: np.ndarray              # (vocab, embed)
    fwd: GRUCellParams | RNNCellParams
    bwd: GRUCellParams | None          # bigru only
    W_out: np.ndarray                  # (vocab, state)
    b_out: np.ndarray                  # (vocab,)
    vocab_hash: bytes = b"\x00" * 32

    @property
    def vocab_size(self) -> int:
        return self.embedding.shape[0]

    @property
    def embed_dim(self) -> int:
        return self.embedding.shape[1]

    @property
    def hidden_dim(self) -> int:
        return self.fwd.b_z.shape[0] if self.kind == "bigru" else self.fwd.b.shape[0]

    @property
    def state_dim(self) -> int:
        return self.W_out.shape[1]

    @property
    def dtype(self):
        return self.embedding.dtype

    def named_params(self) -> list[tuple[str, np.ndarray]]:
        """All parameter tensors in the declared (checkpoint) order."""
        out = [("embedding", self.embedding)]
        out += [(f"fwd.{name}", arr) for name, arr in self.fwd.named_arrays()]
        if self.bwd is not None:
            out += [(f"bwd.{name}", arr) for name, arr in self.bwd.named_arrays()]
        out += [("out.W", self.W_out), ("out.b", self.b_out)]
        return out

    def astype(self, dtype) -> "SequenceModel":
        return SequenceModel(
            kind=self.kind, context_len=self.context_len,
            embedding=self.embedding.astype(dtype),
            fwd=self.fwd.astype(dtype),
            bwd=self.bwd.astype(dtype) if self.bwd is not None else None,
            W_out=self.W_out.astype(dtype), b_out=self.b_out.astype(dtype),
            vocab_hash=self.vocab_hash,
        )

    # -- shared model contract ------------------------------------------------

    def prob_vector(self, context: Sequence[int]) -> np.ndarray:
        return self.prob_matrix(np.asarray(context, dtype=np.int64)[None, :])[0]

    def prob_matrix(self, contexts: np.ndarray) -> np.ndarray:
        """Float64 next-token distributions for a batch of contexts."""
        logits, _ = forward_logits(self, np.asarray(contexts, dtype=np.int64))
        return softmax(logits, axis=-1)

    def predict_topk(self, context: Sequence[int], k: int) -> list[tuple[int, float]]:
        return top_k(self.prob_vector(context), k)


def new_model(kind: str, vocab_size: int, context_len: int, embed_dim: int,
              hidden_dim: int, seed: int = 0, dtype=np.float32,
              vocab_hash: bytes = b"\x00" * 32) -> SequenceModel:
    if kind not in KINDS:
        raise ValueError(f"unknown model kind {kind!r}; expected one of {KINDS}")
    rng = np.random.default_rng(seed)
    embedding = xavier_uniform(rng, vocab_size, embed_dim, dtype)
    if kind == "rnn":
        fwd: GRUCellParams | RNNCellParams = RNNCellParams.init(embed_dim, hidden_dim, rng, dtype)
        bwd = None
        state_dim = hidden_dim
    else:
        fwd = GRUCellParams.init(embed_dim, hidden_dim, rng, dtype)
        bwd = GRUCellParams.init(embed_dim, hidden_dim, rng, dtype)
        state_dim = 2 * hidden_dim
    # zero projection => exactly uniform output before any training
    W_out = np.zeros((vocab_size, state_dim), dtype=dtype)
    b_out = np.zeros(vocab_size, dtype=dtype)
    return SequenceModel(kind=kind, context_len=context_len, embedding=embedding,
                         fwd=fwd, bwd=bwd, W_out=W_out, b_out=b_out,
                         vocab_hash=vocab_hash)


def _check_contexts(model: SequenceModel, contexts: np.ndarray) -> np.ndarray:
    contexts = np.asarray(contexts, dtype=np.int64)
    if contexts.ndim != 2 or contexts.shape[1] != model.context_len:
        raise ValueError(
            f"contexts must have shape (*, {model.context_len}), got {contexts.shape}")
    if contexts.size and (contexts.min() < 0 or contexts.max() >= model.vocab_size):
        raise IndexError(f"context id out of range for vocabulary of size {model.vocab_size}")
    return contexts


def forward_logits(model: SequenceModel, contexts: np.ndarray, want_cache: bool = False):
    """Logits (B, vocab) for a batch of contexts; optionally keeps step caches."""
    contexts = _check_contexts(model, contexts)
    batch, n = contexts.shape
    hidden = model.hidden_dim
    xs = model.embedding[contexts]  # (B, n, E)
    caches: dict = {}
    if model.kind == "rnn":
        h = np.zeros((batch, hidden), dtype=model.dtype)
        steps = []
        for t in range(n):
            h, cache = _rnn_step(xs[:, t], h, model.fwd)
            steps.append(cache)
        state = h
        caches["fwd"] = steps
    else:
        h_f = np.zeros((batch, hidden), dtype=model.dtype)
        steps_f = []
        for t in range(n):
            h_f, cache = _gru_step(xs[:, t], h_f, model.fwd)
            steps_f.append(cache)
        h_b = np.zeros((batch, hidden), dtype=model.dtype)
        steps_b = []
        for t in reversed(range(n)):
            h_b, cache = _gru_step(xs[:, t], h_b, model.bwd)
            steps_b.append(cache)  # steps_b[i] read position n-1-i
        state = np.concatenate([h_f, h_b], axis=1)
        caches["fwd"] = steps_f
        caches["bwd"] = steps_b
    logits = state @ model.W_out.T + model.b_out
    if want_cache:
        caches["state"] = state
        caches["contexts"] = contexts
        return logits, caches
    return logits, None


def model_forward(model: SequenceModel, context: Sequence[int]) -> np.ndarray:
    """Probability vector over the vocabulary for one context window."""
    return model.prob_vector(context)


def zero_grads(model: SequenceModel) -> dict[str, np.ndarray]:
    return {name: np.zeros_like(arr) for name, arr in model.named_params()}


def backward(model: SequenceModel, contexts: np.ndarray, targets: np.ndarray
             ) -> tuple[float, int, dict[str, np.ndarray]]:
    """Mean cross-entropy loss (nats), correct top-1 count, and gradients.

    Gradients are of the batch-mean loss with respect to every tensor
    in named_params(); embedding rows no context touches stay zero.
    """
    targets = np.asarray(targets, dtype=np.int64)
    logits, caches = forward_logits(model, contexts, want_cache=True)
    contexts = caches["contexts"]
    batch, n = contexts.shape
    rows = np.arange(batch)

    logp = log_softmax(logits, axis=-1)
    loss = float(-logp[rows, targets].mean())
    correct = int(np.sum(np.argmax(logits, axis=1) == targets))

    probs = softmax(logits, axis=-1).astype(model.dtype)
    dlogits = probs
    dlogits[rows, targets] -= 1.0
    dlogits /= batch

    grads = zero_grads(model)
    state = caches["state"]
    grads["out.W"] += dlogits.T @ state
    grads["out.b"] += dlogits.sum(axis=0)
    dstate = dlogits @ model.W_out

    dxs = np.zeros((batch, n, model.embed_dim), dtype=model.dtype)
    if model.kind == "rnn":
        dh = dstate
        for t in reversed(range(n)):
            dh, dx = _rnn_backstep(dh, caches["fwd"][t], model.fwd, grads, "fwd.")
            dxs[:, t] += dx
    else:
        hidden = model.hidden_dim
        dh = dstate[:, :hidden]
        for t in reversed(range(n)):
            dh, dx = _gru_backstep(dh, caches["fwd"][t], model.fwd, grads, "fwd.")
            dxs[:, t] += dx
        dh = dstate[:, hidden:]
        for i in reversed(range(n)):
            dh, dx = _gru_backstep(dh, caches["bwd"][i], model.bwd, grads, "bwd.")
            dxs[:, n - 1 - i] += dx

    np.add.at(grads["embedding"], contexts.reshape(-1), dxs.reshape(batch * n, -1))

    for name, grad in grads.items():
        require_finite(f"gradient of {name}", grad)
    return loss, correct, grads


def batched_log_probs(model: SequenceModel, contexts: np.ndarray,
                      targets: np.ndarray, batch_size: int = 512
                      ) -> tuple[np.ndarray, np.ndarray]:
    """log2 P(target|context) and top-1 hits, streamed in eval batches."""
    contexts = np.asarray(contexts, dtype=np.int64)
    targets = np.asarray(targets, dtype=np.int64)
    log2p = np.empty(len(targets), dtype=np.float64)
    hits = np.empty(len(targets), dtype=bool)
    ln2 = np.log(2.0)
    for start in range(0, len(targets), batch_size):
        stop = min(start + batch_size, len(targets))
        logits, _ = forward_logits(model, contexts[start:stop])
        logp = log_softmax(logits, axis=-1)
        rows = np.arange(stop - start)
        log2p[start:stop] = logp[rows, targets[start:stop]] / ln2
        hits[start:stop] = np.argmax(logits, axis=1) == targets[start:stop]
    return log2p, hits


class ProbabilityFloorCounter:
    """Counts degenerate zero probabilities clamped during scoring."""

    def __init__(self) -> None:
        self.clamped = 0


def cross_entropy_bits(model, contexts: np.ndarray, targets: np.ndarray,
                       floor_counter: ProbabilityFloorCounter | None = None) -> float:
    """Mean -log2 P(target | context) over the examples, in bits."""
    targets = np.asarray(targets, dtype=np.int64)
    if len(targets) == 0:
        raise ValueError("cross entropy over an empty example set is undefined")
    if isinstance(model, SequenceModel):
        log2p, _ = batched_log_probs(model, contexts, targets)
        floor = np.log2(PROB_FLOOR)
        low = log2p < floor
        if np.any(low):
            if floor_counter is not None:
                floor_counter.clamped += int(np.sum(low))
            log2p = np.maximum(log2p, floor)
        return float(-log2p.mean())
    total = 0.0
    for context, target in zip(np.asarray(contexts), targets):
        p = model.prob(context, int(target)) if hasattr(model, "prob") \
            else float(model.prob_vector(context)[int(target)])
        if p < PROB_FLOOR:
            p = PROB_FLOOR
            if floor_counter is not None:
                floor_counter.clamped += 1
        total += -np.log2(p)
    return total / len(targets)
