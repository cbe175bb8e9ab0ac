"""Count-based baseline language model with interpolated Kneser-Ney smoothing.

The highest order uses raw counts with absolute discounting; every
lower order uses continuation counts (how many distinct left contexts
a gram completes), and the recursion bottoms out in a uniform
distribution over the vocabulary, so every token gets strictly
positive probability and each level renormalizes exactly.
"""

import struct
from collections.abc import Sequence
from dataclasses import dataclass, field

import numpy as np

from .ranking import top_k

NGRAM_MAGIC = b"CSNG"
NGRAM_FORMAT_VERSION = 1


class NGramError(ValueError):
    pass


@dataclass
class _ContextEntry:
    ids: np.ndarray      # continuation token ids
    counts: np.ndarray   # raw or continuation counts, float64
    total: float
    distinct: int


@dataclass
class NGramModel:
    order: int
    discount: float
    vocab_size: int
    # counts[k] maps k-token id tuples to occurrence counts, k = 1..order
    counts: dict[int, dict[tuple[int, ...], int]]
    kind: str = "ngram"
    context_len: int | None = None
    _levels: dict[int, dict[tuple[int, ...], _ContextEntry]] = field(
        default_factory=dict, repr=False)
    _uni_counts: np.ndarray | None = field(default=None, repr=False)
    _uni_total: float = field(default=0.0, repr=False)
    _uni_distinct: int = field(default=0, repr=False)

    def __post_init__(self):
        self._build_tables()

    def _build_tables(self) -> None:
        # level 1: continuation counts from bigram types (raw counts if order is 1)
        uni = np.zeros(self.vocab_size, dtype=np.float64)
        if self.order == 1:
            for (w,), c in self.counts[1].items():
                uni[w] = c
        else:
            for gram in self.counts[2]:
                uni[gram[1]] += 1.0
        self._uni_counts = uni
        self._uni_total = float(uni.sum())
        self._uni_distinct = int(np.count_nonzero(uni))

        self._levels = {}
        for k in range(2, self.order + 1):
            grouped: dict[tuple[int, ...], dict[int, float]] = {}
            if k == self.order:
                for gram, c in self.counts[k].items():
                    grouped.setdefault(gram[:-1], {})[gram[-1]] = float(c)
            else:
                # continuation counts: distinct left extensions seen in training
                for gram in self.counts[k + 1]:
                    followers = grouped.setdefault(gram[1:-1], {})
                    followers[gram[-1]] = followers.get(gram[-1], 0.0) + 1.0
            self._levels[k] = {
                ctx: _ContextEntry(
                    ids=np.fromiter(followers.keys(), dtype=np.int64, count=len(followers)),
                    counts=np.fromiter(followers.values(), dtype=np.float64, count=len(followers)),
                    total=float(sum(followers.values())),
                    distinct=len(followers),
                )
                for ctx, followers in grouped.items()
            }

    def prob_vector(self, context: Sequence[int]) -> np.ndarray:
        """P(token | context) over the whole vocabulary; sums to 1."""
        context = [self._check_id(t) for t in context]
        d = self.discount
        p = np.full(self.vocab_size, 1.0 / self.vocab_size, dtype=np.float64)
        if self._uni_total > 0:
            p = (np.maximum(self._uni_counts - d, 0.0)
                 + d * self._uni_distinct * p) / self._uni_total
        for k in range(2, self.order + 1):
            if len(context) < k - 1:
                break
            entry = self._levels[k].get(tuple(context[len(context) - (k - 1):]))
            if entry is None:
                continue
            p *= d * entry.distinct / entry.total
            p[entry.ids] += (entry.counts - d) / entry.total
        return p

    def prob(self, context: Sequence[int], token: int) -> float:
        """P(token | context) without materializing the full distribution."""
        token = self._check_id(token)
        context = [self._check_id(t) for t in context]
        d = self.discount
        p = 1.0 / self.vocab_size
        if self._uni_total > 0:
            p = (max(self._uni_counts[token] - d, 0.0)
                 + d * self._uni_distinct * p) / self._uni_total
        for k in range(2, self.order + 1):
            if len(context) < k - 1:
                break
            entry = self._levels[k].get(tuple(context[len(context) - (k - 1):]))
            if entry is None:
                continue
            p *= d * entry.distinct / entry.total
            hit = np.nonzero(entry.ids == token)[0]
            if hit.size:
                p += (entry.counts[hit[0]] - d) / entry.total
        return float(p)

    def prob_matrix(self, contexts: np.ndarray) -> np.ndarray:
        return np.stack([self.prob_vector(row) for row in contexts])

    def predict_topk(self, context: Sequence[int], k: int) -> list[tuple[int, float]]:
        return top_k(self.prob_vector(context), k)

    def _check_id(self, token_id: int) -> int:
        token_id = int(token_id)
        if not 0 <= token_id < self.vocab_size:
            raise IndexError(f"token id {token_id} out of range for vocabulary of size {self.vocab_size}")
        return token_id

    def save(self, path) -> None:
        with open(path, "wb") as f:
            f.write(NGRAM_MAGIC)
            f.write(struct.pack("<BB", NGRAM_FORMAT_VERSION, self.order))
            f.write(struct.pack("<dI", self.discount, self.vocab_size))
            for k in range(1, self.order + 1):
                table = self.counts[k]
                f.write(struct.pack("<Q", len(table)))
                for gram in sorted(table):
                    f.write(struct.pack(f"<{k}IQ", *gram, table[gram]))

    @classmethod
    def load(cls, path) -> "NGramModel":
        with open(path, "rb") as f:
            header = f.read(18)
            if len(header) < 18 or header[:4] != NGRAM_MAGIC:
                raise NGramError(f"{path}: not an ngram model file (bad magic)")
            version, order = header[4], header[5]
            if version != NGRAM_FORMAT_VERSION:
                raise NGramError(f"{path}: unsupported ngram format version {version}")
            discount, vocab_size = struct.unpack("<dI", header[6:18])
            counts: dict[int, dict[tuple[int, ...], int]] = {}
            for k in range(1, order + 1):
                raw = f.read(8)
                if len(raw) < 8:
                    raise NGramError(f"{path}: truncated ngram model file")
                (entries,) = struct.unpack("<Q", raw)
                table: dict[tuple[int, ...], int] = {}
                record = struct.Struct(f"<{k}IQ")
                body = f.read(record.size * entries)
                if len(body) < record.size * entries:
                    raise NGramError(f"{path}: truncated ngram model file")
                for values in record.iter_unpack(body):
                    table[values[:-1]] = values[-1]
                counts[k] = table
            if f.read(1):
                raise NGramError(f"{path}: trailing bytes after count tables")
        return cls(order=order, discount=discount, vocab_size=vocab_size, counts=counts)


def train_ngram(id_streams: Sequence[Sequence[int]], vocab_size: int,
                order: int = 3, discount: float = 0.75) -> NGramModel:
    """Count all grams up to `order` inside each stream (none span files)."""
    if order < 1:
        raise NGramError("order must be >= 1")
    if not 0 < discount < 1:
        raise NGramError(f"discount {discount} must be in (0, 1)")
    counts: dict[int, dict[tuple[int, ...], int]] = {k: {} for k in range(1, order + 1)}
    total = 0
    for ids in id_streams:
        ids = [int(t) for t in ids]
        total += len(ids)
        for i in range(len(ids)):
            for k in range(1, order + 1):
                if i - k + 1 < 0:
                    break
                gram = tuple(ids[i - k + 1 : i + 1])
                table = counts[k]
                table[gram] = table.get(gram, 0) + 1
    if total == 0:
        raise NGramError("cannot train an ngram model on an empty corpus")
    return NGramModel(order=order, discount=discount, vocab_size=vocab_size, counts=counts)
