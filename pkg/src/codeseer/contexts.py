"""Context windows and id-stream serialization.

A stream of L tokens yields L-1 training examples: for each position
t >= 1 the example pairs the ids of the n tokens before t (left-padded
with PAD) with the id of token t.  Examples are stored as a flat
little-endian uint32 matrix with a small header (magic CSEX); raw
per-file id streams use magic CSTS so the n-gram trainer can consume
unwindowed sequences.
"""

import struct
from collections.abc import Iterable, Sequence

import numpy as np

from . import PAD_ID
from .lexer import TokenStream
from .vocab import Vocabulary

EXAMPLES_MAGIC = b"CSEX"
STREAMS_MAGIC = b"CSTS"
FORMAT_VERSION = 1


class ExamplesFormatError(ValueError):
    pass


def vectorize(stream: TokenStream, vocab: Vocabulary) -> list[int]:
    """Map tokens to ids; anything outside the vocabulary becomes UNK."""
    return [vocab.id_of(tok) for tok in stream.tokens]


def devectorize(ids: Sequence[int], vocab: Vocabulary) -> list[str]:
    """Inverse of vectorize up to UNK collapse; raises on out-of-range ids."""
    return [vocab.token_of(i) for i in ids]


def extract_contexts(ids: Sequence[int], n: int) -> np.ndarray:
    """Windows over one id stream: shape (len(ids)-1, n+1), last column is the target."""
    if n < 1:
        raise ValueError("context length must be >= 1")
    length = len(ids)
    if length < 2:
        return np.zeros((0, n + 1), dtype=np.uint32)
    arr = np.asarray(ids, dtype=np.uint32)
    padded = np.concatenate([np.full(n, PAD_ID, dtype=np.uint32), arr])
    out = np.empty((length - 1, n + 1), dtype=np.uint32)
    for t in range(1, length):
        out[t - 1, :n] = padded[t : t + n]
        out[t - 1, n] = arr[t]
    return out


def extract_contexts_for_streams(id_streams: Iterable[Sequence[int]], n: int) -> np.ndarray:
    chunks = [extract_contexts(ids, n) for ids in id_streams]
    if not chunks:
        return np.zeros((0, n + 1), dtype=np.uint32)
    return np.concatenate(chunks, axis=0)


def write_examples(path, examples: np.ndarray, n: int) -> None:
    """CSEX: magic, version byte, n (u32 LE), then (n+1)-wide u32 LE records."""
    if examples.ndim != 2 or examples.shape[1] != n + 1:
        raise ValueError(f"examples must have shape (*, {n + 1})")
    with open(path, "wb") as f:
        f.write(EXAMPLES_MAGIC)
        f.write(struct.pack("<B", FORMAT_VERSION))
        f.write(struct.pack("<I", n))
        f.write(np.ascontiguousarray(examples, dtype="<u4").tobytes())


def read_examples(path) -> tuple[np.ndarray, int]:
    with open(path, "rb") as f:
        header = f.read(9)
        if len(header) < 9 or header[:4] != EXAMPLES_MAGIC:
            raise ExamplesFormatError(f"{path}: not an examples file (bad magic)")
        version = header[4]
        if version != FORMAT_VERSION:
            raise ExamplesFormatError(f"{path}: unsupported examples format version {version}")
        (n,) = struct.unpack("<I", header[5:9])
        body = f.read()
    record = 4 * (n + 1)
    if record == 0 or len(body) % record != 0:
        raise ExamplesFormatError(f"{path}: truncated examples file")
    examples = np.frombuffer(body, dtype="<u4").reshape(-1, n + 1)
    return examples.astype(np.uint32), n


def write_streams(path, id_streams: Sequence[Sequence[int]]) -> None:
    """CSTS: magic, version byte, stream count, then length-prefixed u32 id runs."""
    with open(path, "wb") as f:
        f.write(STREAMS_MAGIC)
        f.write(struct.pack("<B", FORMAT_VERSION))
        f.write(struct.pack("<I", len(id_streams)))
        for ids in id_streams:
            f.write(struct.pack("<I", len(ids)))
            f.write(np.asarray(ids, dtype="<u4").tobytes())


def read_streams(path) -> list[np.ndarray]:
    with open(path, "rb") as f:
        header = f.read(9)
        if len(header) < 9 or header[:4] != STREAMS_MAGIC:
            raise ExamplesFormatError(f"{path}: not a streams file (bad magic)")
        if header[4] != FORMAT_VERSION:
            raise ExamplesFormatError(f"{path}: unsupported streams format version {header[4]}")
        (count,) = struct.unpack("<I", header[5:9])
        streams = []
        for _ in range(count):
            raw = f.read(4)
            if len(raw) < 4:
                raise ExamplesFormatError(f"{path}: truncated streams file")
            (length,) = struct.unpack("<I", raw)
            body = f.read(4 * length)
            if len(body) < 4 * length:
                raise ExamplesFormatError(f"{path}: truncated streams file")
            streams.append(np.frombuffer(body, dtype="<u4").astype(np.uint32))
        if f.read(1):
            raise ExamplesFormatError(f"{path}: trailing bytes after last stream")
    return streams


def validate_example_ids(examples: np.ndarray, vocab_size: int) -> None:
    if examples.size and int(examples.max()) >= vocab_size:
        raise ExamplesFormatError(
            f"example id {int(examples.max())} out of range for vocabulary of size {vocab_size}")


__all__ = [
    "EXAMPLES_MAGIC", "STREAMS_MAGIC", "FORMAT_VERSION", "ExamplesFormatError",
    "vectorize", "devectorize", "extract_contexts", "extract_contexts_for_streams",
    "write_examples", "read_examples", "write_streams", "read_streams",
    "validate_example_ids", "PAD_ID",
]
