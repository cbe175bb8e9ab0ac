"""Versioned binary checkpoints for sequence models.

Layout: magic CSNN, format version, kind tag, dims (context len, vocab,
embed, hidden), the 32-byte vocabulary content hash, every parameter
tensor as row-major little-endian float32 in the declared order, then a
length-prefixed metadata text block of `key: value` lines.  Saving and
loading round-trips parameters bit for bit.
"""

import struct
from dataclasses import dataclass, field

import numpy as np

from .cells import GRUCellParams, RNNCellParams
from .model import SequenceModel

CHECKPOINT_MAGIC = b"CSNN"
CHECKPOINT_FORMAT_VERSION = 1
_KIND_TAGS = {"rnn": 1, "bigru": 2}
_TAG_KINDS = {tag: kind for kind, tag in _KIND_TAGS.items()}


class CheckpointError(ValueError):
    pass


@dataclass
class Checkpoint:
    model: SequenceModel
    metadata: dict[str, str] = field(default_factory=dict)


def _tensor_shapes(kind: str, n: int, vocab: int, embed: int, hidden: int
                   ) -> list[tuple[str, tuple[int, ...]]]:
    shapes = [("embedding", (vocab, embed))]
    if kind == "rnn":
        shapes += [("fwd.W_x", (hidden, embed)), ("fwd.W_h", (hidden, hidden)),
                   ("fwd.b", (hidden,))]
        state = hidden
    else:
        for side in ("fwd", "bwd"):
            shapes += [
                (f"{side}.W_z", (hidden, embed)), (f"{side}.U_z", (hidden, hidden)),
                (f"{side}.b_z", (hidden,)),
                (f"{side}.W_r", (hidden, embed)), (f"{side}.U_r", (hidden, hidden)),
                (f"{side}.b_r", (hidden,)),
                (f"{side}.W", (hidden, embed)), (f"{side}.U", (hidden, hidden)),
                (f"{side}.b", (hidden,)),
            ]
        state = 2 * hidden
    shapes += [("out.W", (vocab, state)), ("out.b", (vocab,))]
    return shapes


def save_checkpoint(checkpoint: Checkpoint, path) -> None:
    model = checkpoint.model
    named = dict(model.named_params())
    shapes = _tensor_shapes(model.kind, model.context_len, model.vocab_size,
                            model.embed_dim, model.hidden_dim)
    metadata_text = "".join(f"{k}: {v}\n" for k, v in checkpoint.metadata.items())
    metadata_bytes = metadata_text.encode("utf-8")
    with open(path, "wb") as f:
        f.write(CHECKPOINT_MAGIC)
        f.write(struct.pack("<BB", CHECKPOINT_FORMAT_VERSION, _KIND_TAGS[model.kind]))
        f.write(struct.pack("<IIII", model.context_len, model.vocab_size,
                            model.embed_dim, model.hidden_dim))
        if len(model.vocab_hash) != 32:
            raise CheckpointError("vocabulary hash must be 32 bytes")
        f.write(model.vocab_hash)
        for name, shape in shapes:
            arr = named[name]
            if arr.shape != shape:
                raise CheckpointError(f"tensor {name} has shape {arr.shape}, expected {shape}")
            f.write(np.ascontiguousarray(arr, dtype="<f4").tobytes())
        f.write(struct.pack("<I", len(metadata_bytes)))
        f.write(metadata_bytes)


def load_checkpoint(path, expected_vocab_hash: bytes | None = None) -> Checkpoint:
    with open(path, "rb") as f:
        header = f.read(22)
        if len(header) < 22 or header[:4] != CHECKPOINT_MAGIC:
            raise CheckpointError(f"{path}: not a checkpoint file (bad magic)")
        version, kind_tag = header[4], header[5]
        if version != CHECKPOINT_FORMAT_VERSION:
            raise CheckpointError(f"{path}: unsupported checkpoint format version {version}")
        if kind_tag not in _TAG_KINDS:
            raise CheckpointError(f"{path}: unknown model kind tag {kind_tag}")
        kind = _TAG_KINDS[kind_tag]
        n, vocab, embed, hidden = struct.unpack("<IIII", header[6:22])
        vocab_hash = f.read(32)
        if len(vocab_hash) < 32:
            raise CheckpointError(f"{path}: truncated checkpoint (vocabulary hash)")
        tensors: dict[str, np.ndarray] = {}
        for name, shape in _tensor_shapes(kind, n, vocab, embed, hidden):
            count = int(np.prod(shape))
            raw = f.read(4 * count)
            if len(raw) < 4 * count:
                raise CheckpointError(f"{path}: truncated checkpoint (tensor {name})")
            tensors[name] = np.frombuffer(raw, dtype="<f4").reshape(shape).copy()
        raw = f.read(4)
        if len(raw) < 4:
            raise CheckpointError(f"{path}: truncated checkpoint (metadata length)")
        (meta_len,) = struct.unpack("<I", raw)
        meta_raw = f.read(meta_len)
        if len(meta_raw) < meta_len:
            raise CheckpointError(f"{path}: truncated checkpoint (metadata)")
        if f.read(1):
            raise CheckpointError(f"{path}: trailing bytes after metadata")

    if expected_vocab_hash is not None and vocab_hash != expected_vocab_hash:
        raise CheckpointError(
            f"{path}: vocabulary hash mismatch (checkpoint {vocab_hash.hex()[:12]}..., "
            f"served vocabulary {expected_vocab_hash.hex()[:12]}...)")

    if kind == "rnn":
        fwd: GRUCellParams | RNNCellParams = RNNCellParams(
            W_x=tensors["fwd.W_x"], W_h=tensors["fwd.W_h"], b=tensors["fwd.b"])
        bwd = None
    else:
        def cell(side: str) -> GRUCellParams:
            return GRUCellParams(
                W_z=tensors[f"{side}.W_z"], U_z=tensors[f"{side}.U_z"], b_z=tensors[f"{side}.b_z"],
                W_r=tensors[f"{side}.W_r"], U_r=tensors[f"{side}.U_r"], b_r=tensors[f"{side}.b_r"],
                W=tensors[f"{side}.W"], U=tensors[f"{side}.U"], b=tensors[f"{side}.b"])

        fwd = cell("fwd")
        bwd = cell("bwd")

    model = SequenceModel(kind=kind, context_len=n, embedding=tensors["embedding"],
                          fwd=fwd, bwd=bwd, W_out=tensors["out.W"], b_out=tensors["out.b"],
                          vocab_hash=vocab_hash)

    metadata: dict[str, str] = {}
    for line in meta_raw.decode("utf-8").splitlines():
        if ": " in line:
            key, value = line.split(": ", 1)
            metadata[key] = value
    return Checkpoint(model=model, metadata=metadata)
