"""Vocabulary: bijection between retained tokens and integer ids.

Ids 0 and 1 are reserved (PAD, UNK).  A token earns an id when its
frequency over the *training* streams reaches min_count; rarer tokens
collapse to UNK.  Id order is descending frequency, ties broken by
token text, so two builds over the same corpus are byte-identical.
"""

import hashlib
from collections import Counter
from collections.abc import Iterable
from dataclasses import dataclass

from . import PAD_TOKEN, UNK_ID, UNK_TOKEN
from .lexer import TokenStream


class VocabularyError(ValueError):
    pass


@dataclass
class Vocabulary:
    token_to_id: dict[str, int]
    id_to_token: list[str]
    frequencies: list[int]  # by id; UNK carries the mass of dropped tokens
    singleton_count: int    # distinct tokens that fell below min_count

    @property
    def size(self) -> int:
        return len(self.id_to_token)

    def id_of(self, token: str) -> int:
        return self.token_to_id.get(token, UNK_ID)

    def token_of(self, token_id: int) -> str:
        if not 0 <= token_id < self.size:
            raise IndexError(f"token id {token_id} out of range for vocabulary of size {self.size}")
        return self.id_to_token[token_id]

    def to_bytes(self) -> bytes:
        lines = [f"{i}\t{tok}\t{freq}"
                 for i, (tok, freq) in enumerate(zip(self.id_to_token, self.frequencies))]
        return ("\n".join(lines) + "\n").encode("utf-8")

    def content_hash(self) -> bytes:
        """sha256 of the canonical serialization; checkpoints pin this."""
        return hashlib.sha256(self.to_bytes()).digest()

    def save(self, path) -> None:
        with open(path, "wb") as f:
            f.write(self.to_bytes())

    @classmethod
    def load(cls, path) -> "Vocabulary":
        id_to_token: list[str] = []
        frequencies: list[int] = []
        with open(path, encoding="utf-8") as f:
            for lineno, line in enumerate(f):
                line = line.rstrip("\n")
                if not line:
                    continue
                parts = line.split("\t")
                if len(parts) != 3 or int(parts[0]) != lineno:
                    raise VocabularyError(f"{path}:{lineno + 1}: malformed vocabulary line")
                id_to_token.append(parts[1])
                frequencies.append(int(parts[2]))
        if len(id_to_token) < 2 or id_to_token[0] != PAD_TOKEN or id_to_token[1] != UNK_TOKEN:
            raise VocabularyError(f"{path}: missing reserved PAD/UNK entries")
        token_to_id = {tok: i for i, tok in enumerate(id_to_token)}
        return cls(token_to_id, id_to_token, frequencies, singleton_count=0)


def count_tokens(streams: Iterable[TokenStream]) -> Counter:
    """Per-token frequencies; order of streams does not matter."""
    counts: Counter = Counter()
    for stream in streams:
        counts.update(stream.tokens)
    return counts


def build_vocabulary(streams: Iterable[TokenStream], min_count: int = 2) -> Vocabulary:
    """Build the vocabulary from training streams only."""
    counts = count_tokens(streams)
    if not counts:
        raise VocabularyError("cannot build a vocabulary from an empty training split")
    # a source token spelled exactly PAD or UNK would break the bijection;
    # treat it as out-of-vocabulary
    reserved = {PAD_TOKEN, UNK_TOKEN}
    retained = sorted(
        ((tok, freq) for tok, freq in counts.items()
         if freq >= min_count and tok not in reserved),
        key=lambda item: (-item[1], item[0]),
    )
    dropped = [(tok, freq) for tok, freq in counts.items() if freq < min_count]
    unk_mass = (sum(freq for _, freq in dropped)
                + sum(counts[tok] for tok in reserved if counts.get(tok, 0) >= min_count))

    id_to_token = [PAD_TOKEN, UNK_TOKEN] + [tok for tok, _ in retained]
    frequencies = [0, unk_mass] + [freq for _, freq in retained]
    token_to_id = {tok: i for i, tok in enumerate(id_to_token)}
    return Vocabulary(token_to_id, id_to_token, frequencies, singleton_count=len(dropped))
