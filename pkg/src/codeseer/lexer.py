"""Maximal-munch lexer over standardized source text.

Tokens are identifiers/keywords/placeholders, operator sequences from
the profile's table (longest match wins), or single fallback characters
for anything outside those classes.  Joining a token list with single
spaces and re-lexing reproduces the list.
"""

from collections import Counter
from dataclasses import dataclass, field

from .profiles import JAVA_PROFILE, LanguageProfile, is_ident_part, is_ident_start


@dataclass
class TokenStream:
    """Ordered tokens of one standardized source file."""

    file_id: str
    tokens: list[str]

    def __len__(self) -> int:
        return len(self.tokens)


@dataclass
class LexDiagnostics:
    """Characters that fell outside every profile class, by character."""

    unknown_chars: Counter = field(default_factory=Counter)

    def merge(self, other: "LexDiagnostics") -> None:
        self.unknown_chars.update(other.unknown_chars)

    @property
    def total(self) -> int:
        return sum(self.unknown_chars.values())


def tokenize(text: str, profile: LanguageProfile = JAVA_PROFILE, *,
             file_id: str = "<memory>",
             diagnostics: LexDiagnostics | None = None) -> TokenStream:
    """Split standardized text into a TokenStream."""
    tokens: list[str] = []
    n = len(text)
    i = 0
    while i < n:
        c = text[i]
        if c.isspace():
            i += 1
            continue
        if is_ident_start(c) or c.isdigit():
            j = i + 1
            while j < n and is_ident_part(text[j]):
                j += 1
            tokens.append(text[i:j])
            i = j
            continue
        op = profile.match_operator(text, i)
        if op is not None:
            tokens.append(op)
            i += len(op)
            continue
        tokens.append(c)
        if diagnostics is not None:
            diagnostics.unknown_chars[c] += 1
        i += 1
    return TokenStream(file_id=file_id, tokens=tokens)
