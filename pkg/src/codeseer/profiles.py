"""Language profiles: what the standardizer and lexer need to know per language.

Only the Java profile ships; it covers the whole C-comment family
(// and /* */ comments, double-quoted strings, single-quoted chars),
which is what the lexer actually keys on.
"""

from dataclasses import dataclass, field


@dataclass(frozen=True)
class LanguageProfile:
    name: str
    extensions: tuple[str, ...]
    # operators, longest first; the lexer munches greedily
    operators: tuple[str, ...]
    int_placeholder: str = "INT_LIT"
    float_placeholder: str = "FLOAT_LIT"
    string_placeholder: str = "STR_LIT"
    char_placeholder: str = "CHAR_LIT"
    _op_by_len: dict = field(default_factory=dict, compare=False, repr=False)

    def __post_init__(self):
        by_len: dict[int, frozenset[str]] = {}
        for op in self.operators:
            by_len.setdefault(len(op), set()).add(op)
        object.__setattr__(
            self, "_op_by_len",
            {n: frozenset(ops) for n, ops in sorted(by_len.items(), reverse=True)},
        )

    @property
    def placeholders(self) -> tuple[str, str, str, str]:
        return (self.int_placeholder, self.float_placeholder,
                self.string_placeholder, self.char_placeholder)

    def match_operator(self, text: str, pos: int) -> str | None:
        """Longest operator of the table starting at text[pos], or None."""
        for n, ops in self._op_by_len.items():
            candidate = text[pos:pos + n]
            if candidate in ops:
                return candidate
        return None


def is_ident_start(ch: str) -> bool:
    return ch.isalpha() or ch in "_$"


def is_ident_part(ch: str) -> bool:
    return ch.isalnum() or ch in "_$"


JAVA_PROFILE = LanguageProfile(
    name="java",
    extensions=(".java",),
    operators=(
        ">>>=",
        ">>>", "<<=", ">>=", "...",
        "==", "!=", "<=", ">=", "&&", "||", "++", "--",
        "+=", "-=", "*=", "/=", "%=", "&=", "|=", "^=",
        "<<", ">>", "->", "::",
        "+", "-", "*", "/", "%", "=", "<", ">", "!", "&", "|", "^", "~",
        "?", ":", ";", ",", ".", "(", ")", "[", "]", "{", "}", "@",
    ),
)

PROFILES = {JAVA_PROFILE.name: JAVA_PROFILE}
