"""Source text standardization: strip comments, generalize literals, drop blank lines.

The output keeps one line per surviving source line, with runs of
horizontal whitespace collapsed to single spaces.  Literal values are
replaced by the profile's placeholder tokens (INT_LIT, FLOAT_LIT,
STR_LIT, CHAR_LIT); string/char contents are consumed before comment
detection, so comment-looking text inside strings never strips.
"""

from .profiles import JAVA_PROFILE, LanguageProfile, is_ident_part, is_ident_start


class StandardizeError(ValueError):
    """Unterminated construct found while standardizing a file."""

    def __init__(self, message: str, filename: str, line: int):
        super().__init__(f"{filename}:{line}: {message}")
        self.filename = filename
        self.line = line


_DIGITS = "0123456789"
_HEX_DIGITS = "0123456789abcdefABCDEF"
# suffixes tolerated on numeric literals (Java + common C-family ones)
_NUM_SUFFIX = "lLuUfFdD"


def _scan_number(text: str, i: int) -> tuple[int, bool]:
    """Consume a numeric literal at text[i]; return (end index, is_float)."""
    n = len(text)
    is_float = False

    def digit_run(j: int, digits: str) -> int:
        # _ and ' are digit separators when surrounded by digits
        while j < n and (text[j] in digits
                         or (text[j] in "_'" and j + 1 < n and text[j + 1] in digits)):
            j += 1
        return j

    if text[i] == "0" and i + 1 < n and text[i + 1] in "xX":
        i = digit_run(i + 2, _HEX_DIGITS)
        if i < n and text[i] == "." :
            is_float = True
            i = digit_run(i + 1, _HEX_DIGITS)
        if i < n and text[i] in "pP":
            is_float = True
            i += 1
            if i < n and text[i] in "+-":
                i += 1
            i = digit_run(i, _DIGITS)
    elif text[i] == "0" and i + 1 < n and text[i + 1] in "bB":
        i = digit_run(i + 2, "01")
    else:
        if text[i] == ".":
            is_float = True
            i = digit_run(i + 1, _DIGITS)
        else:
            i = digit_run(i, _DIGITS)
            if i < n and text[i] == "." and (i + 1 == n or text[i + 1] in _DIGITS
                                             or not is_ident_part(text[i + 1])
                                             or text[i + 1] in "eEfFdD"):
                is_float = True
                i = digit_run(i + 1, _DIGITS)
        if i < n and text[i] in "eE":
            j = i + 1
            if j < n and text[j] in "+-":
                j += 1
            if j < n and text[j] in _DIGITS:
                is_float = True
                i = digit_run(j, _DIGITS)
    while i < n and text[i] in _NUM_SUFFIX:
        if text[i] in "fFdD":
            is_float = True
        i += 1
    return i, is_float


def standardize(content: str, profile: LanguageProfile = JAVA_PROFILE, *,
                filename: str = "<memory>", lenient: bool = False) -> str:
    """Standardize raw source text under the given language profile.

    With lenient=True an unterminated trailing string, char, or block
    comment is closed at end of input instead of raising; this is what
    the suggestion server uses on code prefixes cut at a cursor.
    """
    n = len(content)
    out: list[str] = []
    i = 0
    line = 1
    # last significant char emitted, to tell `.5` (float) from `x.5` (member access)
    prev_sig = ""

    def fail(message: str, at_line: int):
        raise StandardizeError(message, filename, at_line)

    while i < n:
        c = content[i]
        if c == "\n":
            out.append(c)
            line += 1
            i += 1
            continue
        nxt = content[i + 1] if i + 1 < n else ""
        if c == "/" and nxt == "/":
            while i < n and content[i] != "\n":
                i += 1
            continue
        if c == "/" and nxt == "*":
            start_line = line
            j = i + 2
            while j < n:
                if content[j] == "\n":
                    line += 1
                elif content[j] == "*" and j + 1 < n and content[j + 1] == "/":
                    j += 2
                    break
                j += 1
            else:
                if not lenient:
                    fail("unterminated block comment", start_line)
                j = n
            out.append(" ")  # a comment separates tokens
            i = j
            continue
        if c == '"':
            start_line = line
            if content[i:i + 3] == '"""':
                j = content.find('"""', i + 3)
                if j < 0:
                    if not lenient:
                        fail("unterminated string literal", start_line)
                    j = n
                else:
                    line += content.count("\n", i, j)
                    j += 3
            else:
                j = i + 1
                while j < n and content[j] not in '"\n':
                    j += 2 if content[j] == "\\" else 1
                if j >= n or content[j] == "\n":
                    if not lenient:
                        fail("unterminated string literal", start_line)
                else:
                    j += 1
            out.append(f" {profile.string_placeholder} ")
            prev_sig = profile.string_placeholder[-1]
            i = j
            continue
        if c == "'":
            start_line = line
            j = i + 1
            while j < n and content[j] not in "'\n":
                j += 2 if content[j] == "\\" else 1
            if j >= n or content[j] == "\n":
                if not lenient:
                    fail("unterminated character literal", start_line)
            else:
                j += 1
            out.append(f" {profile.char_placeholder} ")
            prev_sig = profile.char_placeholder[-1]
            i = j
            continue
        member_access = prev_sig != "" and (prev_sig in ")]" or is_ident_part(prev_sig))
        if c in _DIGITS or (c == "." and nxt.isdigit() and not member_access):
            j, is_float = _scan_number(content, i)
            placeholder = profile.float_placeholder if is_float else profile.int_placeholder
            out.append(f" {placeholder} ")
            prev_sig = placeholder[-1]
            i = j
            continue
        if is_ident_start(c):
            j = i + 1
            while j < n and is_ident_part(content[j]):
                j += 1
            out.append(content[i:j])
            prev_sig = content[j - 1]
            i = j
            continue
        out.append(c)
        if not c.isspace():
            prev_sig = c
        i += 1

    lines = ["" if ln.isspace() else " ".join(ln.split()) for ln in "".join(out).split("\n")]
    return "\n".join(ln for ln in lines if ln)
