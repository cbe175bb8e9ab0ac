"""Codebase ingestion: scan a directory tree, standardize, tokenize, split, count.

Top-level subdirectories of the corpus root are treated as software
systems.  Files that cannot be decoded or standardized are skipped and
counted rather than failing the whole run; empty files are dropped and
counted.  Everything downstream (vocabulary, examples) is deterministic
for a fixed seed because files are processed in sorted path order and
the train/test split uses a seeded shuffle.
"""

import random
from dataclasses import dataclass, field
from pathlib import Path

from .lexer import LexDiagnostics, TokenStream, tokenize
from .profiles import JAVA_PROFILE, LanguageProfile
from .standardize import StandardizeError, standardize


@dataclass
class SourceFile:
    path: str        # relative to the corpus root, '/'-separated
    system: str
    content: str     # standardized text
    stream: TokenStream
    loc: int


@dataclass
class SoftwareSystem:
    name: str
    files: list[SourceFile] = field(default_factory=list)


@dataclass
class IngestDiagnostics:
    empty_dropped: int = 0
    decode_failed: int = 0
    standardize_failed: list[str] = field(default_factory=list)
    lex: LexDiagnostics = field(default_factory=LexDiagnostics)


@dataclass
class Codebase:
    root: str
    systems: list[SoftwareSystem]
    diagnostics: IngestDiagnostics

    @property
    def files(self) -> list[SourceFile]:
        return [f for system in self.systems for f in system.files]


class CorpusError(ValueError):
    pass


def scan_paths(root: Path, extensions: tuple[str, ...]) -> list[Path]:
    """Matching files under root, sorted by relative path."""
    matches = [p for p in root.rglob("*")
               if p.is_file() and p.suffix in extensions]
    return sorted(matches, key=lambda p: p.relative_to(root).as_posix())


def ingest(root, extensions: tuple[str, ...] = (".java",),
           profile: LanguageProfile = JAVA_PROFILE) -> Codebase:
    """Read, standardize, and tokenize every matching file under root."""
    root = Path(root)
    if not root.is_dir():
        raise CorpusError(f"corpus directory {root} does not exist")
    diagnostics = IngestDiagnostics()
    systems: dict[str, SoftwareSystem] = {}
    for path in scan_paths(root, extensions):
        rel = path.relative_to(root).as_posix()
        try:
            raw = path.read_text(encoding="utf-8")
        except UnicodeDecodeError:
            diagnostics.decode_failed += 1
            continue
        if not raw.strip():
            diagnostics.empty_dropped += 1
            continue
        try:
            text = standardize(raw, profile, filename=rel)
        except StandardizeError as exc:
            diagnostics.standardize_failed.append(str(exc))
            continue
        stream = tokenize(text, profile, file_id=rel, diagnostics=diagnostics.lex)
        system_name = rel.split("/", 1)[0] if "/" in rel else root.name
        system = systems.setdefault(system_name, SoftwareSystem(name=system_name))
        loc = text.count("\n") + 1 if text else 0
        system.files.append(SourceFile(rel, system_name, text, stream, loc))
    return Codebase(root=str(root), systems=[systems[k] for k in sorted(systems)],
                    diagnostics=diagnostics)


def split_files(files: list[SourceFile], test_fraction: float = 0.1,
                seed: int = 0) -> tuple[list[SourceFile], list[SourceFile]]:
    """Whole-file split; the same seed always produces the same split."""
    if not 0 < test_fraction < 1:
        raise CorpusError(f"test fraction {test_fraction} must be in (0, 1)")
    ordered = sorted(files, key=lambda f: f.path)
    rng = random.Random(seed)
    rng.shuffle(ordered)
    n_test = int(len(ordered) * test_fraction)
    test = sorted(ordered[:n_test], key=lambda f: f.path)
    train = sorted(ordered[n_test:], key=lambda f: f.path)
    return train, test


@dataclass
class SplitStats:
    files: int = 0
    loc: int = 0
    tokens: int = 0


@dataclass
class CorpusStats:
    train: SplitStats
    test: SplitStats
    vocab_size: int
    singleton_count: int
    empty_dropped: int = 0
    decode_failed: int = 0
    standardize_failed: int = 0
    unknown_chars: int = 0

    @property
    def loc(self) -> int:
        return self.train.loc + self.test.loc

    @property
    def total_tokens(self) -> int:
        return self.train.tokens + self.test.tokens

    def to_text(self) -> str:
        pairs = [
            ("files_train", self.train.files),
            ("files_test", self.test.files),
            ("files_total", self.train.files + self.test.files),
            ("loc_train", self.train.loc),
            ("loc_test", self.test.loc),
            ("loc_total", self.loc),
            ("tokens_train", self.train.tokens),
            ("tokens_test", self.test.tokens),
            ("tokens_total", self.total_tokens),
            ("vocab_size", self.vocab_size),
            ("singleton_count", self.singleton_count),
            ("files_empty_dropped", self.empty_dropped),
            ("files_decode_failed", self.decode_failed),
            ("files_standardize_failed", self.standardize_failed),
            ("unknown_chars", self.unknown_chars),
        ]
        return "".join(f"{key}: {value}\n" for key, value in pairs)

    @staticmethod
    def parse(text: str) -> dict[str, int]:
        out = {}
        for line in text.splitlines():
            if ":" in line:
                key, value = line.split(":", 1)
                out[key.strip()] = int(value.strip())
        return out


def compute_stats(train: list[SourceFile], test: list[SourceFile],
                  vocab_size: int, singleton_count: int,
                  diagnostics: IngestDiagnostics | None = None) -> CorpusStats:
    def tally(files: list[SourceFile]) -> SplitStats:
        return SplitStats(
            files=len(files),
            loc=sum(f.loc for f in files),
            tokens=sum(len(f.stream) for f in files),
        )

    stats = CorpusStats(train=tally(train), test=tally(test),
                        vocab_size=vocab_size, singleton_count=singleton_count)
    if diagnostics is not None:
        stats.empty_dropped = diagnostics.empty_dropped
        stats.decode_failed = diagnostics.decode_failed
        stats.standardize_failed = len(diagnostics.standardize_failed)
        stats.unknown_chars = diagnostics.lex.total
    return stats


def write_manifest(path, train: list[SourceFile], test: list[SourceFile]) -> None:
    with open(path, "w", encoding="utf-8") as f:
        f.write("# train\n")
        for sf in train:
            f.write(sf.path + "\n")
        f.write("# test\n")
        for sf in test:
            f.write(sf.path + "\n")


def read_manifest(path) -> tuple[list[str], list[str]]:
    train: list[str] = []
    test: list[str] = []
    current = None
    with open(path, encoding="utf-8") as f:
        for line in f:
            line = line.rstrip("\n")
            if line == "# train":
                current = train
            elif line == "# test":
                current = test
            elif line:
                if current is None:
                    raise CorpusError(f"{path}: manifest entry before a split header")
                current.append(line)
    return train, test


def check_split_hygiene(train_paths: list[str], test_paths: list[str]) -> None:
    overlap = set(train_paths) & set(test_paths)
    if overlap:
        sample = ", ".join(sorted(overlap)[:3])
        raise CorpusError(f"train/test manifests overlap on {len(overlap)} file(s): {sample}")
