"""codeseer command line: preprocess | train | eval | serve.

Option precedence is defaults < config file (--config, key=value lines)
< explicit flags, and the resolved option set is echoed into the output
directory next to the artifacts it produced.  --threads pins the BLAS
thread pools before numpy loads, so --threads 1 gives bytewise
reproducible runs.

Exit codes: 0 success, 1 usage error, 2 data error, 3 runtime error.
"""

import argparse
import os
import sys
from pathlib import Path

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_DATA = 2
EXIT_RUNTIME = 3

ARTIFACTS = {
    "vocab": "vocab.tsv",
    "train_examples": "train.examples",
    "test_examples": "test.examples",
    "train_streams": "train.streams",
    "test_streams": "test.streams",
    "manifest": "split_manifest.txt",
    "stats": "stats.txt",
    "diagnostics": "diagnostics.txt",
}

DEFAULTS: dict[str, dict] = {
    "preprocess": {
        "corpus": None, "out": None, "context_len": 20, "ext": ".java",
        "seed": 0, "min_count": 2, "test_fraction": 0.1, "threads": 0,
    },
    "train": {
        "out": None, "model": "bigru", "epochs": 10, "batch": 64, "lr": 1e-3,
        "clip": 5.0, "seed": 0, "val_fraction": 0.1, "embed": 64, "hidden": 128,
        "order": 3, "discount": 0.75, "threads": 0,
    },
    "eval": {
        "out": None, "checkpoint": None, "threads": 0,
    },
    "serve": {
        "checkpoint": None, "vocab": None, "bind": "127.0.0.1:8321",
        "max_k": 100, "threads": 0,
    },
}


class UsageError(ValueError):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"{self.prog}: error: {message}", file=sys.stderr)
        sys.exit(EXIT_USAGE)


def build_parser() -> _Parser:
    parser = _Parser(prog="codeseer",
                     description="train and serve next-token suggestion models for source code")
    sub = parser.add_subparsers(dest="command", metavar="command")

    def add(name: str, help_text: str) -> argparse.ArgumentParser:
        p = sub.add_parser(name, help=help_text)
        p.add_argument("--config", help="key=value config file; flags override it")
        p.add_argument("--threads", type=int, help="BLAS thread count (1 = bitwise reproducible)")
        return p

    p = add("preprocess", "tokenize a corpus directory into training artifacts")
    p.add_argument("--corpus", help="directory tree of source files")
    p.add_argument("--out", help="artifact output directory")
    p.add_argument("--context-len", type=int, dest="context_len")
    p.add_argument("--ext", help="comma-separated source extensions (default .java)")
    p.add_argument("--seed", type=int, help="split shuffle seed")
    p.add_argument("--min-count", type=int, dest="min_count")
    p.add_argument("--test-fraction", type=float, dest="test_fraction")

    p = add("train", "train a model from preprocess artifacts")
    p.add_argument("--out", help="artifact directory from preprocess; outputs land here too")
    p.add_argument("--model", choices=["ngram", "rnn", "bigru"])
    p.add_argument("--epochs", type=int)
    p.add_argument("--batch", type=int)
    p.add_argument("--lr", type=float)
    p.add_argument("--clip", type=float, help="gradient clip norm")
    p.add_argument("--seed", type=int)
    p.add_argument("--val-fraction", type=float, dest="val_fraction")
    p.add_argument("--embed", type=int, help="embedding width")
    p.add_argument("--hidden", type=int, help="recurrent state width")
    p.add_argument("--order", type=int, help="ngram order")
    p.add_argument("--discount", type=float, help="ngram smoothing discount")

    p = add("eval", "score checkpoints on the held-out split")
    p.add_argument("--out", help="artifact directory from preprocess")
    p.add_argument("--checkpoint", action="append", help="model file; repeatable")

    p = add("serve", "serve suggestions over HTTP")
    p.add_argument("--checkpoint")
    p.add_argument("--vocab")
    p.add_argument("--bind", help="host:port (default 127.0.0.1:8321)")
    p.add_argument("--max-k", type=int, dest="max_k")
    return parser


def read_config_file(path: str) -> dict:
    values: dict[str, str] = {}
    with open(path, encoding="utf-8") as f:
        for lineno, line in enumerate(f, start=1):
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            if "=" not in line:
                raise UsageError(f"{path}:{lineno}: expected key=value")
            key, value = line.split("=", 1)
            values[key.strip()] = value.strip()
    return values


def resolve_options(command: str, args: argparse.Namespace) -> dict:
    resolved = dict(DEFAULTS[command])
    if getattr(args, "config", None):
        file_values = read_config_file(args.config)
        for key, raw in file_values.items():
            if key not in resolved:
                raise UsageError(f"unknown config key {key!r} for {command}")
            default = DEFAULTS[command][key]
            if isinstance(default, bool):
                resolved[key] = raw.lower() in ("1", "true", "yes")
            elif isinstance(default, int):
                resolved[key] = int(raw)
            elif isinstance(default, float):
                resolved[key] = float(raw)
            elif key == "checkpoint":
                resolved[key] = raw.split(",")
            else:
                resolved[key] = raw
    for key in DEFAULTS[command]:
        value = getattr(args, key, None)
        if value is not None:
            resolved[key] = value
    return resolved


def require(resolved: dict, *keys: str) -> None:
    for key in keys:
        if resolved.get(key) in (None, ""):
            raise UsageError(f"--{key.replace('_', '-')} is required")


def echo_config(out_dir: Path, name: str, resolved: dict) -> None:
    lines = [f"{key}={resolved[key]}" for key in sorted(resolved)]
    (out_dir / f"run_config_{name}.txt").write_text("\n".join(lines) + "\n", encoding="utf-8")


def _set_threads(threads: int) -> None:
    if threads and threads >= 1:
        for var in ("OMP_NUM_THREADS", "OPENBLAS_NUM_THREADS", "MKL_NUM_THREADS",
                    "NUMEXPR_NUM_THREADS", "VECLIB_MAXIMUM_THREADS"):
            os.environ[var] = str(threads)


def cmd_preprocess(resolved: dict) -> int:
    from .contexts import extract_contexts_for_streams, vectorize, write_examples, write_streams
    from .corpus import (CorpusError, compute_stats, ingest, split_files, write_manifest)
    from .vocab import build_vocabulary

    require(resolved, "corpus", "out")
    out_dir = Path(resolved["out"])
    out_dir.mkdir(parents=True, exist_ok=True)
    extensions = tuple(e if e.startswith(".") else "." + e
                       for e in resolved["ext"].split(","))

    codebase = ingest(resolved["corpus"], extensions=extensions)
    if not codebase.files:
        raise CorpusError(f"corpus {resolved['corpus']} contains no usable files "
                          f"matching {','.join(extensions)}")
    train_files, test_files = split_files(codebase.files, resolved["test_fraction"],
                                          resolved["seed"])
    vocab = build_vocabulary((f.stream for f in train_files), resolved["min_count"])

    train_ids = [vectorize(f.stream, vocab) for f in train_files]
    test_ids = [vectorize(f.stream, vocab) for f in test_files]
    n = resolved["context_len"]

    vocab.save(out_dir / ARTIFACTS["vocab"])
    write_streams(out_dir / ARTIFACTS["train_streams"], train_ids)
    write_streams(out_dir / ARTIFACTS["test_streams"], test_ids)
    write_examples(out_dir / ARTIFACTS["train_examples"],
                   extract_contexts_for_streams(train_ids, n), n)
    write_examples(out_dir / ARTIFACTS["test_examples"],
                   extract_contexts_for_streams(test_ids, n), n)
    write_manifest(out_dir / ARTIFACTS["manifest"], train_files, test_files)

    stats = compute_stats(train_files, test_files, vocab.size, vocab.singleton_count,
                          codebase.diagnostics)
    (out_dir / ARTIFACTS["stats"]).write_text(stats.to_text(), encoding="utf-8")
    diag_lines = list(codebase.diagnostics.standardize_failed)
    (out_dir / ARTIFACTS["diagnostics"]).write_text(
        "".join(line + "\n" for line in diag_lines), encoding="utf-8")
    echo_config(out_dir, "preprocess", resolved)

    print(f"preprocessed {len(codebase.files)} files "
          f"({stats.train.files} train / {stats.test.files} test), "
          f"{stats.total_tokens} tokens, vocabulary {vocab.size}")
    return EXIT_OK


def _metrics_path(out_dir: Path, kind: str) -> Path:
    return out_dir / f"metrics-{kind}.tsv"


def checkpoint_path(out_dir: Path, kind: str) -> Path:
    return out_dir / f"model-{kind}.ckpt"


METRICS_HEADER = "epoch\ttrain_loss_bits\tval_loss_bits\ttrain_acc\tval_acc\n"


def cmd_train(resolved: dict) -> int:
    from .contexts import read_examples, read_streams, validate_example_ids
    from .neural import TrainConfig, save_checkpoint, train
    from .ngram import train_ngram
    from .vocab import Vocabulary

    require(resolved, "out", "model")
    out_dir = Path(resolved["out"])
    kind = resolved["model"]
    vocab = Vocabulary.load(out_dir / ARTIFACTS["vocab"])

    if kind == "ngram":
        streams = read_streams(out_dir / ARTIFACTS["train_streams"])
        model = train_ngram(streams, vocab.size, order=resolved["order"],
                            discount=resolved["discount"])
        model.save(checkpoint_path(out_dir, kind))
        _metrics_path(out_dir, kind).write_text(METRICS_HEADER, encoding="utf-8")
        echo_config(out_dir, f"train_{kind}", resolved)
        total = sum(model.counts[1].values())
        print(f"trained ngram (order {model.order}) on {total} tokens "
              f"-> {checkpoint_path(out_dir, kind)}")
        return EXIT_OK

    examples, n = read_examples(out_dir / ARTIFACTS["train_examples"])
    validate_example_ids(examples, vocab.size)
    config = TrainConfig(epochs=resolved["epochs"], batch_size=resolved["batch"],
                         learning_rate=resolved["lr"], gradient_clip_norm=resolved["clip"],
                         seed=resolved["seed"], validation_fraction=resolved["val_fraction"])
    rows: list[str] = []

    def log(m):
        rows.append(f"{m.epoch}\t{m.train_loss_bits:.10f}\t{m.val_loss_bits:.10f}"
                    f"\t{m.train_acc:.10f}\t{m.val_acc:.10f}\n")
        print(f"epoch {m.epoch}: train {m.train_loss_bits:.4f} bits "
              f"(acc {m.train_acc:.4f}), val {m.val_loss_bits:.4f} bits "
              f"(acc {m.val_acc:.4f})", flush=True)

    checkpoint, _ = train(examples, kind, config, embed_dim=resolved["embed"],
                          hidden_dim=resolved["hidden"], vocab_size=vocab.size,
                          vocab_hash=vocab.content_hash(), log=log)
    save_checkpoint(checkpoint, checkpoint_path(out_dir, kind))
    _metrics_path(out_dir, kind).write_text(METRICS_HEADER + "".join(rows), encoding="utf-8")
    echo_config(out_dir, f"train_{kind}", resolved)
    print(f"saved {kind} checkpoint (best epoch {checkpoint.metadata['best_epoch']}) "
          f"-> {checkpoint_path(out_dir, kind)}")
    if checkpoint.metadata.get("diverged") == "true":
        print("training diverged: checkpoint holds the last finite epoch", file=sys.stderr)
        return EXIT_RUNTIME
    return EXIT_OK


def cmd_eval(resolved: dict) -> int:
    from .contexts import read_examples, validate_example_ids
    from .corpus import check_split_hygiene, read_manifest
    from .evaluation import EvalError, evaluate, render_machine, render_table
    from .server import load_served_model

    require(resolved, "out", "checkpoint")
    out_dir = Path(resolved["out"])
    train_paths, test_paths = read_manifest(out_dir / ARTIFACTS["manifest"])
    check_split_hygiene(train_paths, test_paths)

    examples, n = read_examples(out_dir / ARTIFACTS["test_examples"])
    if len(examples) == 0:
        raise EvalError("test split is empty; nothing to evaluate")

    reports = []
    for path in resolved["checkpoint"]:
        model, vocab = load_served_model(path, out_dir / ARTIFACTS["vocab"])
        validate_example_ids(examples, vocab.size)
        if model.context_len is not None and model.context_len != n:
            raise EvalError(f"{path}: model context length {model.context_len} "
                            f"does not match examples ({n})")
        reports.append(evaluate(model, examples))

    table = render_table(reports)
    (out_dir / "eval_report.txt").write_text(table, encoding="utf-8")
    (out_dir / "eval_report.tsv").write_text(render_machine(reports), encoding="utf-8")
    echo_config(out_dir, "eval", resolved)
    print(table, end="")
    return EXIT_OK


def cmd_serve(resolved: dict) -> int:
    from .server import serve

    require(resolved, "checkpoint", "vocab")
    serve(resolved["checkpoint"], resolved["vocab"], bind=resolved["bind"],
          max_k=resolved["max_k"])
    return EXIT_OK


COMMANDS = {
    "preprocess": cmd_preprocess,
    "train": cmd_train,
    "eval": cmd_eval,
    "serve": cmd_serve,
}


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if not args.command:
        parser.print_help()
        return EXIT_USAGE
    try:
        resolved = resolve_options(args.command, args)
        _set_threads(resolved.get("threads", 0))
        return COMMANDS[args.command](resolved)
    except UsageError as exc:
        print(f"codeseer {args.command}: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except FileNotFoundError as exc:
        print(f"codeseer {args.command}: {exc}", file=sys.stderr)
        return EXIT_DATA
    except ValueError as exc:
        # data-shaped failures: bad corpus, malformed artifacts, mismatched models
        print(f"codeseer {args.command}: {exc}", file=sys.stderr)
        return EXIT_DATA
    except (OSError, RuntimeError, FloatingPointError) as exc:
        print(f"codeseer {args.command}: {exc}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
