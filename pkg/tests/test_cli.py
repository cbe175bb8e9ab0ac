import json
import signal
import subprocess
import sys
import time
import urllib.request

import pytest

from codeseer import cli
from codeseer.cli import ARTIFACTS

pytestmark = pytest.mark.filterwarnings("ignore::pytest.PytestUnraisableExceptionWarning")


def run_cli(*argv) -> int:
    return cli.main(list(argv))


def artifact_bytes(out_dir, skip=()):
    return {p.name: p.read_bytes() for p in sorted(out_dir.iterdir())
            if p.name not in skip}


@pytest.fixture(scope="module")
def pipeline_dir(tmp_path_factory, java20_dir):
    """Artifacts from one preprocess run over the fixture corpus."""
    out = tmp_path_factory.mktemp("artifacts")
    code = run_cli("preprocess", "--corpus", str(java20_dir), "--out", str(out),
                   "--context-len", "4", "--seed", "0")
    assert code == 0
    return out


@pytest.fixture(scope="module")
def trained_dir(pipeline_dir):
    """pipeline_dir with one checkpoint of every kind trained into it."""
    assert run_cli("train", "--out", str(pipeline_dir), "--model", "ngram") == 0
    assert run_cli("train", "--out", str(pipeline_dir), "--model", "rnn",
                   "--epochs", "3", "--batch", "16", "--embed", "8",
                   "--hidden", "8", "--seed", "1") == 0
    assert run_cli("train", "--out", str(pipeline_dir), "--model", "bigru",
                   "--epochs", "2", "--batch", "16", "--embed", "8",
                   "--hidden", "8", "--seed", "9") == 0
    return pipeline_dir


def free_port() -> int:
    import socket

    with socket.socket() as s:
        s.bind(("127.0.0.1", 0))
        return s.getsockname()[1]


class TestPreprocess:
    def test_artifacts_exist(self, pipeline_dir):
        for name in ARTIFACTS.values():
            assert (pipeline_dir / name).exists(), name
        assert (pipeline_dir / "run_config_preprocess.txt").exists()

    def test_runs_are_byte_identical(self, pipeline_dir, java20_dir, tmp_path):
        out2 = tmp_path / "again"
        assert run_cli("preprocess", "--corpus", str(java20_dir), "--out", str(out2),
                       "--context-len", "4", "--seed", "0") == 0
        first = artifact_bytes(pipeline_dir, skip={"run_config_preprocess.txt"})
        second = artifact_bytes(out2, skip={"run_config_preprocess.txt"})
        assert first == second

    def test_stats_match_manifest_recount(self, pipeline_dir):
        from codeseer.contexts import read_streams
        from codeseer.corpus import CorpusStats, read_manifest

        stats = CorpusStats.parse((pipeline_dir / ARTIFACTS["stats"]).read_text())
        train_paths, test_paths = read_manifest(pipeline_dir / ARTIFACTS["manifest"])
        assert stats["files_train"] == len(train_paths)
        assert stats["files_test"] == len(test_paths)
        train_streams = read_streams(pipeline_dir / ARTIFACTS["train_streams"])
        test_streams = read_streams(pipeline_dir / ARTIFACTS["test_streams"])
        assert stats["tokens_train"] == sum(len(s) for s in train_streams)
        assert stats["tokens_test"] == sum(len(s) for s in test_streams)
        assert stats["tokens_total"] == stats["tokens_train"] + stats["tokens_test"]

    def test_windowing_arithmetic_single_file(self, tmp_path):
        corpus = tmp_path / "corpus"
        corpus.mkdir()
        (corpus / "One.java").write_text("x = y;\nx = y;\n")  # 8 tokens
        out = tmp_path / "out"
        assert run_cli("preprocess", "--corpus", str(corpus), "--out", str(out),
                       "--context-len", "3", "--test-fraction", "0.5") == 0
        from codeseer.contexts import read_examples
        train, n = read_examples(out / ARTIFACTS["train_examples"])
        assert n == 3
        assert len(train) == 7  # L-1 windows for an 8-token file

    def test_empty_corpus_is_a_data_error(self, tmp_path):
        empty = tmp_path / "empty"
        empty.mkdir()
        out = tmp_path / "out"
        assert run_cli("preprocess", "--corpus", str(empty), "--out", str(out)) == 2

    def test_missing_required_flag_is_usage_error(self, tmp_path):
        assert run_cli("preprocess", "--out", str(tmp_path / "o")) == 1

    def test_config_file_feeds_defaults_and_flags_win(self, java20_dir, tmp_path):
        out = tmp_path / "out"
        config = tmp_path / "run.conf"
        config.write_text(f"corpus={java20_dir}\ncontext_len=9\nseed=5\n")
        assert run_cli("preprocess", "--config", str(config), "--out", str(out),
                       "--context-len", "4") == 0
        echoed = (out / "run_config_preprocess.txt").read_text()
        assert "context_len=4" in echoed   # flag beat the file
        assert "seed=5" in echoed          # file beat the default


class TestTrain:
    def test_ngram_one_pass(self, trained_dir):
        assert (trained_dir / "model-ngram.ckpt").exists()
        metrics = (trained_dir / "metrics-ngram.tsv").read_text()
        assert metrics.count("\n") == 1  # header only: no epochs

    def test_neural_metrics_rows_equal_epochs(self, trained_dir):
        lines = (trained_dir / "metrics-rnn.tsv").read_text().strip().split("\n")
        assert lines[0].startswith("epoch\t")
        assert len(lines) == 1 + 3

    def test_fixed_seed_reproduces_metrics_log(self, trained_dir):
        args = ("train", "--out", str(trained_dir), "--model", "bigru",
                "--epochs", "2", "--batch", "16", "--embed", "8", "--hidden", "8",
                "--seed", "9")
        first = (trained_dir / "metrics-bigru.tsv").read_bytes()
        first_ckpt = (trained_dir / "model-bigru.ckpt").read_bytes()
        assert run_cli(*args) == 0
        assert (trained_dir / "metrics-bigru.tsv").read_bytes() == first
        assert (trained_dir / "model-bigru.ckpt").read_bytes() == first_ckpt

    def test_untrained_artifacts_are_a_data_error(self, tmp_path):
        assert run_cli("train", "--out", str(tmp_path), "--model", "ngram") == 2


class TestEval:
    def test_three_kind_comparison_table(self, trained_dir):
        report = trained_dir / "eval_report.tsv"
        code = run_cli("eval", "--out", str(trained_dir),
                       "--checkpoint", str(trained_dir / "model-ngram.ckpt"),
                       "--checkpoint", str(trained_dir / "model-rnn.ckpt"),
                       "--checkpoint", str(trained_dir / "model-bigru.ckpt"))
        assert code == 0
        lines = report.read_text().strip().split("\n")
        assert len(lines) == 4  # header + three model rows
        assert [line.split("\t")[0] for line in lines[1:]] == ["ngram", "rnn", "bigru"]

    def test_report_matches_direct_harness_call(self, trained_dir):
        pipeline_dir = trained_dir
        from codeseer.contexts import read_examples
        from codeseer.evaluation import evaluate, render_machine
        from codeseer.ngram import NGramModel

        examples, _ = read_examples(pipeline_dir / ARTIFACTS["test_examples"])
        model = NGramModel.load(pipeline_dir / "model-ngram.ckpt")
        expected = render_machine([evaluate(model, examples)])
        assert run_cli("eval", "--out", str(pipeline_dir),
                       "--checkpoint", str(pipeline_dir / "model-ngram.ckpt")) == 0
        assert (pipeline_dir / "eval_report.tsv").read_text() == expected

    def test_corrupted_manifest_overlap_refused(self, trained_dir, tmp_path):
        pipeline_dir = trained_dir
        manifest = pipeline_dir / ARTIFACTS["manifest"]
        pristine = manifest.read_text()
        try:
            train_part, test_part = pristine.split("# test\n")
            stolen = test_part.strip().split("\n")[0]
            manifest.write_text(train_part + stolen + "\n# test\n" + test_part)
            code = run_cli("eval", "--out", str(pipeline_dir),
                           "--checkpoint", str(pipeline_dir / "model-ngram.ckpt"))
            assert code == 2
        finally:
            manifest.write_text(pristine)

    def test_wrong_vocabulary_checkpoint_refused(self, trained_dir, tmp_path, java20_dir):
        pipeline_dir = trained_dir
        other = tmp_path / "other"
        assert run_cli("preprocess", "--corpus", str(java20_dir), "--out", str(other),
                       "--context-len", "4", "--seed", "123", "--min-count", "3") == 0
        assert run_cli("train", "--out", str(other), "--model", "rnn", "--epochs", "1",
                       "--embed", "4", "--hidden", "4") == 0
        code = run_cli("eval", "--out", str(pipeline_dir),
                       "--checkpoint", str(other / "model-rnn.ckpt"))
        assert code == 2


class TestServe:
    def test_serve_round_trip_over_subprocess(self, trained_dir):
        port = free_port()
        proc = subprocess.Popen(
            [sys.executable, "-m", "codeseer.cli", "serve",
             "--checkpoint", str(trained_dir / "model-bigru.ckpt"),
             "--vocab", str(trained_dir / ARTIFACTS["vocab"]),
             "--bind", f"127.0.0.1:{port}"],
            stdout=subprocess.PIPE, stderr=subprocess.PIPE, text=True)
        try:
            body = None
            for _ in range(200):
                time.sleep(0.05)
                try:
                    with urllib.request.urlopen(
                            f"http://127.0.0.1:{port}/v1/health", timeout=2) as resp:
                        body = json.load(resp)
                    break
                except OSError:
                    if proc.poll() is not None:
                        pytest.fail(f"server exited early: {proc.stderr.read()}")
            assert body is not None and body["status"] == "ok"
            req = urllib.request.Request(
                f"http://127.0.0.1:{port}/v1/suggest",
                data=json.dumps({"raw_code": "int x =", "k": 3}).encode(),
                headers={"Content-Type": "application/json"})
            with urllib.request.urlopen(req, timeout=5) as resp:
                suggest = json.load(resp)
            assert len(suggest["suggestions"]) == 3
            proc.send_signal(signal.SIGTERM)
            assert proc.wait(timeout=10) == 0
        finally:
            if proc.poll() is None:
                proc.kill()
                proc.wait(timeout=10)

    def test_mismatched_vocab_fails_before_binding(self, trained_dir, tmp_path, java20_dir):
        other = tmp_path / "other"
        assert run_cli("preprocess", "--corpus", str(java20_dir), "--out", str(other),
                       "--context-len", "4", "--seed", "77", "--min-count", "4") == 0
        port = free_port()
        code = run_cli("serve",
                       "--checkpoint", str(trained_dir / "model-bigru.ckpt"),
                       "--vocab", str(other / ARTIFACTS["vocab"]),
                       "--bind", f"127.0.0.1:{port}")
        assert code == 2
        with pytest.raises(OSError):
            urllib.request.urlopen(f"http://127.0.0.1:{port}/v1/health", timeout=1)


def test_no_command_prints_help(capsys):
    assert run_cli() == 1
    assert "preprocess" in capsys.readouterr().out
