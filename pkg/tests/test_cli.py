import io
import json
import re
import subprocess
import sys

import pytest

from tagtriad.cli import main
from tagtriad.metrics import read_metrics_summary

SMALL = ["--set", "synth.size=300", "--set", "doc2vec.epochs=5", "--set", "doc2vec.dim=20"]


def run(capsys, *argv):
    code = main([str(a) for a in argv])
    out, err = capsys.readouterr()
    return code, out, err


@pytest.fixture(scope="module")
def small_runs(tmp_path_factory):
    """Two tiny doc2vec runs on different synthetic corpora, so their vocabularies differ."""
    root = tmp_path_factory.mktemp("runs")
    for name, seed in (("a", 1), ("b", 2)):
        code = main(["train", "--pipeline", "doc2vec_mnlr", "--out", str(root / name), "--set",
                     f"synth.seed={seed}", *SMALL])
        assert code == 0
    return root


def test_train_writes_every_artifact(small_runs):
    files = {p.name for p in (small_runs / "a").iterdir()}
    assert {"config.txt", "checkpoint.json", "vocab.json", "metrics_summary.csv", "confusion_doc2vec_mnlr_test.csv",
            "per_class_doc2vec_mnlr_train.csv", "heatmap_doc2vec_mnlr_test.txt"} <= files
    cfg = (small_runs / "a" / "config.txt").read_text()
    assert "seed = 0\n" in cfg and "synth.seed = 1\n" in cfg


def test_same_seed_gives_identical_files(small_runs, tmp_path, capsys):
    code, _, _ = run(capsys, "train", "--pipeline", "doc2vec_mnlr", "--out", tmp_path, "--set", "synth.seed=1", *SMALL)
    assert code == 0
    for name in ("metrics_summary.csv", "checkpoint.json", "confusion_doc2vec_mnlr_test.csv"):
        assert (tmp_path / name).read_bytes() == (small_runs / "a" / name).read_bytes()


def test_evaluate_and_vocab_guard(small_runs, tmp_path, capsys):
    data = tmp_path / "d.jsonl"
    code, _, _ = run(capsys, "synth", "--out", data, "--set", "synth.size=60", "--set", "synth.seed=5")
    assert code == 0
    code, out, _ = run(capsys, "evaluate", "--model", small_runs / "a", "--data", data, "--out", tmp_path / "ev")
    assert code == 0 and "accuracy" in out
    assert (tmp_path / "ev" / "confusion_doc2vec_mnlr_test.csv").is_file()
    code, _, err = run(capsys, "evaluate", "--model", small_runs / "a", "--data", data,
                       "--vocab", small_runs / "b" / "vocab.json")
    assert code == 1
    assert "vocabulary hash mismatch" in err


def test_tag_output_format(small_runs, tmp_path, capsys, monkeypatch):
    src = tmp_path / "in.txt"
    src.write_text("instagram hesabımı büyütmek istiyorum\n\nSEO fiyatları nedir?\n", encoding="utf-8")
    code, out, _ = run(capsys, "tag", "--model", small_runs / "a", "--input", src)
    lines = out.splitlines()
    assert code == 0 and len(lines) == 2
    for line, sentence in zip(lines, ["instagram hesabımı büyütmek istiyorum", "SEO fiyatları nedir?"]):
        text, label, conf = line.split("\t")
        assert text == sentence and 0 <= int(label) < 10
        assert re.fullmatch(r"[01]\.\d{4}", conf)
    monkeypatch.setattr(sys, "stdin", io.StringIO("instagram hesabımı büyütmek istiyorum\n"))
    code, again, _ = run(capsys, "tag", "--model", small_runs / "a")
    assert code == 0 and again.splitlines() == lines[:1]


def test_report_merges_runs(small_runs, tmp_path, capsys):
    out = tmp_path / "table.csv"
    code, _, _ = run(capsys, "report", small_runs / "a", small_runs / "b" / "metrics_summary.csv", "--out", out)
    assert code == 0
    rows = read_metrics_summary(out)
    assert [r["method"] for r in rows] == ["doc2vec_mnlr", "doc2vec_mnlr"]


def test_ingest_and_split(tmp_path, capsys):
    data = tmp_path / "d.csv"
    data.write_text("text,label\n" + "".join(f"cümle {i},{i % 2}\n" for i in range(20)), encoding="utf-8")
    code, out, _ = run(capsys, "ingest", "--data", data, "--out", tmp_path / "norm.jsonl")
    assert code == 0 and "20 records" in out
    first = json.loads((tmp_path / "norm.jsonl").read_text(encoding="utf-8").splitlines()[0])
    assert first["tokens"] == ["cümle", "0"]
    code, _, _ = run(capsys, "split", "--data", tmp_path / "norm.jsonl", "--out", tmp_path / "sp", "--seed", 3)
    assert code == 0
    assert len((tmp_path / "sp" / "test.jsonl").read_text().splitlines()) == 6


@pytest.mark.parametrize("argv,code,message", [
    (["train", "--set", "pipeline=svm"], 2, "unknown pipeline"),
    (["train", "--set", "lstm.width=3"], 2, "unknown config key"),
    (["train", "--set", "noequals"], 2, "key=value"),
    (["train", "--pipeline", "lstm", "--train", "/nonexistent/train.jsonl", "--test", "/nonexistent/t.jsonl"], 1,
     "nonexistent"),
    (["ingest", "--data", "/nonexistent.jsonl"], 1, "nonexistent"),
    (["tag", "--model", "/nonexistent"], 1, "error"),
])
def test_failures_exit_nonzero(argv, code, message, capsys, tmp_path):
    got, _, err = run(capsys, *argv, *(["--out", tmp_path] if argv[0] == "train" else []))
    assert got == code
    assert message in err


def test_argparse_rejects_unknown_pipeline(capsys):
    with pytest.raises(SystemExit) as exc:
        main(["train", "--pipeline", "svm"])
    assert exc.value.code == 2


def test_gradcheck_command(capsys):
    code, out, _ = run(capsys, "gradcheck")
    assert code == 0
    assert "FAIL" not in out and out.strip().endswith("below 0.0001")


def test_google_ads_sentence_is_tagged_2(tmp_path):
    """The desk LSTM tags the Google-ads example sentence as class 2 (installed entry point, real process)."""
    out = tmp_path / "lstm"
    cmd = [sys.executable, "-m", "tagtriad.cli"]
    subprocess.run(cmd + ["train", "--pipeline", "lstm", "--seed", "0", "--out", str(out)], check=True,
                   capture_output=True)
    res = subprocess.run(cmd + ["tag", "--model", str(out)], input="google üzerinden reklam vereceğim\n",
                         capture_output=True, text=True, check=True)
    assert res.stdout.split("\t")[1] == "2"
