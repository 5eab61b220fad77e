"""Command-line entry point: ``tagtriad <subcommand> [options]``.

Exit status is 0 on success, 2 for usage and configuration errors and 1 for
any other failure.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from . import config as C
from .corpus import DatasetError, SplitSpec, load_dataset, stratified_split, write_jsonl
from .metrics import MetricsError, read_metrics_summary, render_report, write_metrics_summary
from .nncore import CheckpointError
from .vocab import VocabError


class UsageError(Exception):
    pass


def _kv(pairs) -> dict:
    out = {}
    for item in pairs or []:
        key, sep, value = item.partition("=")
        if not sep:
            raise UsageError(f"--set expects key=value, got {item!r}")
        out[key.strip()] = value
    return out


def _resolve(args, **extra) -> dict:
    flags = _kv(getattr(args, "set", None))
    for key in ("pipeline", "seed", "out", "data", "train", "test"):
        value = getattr(args, key, None)
        if value is not None:
            flags[key] = value
    flags.update({k: v for k, v in extra.items() if v is not None})
    return C.resolve(args.profile or "desk", args.config, flags)


def _log(msg: str):
    print(msg, file=sys.stderr, flush=True)


# -- subcommands -------------------------------------------------------------------
def cmd_ingest(args):
    ds = load_dataset(args.data, format=args.format, class_count=args.class_count)
    lines = [json.dumps({"id": r.id, "text": r.text, "label": r.label, "tokens": list(r.tokens)}, ensure_ascii=False)
             for r in ds.records]
    if args.out:
        Path(args.out).parent.mkdir(parents=True, exist_ok=True)
        Path(args.out).write_text("".join(s + "\n" for s in lines), encoding="utf-8")
    print(f"{len(ds)} records, class histogram {ds.class_histogram}")


def cmd_split(args):
    ds = load_dataset(args.data, class_count=args.class_count)
    train, test = stratified_split(ds, SplitSpec(args.test_fraction, args.seed))
    out = Path(args.out)
    write_jsonl(train, out / "train.jsonl")
    write_jsonl(test, out / "test.jsonl")
    (out / "split.txt").write_text(f"seed = {args.seed}\ntest_fraction = {args.test_fraction!r}\n", encoding="utf-8")
    print(f"train {len(train)} / test {len(test)} -> {out}")


def cmd_train(args):
    from .pipelines import run_training
    cfg = _resolve(args)
    row = run_training(cfg, log=_log if args.verbose else None)
    print(f"{row['method']}: train_acc {float(row['train_acc']):.4f} test_acc {float(row['test_acc']):.4f} "
          f"-> {cfg['out']}")


def cmd_evaluate(args):
    from .pipelines import evaluate_model, load_model
    m = load_model(args.model, args.vocab)
    ds = load_dataset(args.data, class_count=args.class_count)
    report = evaluate_model(m, ds, args.split)
    out = Path(args.out or args.model)
    method = args.method or m.kind.replace("bert_finetuned", "bert")
    render_report(report, out, method)
    print(f"{method} {args.split}: accuracy {float(report.accuracy):.4f} macro_f1 {float(report.macro_f1):.4f} "
          f"weighted_f1 {float(report.weighted_f1):.4f}")


def cmd_tag(args):
    from .pipelines import load_model, tag_lines
    m = load_model(args.model, args.vocab)
    if args.input:
        sentences = Path(args.input).read_text(encoding="utf-8").splitlines()
    else:
        sentences = sys.stdin.read().splitlines()
    for line in tag_lines(m, sentences):
        print(line)


def cmd_report(args):
    rows = []
    for path in args.inputs:
        p = Path(path)
        rows.extend(read_metrics_summary(p / "metrics_summary.csv" if p.is_dir() else p))
    write_metrics_summary(rows, args.out)
    print(f"{len(rows)} rows -> {args.out}")


def cmd_synth(args):
    from .pipelines import synth_config
    from .synthgen import generate_corpus
    cfg = _resolve(args)
    ds = generate_corpus(synth_config(cfg))
    out = Path(cfg["out"])
    if out.suffix != ".jsonl":
        out = out / "synth.jsonl"
        C.write_config(cfg, out.parent)
    write_jsonl(ds, out)
    print(f"{len(ds)} sentences, class histogram {ds.class_histogram} -> {out}")


def cmd_gradcheck(args):
    from .gradsuite import TOLERANCE, run_suites
    results = run_suites(args.seed or 0)
    for r in results:
        print(f"{'PASS' if r.ok else 'FAIL'} {r.name:24s} max rel err {r.max_rel_error:.2e}")
    bad = [r for r in results if not r.ok]
    print(f"{len(results) - len(bad)}/{len(results)} cases below {TOLERANCE:g}")
    return 1 if bad else 0


# -- parser ------------------------------------------------------------------------
def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="tagtriad", description="Short-sentence tagging: three pipelines and evaluation.")
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp, out_required=False):
        sp.add_argument("--config", help="flat key = value config file")
        sp.add_argument("--profile", choices=C.PROFILES)
        sp.add_argument("--seed", type=int)
        sp.add_argument("--out", required=out_required)
        sp.add_argument("--set", action="append", metavar="KEY=VALUE", help="override one config key")

    sp = sub.add_parser("ingest", help="validate and normalize a dataset file")
    sp.add_argument("--data", required=True)
    sp.add_argument("--format", choices=("jsonl", "csv"))
    sp.add_argument("--class-count", type=int, default=10)
    sp.add_argument("--out", help="write normalized JSONL here")
    sp.set_defaults(fn=cmd_ingest)

    sp = sub.add_parser("split", help="stratified train/test split")
    sp.add_argument("--data", required=True)
    sp.add_argument("--out", required=True)
    sp.add_argument("--seed", type=int, default=0)
    sp.add_argument("--test-fraction", type=float, default=0.3)
    sp.add_argument("--class-count", type=int, default=10)
    sp.set_defaults(fn=cmd_split)

    sp = sub.add_parser("train", help="train a pipeline and write its artifacts")
    common(sp)
    sp.add_argument("--pipeline", choices=C.PIPELINES)
    sp.add_argument("--data", help="single dataset file to split (default: synthetic corpus)")
    sp.add_argument("--train")
    sp.add_argument("--test")
    sp.add_argument("--verbose", action="store_true")
    sp.set_defaults(fn=cmd_train)

    sp = sub.add_parser("evaluate", help="evaluate a trained model on a dataset")
    sp.add_argument("--model", required=True, help="artifact directory or checkpoint file")
    sp.add_argument("--data", required=True)
    sp.add_argument("--vocab", help="vocabulary to check against the checkpoint")
    sp.add_argument("--split", default="test", choices=("train", "test"))
    sp.add_argument("--method")
    sp.add_argument("--class-count", type=int, default=10)
    sp.add_argument("--out")
    sp.set_defaults(fn=cmd_evaluate)

    sp = sub.add_parser("tag", help="label sentences from a file or standard input")
    sp.add_argument("--model", required=True)
    sp.add_argument("--vocab")
    sp.add_argument("--input")
    sp.set_defaults(fn=cmd_tag)

    sp = sub.add_parser("report", help="merge metrics summaries into one table")
    sp.add_argument("inputs", nargs="+", help="metrics_summary.csv files or run directories")
    sp.add_argument("--out", required=True)
    sp.set_defaults(fn=cmd_report)

    sp = sub.add_parser("synth", help="generate the synthetic corpus")
    common(sp)
    sp.set_defaults(fn=cmd_synth)

    sp = sub.add_parser("gradcheck", help="run the finite-difference gradient suites")
    sp.add_argument("--seed", type=int, default=0)
    sp.set_defaults(fn=cmd_gradcheck)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        code = args.fn(args)
    except (UsageError, C.ConfigError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except (DatasetError, VocabError, CheckpointError, MetricsError, FileNotFoundError, ValueError,
            RuntimeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    return int(code or 0)


if __name__ == "__main__":
    sys.exit(main())
