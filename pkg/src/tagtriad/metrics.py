"""Confusion matrices, per-class precision/recall/F1 and their macro/weighted averages.

All ratios are kept as exact fractions; floats only appear at the reporting
boundary.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass
from fractions import Fraction
from pathlib import Path

import numpy as np

SUMMARY_FIELDS = ("method", "train_acc", "test_acc", "macro_f1", "weighted_f1")
SHADES = " .:-=+*#%@"


class MetricsError(ValueError):
    pass


@dataclass(frozen=True)
class ConfusionMatrix:
    """Rows are gold labels, columns are predicted labels."""

    counts: np.ndarray
    k: int

    @property
    def total(self) -> int:
        return int(self.counts.sum())

    @property
    def support(self) -> list[int]:
        return [int(x) for x in self.counts.sum(axis=1)]


@dataclass(frozen=True)
class ClassScore:
    precision: Fraction
    recall: Fraction
    f1: Fraction
    support: int
    precision_undefined: bool = False
    recall_undefined: bool = False


@dataclass(frozen=True)
class EvalReport:
    confusion: ConfusionMatrix
    per_class: tuple[ClassScore, ...]
    accuracy: Fraction
    macro_f1: Fraction
    weighted_f1: Fraction
    split: str = "test"

    @property
    def undefined_flags(self) -> list[str]:
        flags = []
        for c, s in enumerate(self.per_class):
            if s.precision_undefined:
                flags.append(f"class {c}: precision 0/0 reported as 0")
            if s.recall_undefined:
                flags.append(f"class {c}: recall 0/0 reported as 0")
        return flags


def confusion_matrix(gold, pred, k: int) -> ConfusionMatrix:
    gold = np.asarray(list(gold), dtype=np.int64)
    pred = np.asarray(list(pred), dtype=np.int64)
    if gold.shape != pred.shape:
        raise MetricsError(f"length mismatch: {gold.size} gold labels vs {pred.size} predictions")
    for name, arr in (("gold", gold), ("predicted", pred)):
        if arr.size and (arr.min() < 0 or arr.max() >= k):
            raise MetricsError(f"{name} label out of range [0, {k})")
    counts = np.zeros((k, k), dtype=np.int64)
    np.add.at(counts, (gold, pred), 1)
    return ConfusionMatrix(counts, k)


def _ratio(num: int, den: int) -> tuple[Fraction, bool]:
    if den == 0:
        return Fraction(0), True
    return Fraction(num, den), False


def per_class_prf(cm: ConfusionMatrix) -> tuple[ClassScore, ...]:
    colsum = cm.counts.sum(axis=0)
    rowsum = cm.counts.sum(axis=1)
    scores = []
    for c in range(cm.k):
        tp = int(cm.counts[c, c])
        p, p_undef = _ratio(tp, int(colsum[c]))
        r, r_undef = _ratio(tp, int(rowsum[c]))
        f1 = Fraction(0) if p + r == 0 else 2 * p * r / (p + r)
        scores.append(ClassScore(p, r, f1, int(rowsum[c]), p_undef, r_undef))
    return tuple(scores)


def macro_f1(per_class) -> Fraction:
    if len(per_class) < 1:
        raise MetricsError("macro F1 needs at least one class")
    return sum((s.f1 for s in per_class), Fraction(0)) / len(per_class)


def weighted_f1(per_class) -> Fraction:
    total = sum(s.support for s in per_class)
    if total == 0:
        raise MetricsError("weighted F1 undefined: total support is zero")
    return sum((s.support * s.f1 for s in per_class), Fraction(0)) / total


def evaluate(gold, pred, k: int, split: str = "test") -> EvalReport:
    cm = confusion_matrix(gold, pred, k)
    if cm.total == 0:
        raise MetricsError("cannot evaluate zero examples")
    pc = per_class_prf(cm)
    acc = Fraction(int(np.trace(cm.counts)), cm.total)
    return EvalReport(cm, pc, acc, macro_f1(pc), weighted_f1(pc), split)


def fmt(x) -> str:
    return f"{float(x):.4f}"


def heatmap_text(cm: ConfusionMatrix) -> str:
    """Row-normalized text heatmap; darker glyphs mean a larger share of the gold row."""
    lines = ["gold\\pred " + " ".join(f"{j:>2}" for j in range(cm.k))]
    for i in range(cm.k):
        row = cm.counts[i]
        n = row.sum()
        cells = []
        for j in range(cm.k):
            share = row[j] / n if n else 0.0
            level = int(round(share * (len(SHADES) - 1)))
            cells.append(SHADES[level] * 2)
        pct = f"{100.0 * row[i] / n:5.1f}%" if n else "  n/a"
        lines.append(f"{i:>9} " + " ".join(cells) + f"  | diag {pct} (n={int(n)})")
    lines.append(f"shades (low->high): {SHADES!r}")
    return "\n".join(lines) + "\n"


def write_confusion_csv(cm: ConfusionMatrix, path) -> Path:
    path = Path(path)
    with path.open("w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["gold\\pred"] + [str(j) for j in range(cm.k)])
        for i in range(cm.k):
            w.writerow([str(i)] + [str(int(x)) for x in cm.counts[i]])
    return path


def read_confusion_csv(path) -> ConfusionMatrix:
    with Path(path).open(encoding="utf-8", newline="") as fh:
        rows = list(csv.reader(fh))
    counts = np.array([[int(x) for x in r[1:]] for r in rows[1:]], dtype=np.int64)
    return ConfusionMatrix(counts, counts.shape[0])


def write_per_class_csv(report: EvalReport, path) -> Path:
    path = Path(path)
    with path.open("w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["class", "precision", "recall", "f1", "support", "flags"])
        for c, s in enumerate(report.per_class):
            flags = ";".join(f for f, on in (("precision_undefined", s.precision_undefined),
                                             ("recall_undefined", s.recall_undefined)) if on)
            w.writerow([c, fmt(s.precision), fmt(s.recall), fmt(s.f1), s.support, flags])
        w.writerow(["accuracy", "", "", fmt(report.accuracy), report.confusion.total, ""])
        w.writerow(["macro_f1", "", "", fmt(report.macro_f1), report.confusion.total, ""])
        w.writerow(["weighted_f1", "", "", fmt(report.weighted_f1), report.confusion.total, ""])
    return path


def render_report(report: EvalReport, out_dir, method: str) -> list[Path]:
    """Write the confusion CSV, a per-class metrics CSV and a text heatmap for one report."""
    out = Path(out_dir)
    try:
        out.mkdir(parents=True, exist_ok=True)
        stem = f"{method}_{report.split}"
        paths = [
            write_confusion_csv(report.confusion, out / f"confusion_{stem}.csv"),
            write_per_class_csv(report, out / f"per_class_{stem}.csv"),
        ]
        heat = out / f"heatmap_{stem}.txt"
        heat.write_text(heatmap_text(report.confusion), encoding="utf-8")
        paths.append(heat)
    except OSError as exc:
        raise MetricsError(f"cannot write report to {out}: {exc}") from None
    return paths


def summary_row(method: str, train: EvalReport, test: EvalReport) -> dict:
    return {"method": method, "train_acc": train.accuracy, "test_acc": test.accuracy,
            "macro_f1": test.macro_f1, "weighted_f1": test.weighted_f1}


def write_metrics_summary(rows, path) -> Path:
    """Table-style summary: one row per method, values with 4 decimals."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(SUMMARY_FIELDS)
        for row in rows:
            w.writerow([row["method"]] + [fmt(row[k]) for k in SUMMARY_FIELDS[1:]])
    return path


def read_metrics_summary(path) -> list[dict]:
    with Path(path).open(encoding="utf-8", newline="") as fh:
        rows = list(csv.DictReader(fh))
    return [{"method": r["method"], **{k: float(r[k]) for k in SUMMARY_FIELDS[1:]}} for r in rows]
