from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from tagtriad.metrics import (SHADES, ClassScore, MetricsError, confusion_matrix, evaluate, heatmap_text, macro_f1,
                              per_class_prf, read_confusion_csv, read_metrics_summary, render_report, summary_row,
                              weighted_f1, write_metrics_summary)

from oracles import brute_force_scores


def test_confusion_examples():
    assert confusion_matrix([0, 1], [0, 1], 2).counts.tolist() == [[1, 0], [0, 1]]
    assert confusion_matrix([0, 0, 1], [1, 0, 1], 2).counts.tolist() == [[1, 1], [0, 1]]
    empty = confusion_matrix([], [], 3)
    assert empty.total == 0 and empty.counts.tolist() == [[0] * 3] * 3


def test_confusion_errors():
    with pytest.raises(MetricsError, match="length"):
        confusion_matrix([0], [0, 1], 2)
    with pytest.raises(MetricsError, match="range"):
        confusion_matrix([2], [0], 2)


def test_prf_hand_example():
    pc = per_class_prf(confusion_matrix([0, 0, 1], [1, 0, 1], 2))
    assert (pc[0].precision, pc[0].recall, pc[0].f1) == (1, Fraction(1, 2), Fraction(2, 3))
    assert (pc[1].precision, pc[1].recall, pc[1].f1) == (Fraction(1, 2), 1, Fraction(2, 3))


def test_zero_support_is_flagged():
    r = evaluate([0, 0], [0, 0], 2)
    assert r.per_class[1].recall == 0 and r.per_class[1].recall_undefined
    assert r.per_class[1].precision_undefined
    assert any("class 1" in f for f in r.undefined_flags)


def test_macro_and_weighted_example():
    pc = [ClassScore(0, 0, Fraction(1, 2), 3), ClassScore(0, 0, Fraction(1), 1)]
    assert macro_f1(pc) == Fraction(3, 4)
    assert weighted_f1(pc) == Fraction(5, 8)
    with pytest.raises(MetricsError, match="support"):
        weighted_f1([ClassScore(0, 0, 0, 0)])


def test_balanced_support_macro_equals_weighted():
    r = evaluate([0, 0, 1, 1, 2, 2], [0, 1, 1, 1, 2, 0], 3)
    assert r.macro_f1 == r.weighted_f1


def test_imbalance_moves_weighted_not_macro():
    # a rare class flipping between right and wrong changes macro F1 a lot, weighted F1 little
    gold = [0] * 95 + [1] * 5
    good = evaluate(gold, [0] * 95 + [1] * 5, 2)
    bad = evaluate(gold, [0] * 100, 2)
    assert good.macro_f1 - bad.macro_f1 > 5 * (good.weighted_f1 - bad.weighted_f1)
    assert bad.weighted_f1 > Fraction(9, 10) and bad.macro_f1 < Fraction(1, 2)


@settings(max_examples=300, deadline=None)
@given(st.integers(1, 12).flatmap(lambda k: st.tuples(
    st.just(k), st.lists(st.tuples(st.integers(0, k - 1), st.integers(0, k - 1)), min_size=1, max_size=200))))
def test_matches_brute_force_oracle(case):
    k, pairs = case
    gold, pred = [g for g, _ in pairs], [p for _, p in pairs]
    r = evaluate(gold, pred, k)
    acc, f1s, macro, weighted = brute_force_scores(gold, pred, k)
    assert r.accuracy == acc and r.macro_f1 == macro and r.weighted_f1 == weighted
    assert [s.f1 for s in r.per_class] == f1s
    # accuracy = sum_c support_c * recall_c / N
    assert r.accuracy == sum((s.support * s.recall for s in r.per_class), Fraction(0)) / len(gold)
    assert r.confusion.support == [gold.count(c) for c in range(k)]


def test_identity_heatmap_darkest_only_on_diagonal():
    cm = confusion_matrix([0, 1, 2, 2], [0, 1, 2, 2], 3)
    rows = heatmap_text(cm).splitlines()[1:4]
    for i, row in enumerate(rows):
        cells = [row[10 + 3 * j:12 + 3 * j] for j in range(3)]
        assert cells[i] == SHADES[-1] * 2
        assert all(c == SHADES[0] * 2 for j, c in enumerate(cells) if j != i)


def test_report_files_round_trip(tmp_path):
    rng = np.random.default_rng(1)
    gold, pred = rng.integers(0, 4, 50).tolist(), rng.integers(0, 4, 50).tolist()
    r = evaluate(gold, pred, 4, "test")
    paths = render_report(r, tmp_path, "lstm")
    assert {p.name for p in paths} == {"confusion_lstm_test.csv", "per_class_lstm_test.csv", "heatmap_lstm_test.txt"}
    assert np.array_equal(read_confusion_csv(tmp_path / "confusion_lstm_test.csv").counts, r.confusion.counts)


def test_metrics_summary_schema(tmp_path):
    r = evaluate([0, 1, 1], [0, 1, 0], 2)
    rows = [summary_row(m, r, r) for m in ("doc2vec_mnlr", "lstm", "bert")]
    path = write_metrics_summary(rows, tmp_path / "metrics_summary.csv")
    lines = path.read_text().splitlines()
    assert lines[0] == "method,train_acc,test_acc,macro_f1,weighted_f1"
    assert len(lines) == 4 and all(len(line.split(",")) == 5 for line in lines)
    back = read_metrics_summary(path)
    assert back[1]["test_acc"] == round(float(r.accuracy), 4)


def test_unwritable_directory(tmp_path):
    blocker = tmp_path / "file"
    blocker.write_text("x")
    with pytest.raises(MetricsError, match="cannot write"):
        render_report(evaluate([0], [0], 1), blocker / "sub", "lstm")
