import json
import unicodedata

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from tagtriad.corpus import (PUNCTUATION, DatasetError, SplitSpec, from_pairs, load_dataset, load_stopwords,
                             normalize, parse_dataset, remove_stopwords, stratified_split, split_test_size)


@pytest.mark.parametrize("text,expected", [
    ("Merhaba, REKLAM!", ["merhaba", "reklam"]),
    ("İnternet", ["internet"]),
    ("SEO  yaptıracağım...", ["seo", "yaptıracağım"]),
    ("web,tasarım", ["web", "tasarım"]),
    ("IŞIK ılık", ["ışık", "ılık"]),
    ("", []),
    ("  —…  ", []),
])
def test_normalize_examples(text, expected):
    assert normalize(text) == expected


@settings(max_examples=200, deadline=None)
@given(st.text(max_size=60))
def test_normalize_is_idempotent_and_clean(text):
    toks = normalize(text)
    assert normalize(" ".join(toks)) == toks
    for t in toks:
        assert t
        assert not any(ch in PUNCTUATION for ch in t)
        assert not any(unicodedata.category(ch)[0] in "PC" for ch in t)
        assert t == t.lower()


def test_remove_stopwords():
    assert remove_stopwords(["bilgi", "almak", "istiyordum"], {"almak"}) == ["bilgi", "istiyordum"]
    assert remove_stopwords([], {"ve"}) == []
    assert remove_stopwords(["ve", "ile"], {"ve", "ile"}) == []


def test_bundled_stopwords_are_normalized():
    sw = load_stopwords()
    assert 150 <= len(sw) <= 300
    assert all(normalize(w) == [w] for w in sw)


def test_load_jsonl_example(tmp_path):
    p = tmp_path / "d.jsonl"
    p.write_text(json.dumps({"text": "google üzerinden reklam vereceğim", "label": 2}, ensure_ascii=False) + "\n",
                 encoding="utf-8")
    ds = load_dataset(p)
    assert len(ds) == 1
    r = ds.records[0]
    assert r.label == 2 and r.tokens == ("google", "üzerinden", "reklam", "vereceğim")
    assert ds.class_histogram[2] == 1 and sum(ds.class_histogram) == 1


def test_load_csv(tmp_path):
    p = tmp_path / "d.csv"
    p.write_text('text,label\n"Web sitesi, lazım",1\nseo,2\n', encoding="utf-8")
    ds = load_dataset(p)
    assert ds.labels == [1, 2]
    assert ds.records[0].tokens == ("web", "sitesi", "lazım")


def test_load_errors(tmp_path):
    p = tmp_path / "empty.jsonl"
    p.write_text("", encoding="utf-8")
    with pytest.raises(DatasetError, match="empty dataset"):
        load_dataset(p)
    with pytest.raises(DatasetError, match="record 1"):
        parse_dataset('{"text":"a","label":0}\n{"text":"b","label":10}\n')
    with pytest.raises(DatasetError, match="line 2"):
        parse_dataset('{"text":"a","label":0}\n{not json\n')
    with pytest.raises(DatasetError, match="text"):
        parse_dataset('{"text":"","label":0}\n')
    with pytest.raises(DatasetError):
        load_dataset(tmp_path / "missing.jsonl")


def test_split_single_class_exact():
    ds = from_pairs([(f"cümle {i}", 0) for i in range(100)], class_count=1)
    train, test = stratified_split(ds, SplitSpec(0.3, 0))
    assert (len(train), len(test)) == (70, 30)


def test_split_rejects_tiny_class():
    ds = from_pairs([("a b", 0), ("c d", 0), ("e f", 1)], class_count=2)
    with pytest.raises(DatasetError, match="class 1"):
        stratified_split(ds, SplitSpec(0.3, 0))


def test_split_size_large_corpus():
    # per-class flooring on a 13794-record corpus lands just below 30%
    assert split_test_size(13794, 0.3) == 4138
    assert split_test_size(10, 0.3) == 3


@settings(max_examples=40, deadline=None)
@given(st.lists(st.integers(0, 4), min_size=10, max_size=120), st.integers(0, 2**32), st.floats(0.05, 0.95))
def test_split_partition_and_stratification(labels, seed, frac):
    counts = [labels.count(c) for c in range(5)]
    if any(0 < n < 2 for n in counts):
        labels = labels + [c for c in range(5) if counts[c] == 1]
    ds = from_pairs([(f"s {i}", y) for i, y in enumerate(labels)], class_count=5)
    train, test = stratified_split(ds, SplitSpec(frac, seed))
    ids_tr, ids_te = {r.id for r in train}, {r.id for r in test}
    assert not ids_tr & ids_te
    assert ids_tr | ids_te == {r.id for r in ds}
    for c in range(5):
        n = ds.class_histogram[c]
        assert test.class_histogram[c] == split_test_size(n, frac)
    again = stratified_split(ds, SplitSpec(frac, seed))
    assert [r.id for r in again[1]] == [r.id for r in test]
