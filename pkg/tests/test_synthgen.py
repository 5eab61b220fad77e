import math
from collections import Counter

import pytest

from tagtriad.corpus import SplitSpec, dump_jsonl, normalize, stratified_split, turkish_lower
from tagtriad.synthgen import (MAX_LEN, MIN_LEN, GeneratorConfig, GeneratorError, generate_corpus, generate_unlabeled,
                               load_lexicon)


def naive_bayes_accuracy(train, test, alpha=1.0):
    """Multinomial unigram Naive Bayes with Laplace smoothing."""
    k = train.class_count
    prior = Counter(train.labels)
    word_counts = [Counter() for _ in range(k)]
    for r in train:
        word_counts[r.label].update(r.tokens)
    vocab = set().union(*word_counts)
    totals = [sum(c.values()) for c in word_counts]
    hits = 0
    for r in test:
        best, best_c = -math.inf, -1
        for c in range(k):
            if not prior[c]:
                continue
            s = math.log(prior[c] / len(train))
            s += sum(math.log((word_counts[c][w] + alpha) / (totals[c] + alpha * len(vocab))) for w in r.tokens)
            if s > best:
                best, best_c = s, c
        hits += best_c == r.label
    return hits / len(test)


def test_same_seed_is_byte_identical():
    a = dump_jsonl(generate_corpus(GeneratorConfig(total_size=300, seed=5)))
    b = dump_jsonl(generate_corpus(GeneratorConfig(total_size=300, seed=5)))
    assert a == b
    assert a != dump_jsonl(generate_corpus(GeneratorConfig(total_size=300, seed=6)))


def test_weights_control_class_ratio():
    cfg = GeneratorConfig(total_size=20000, weights=(5.0,) + (1.0,) * 9, seed=3)
    hist = generate_corpus(cfg).class_histogram
    assert abs(hist[0] / hist[1] - 5) / 5 < 0.10


def test_default_profile_is_skewed():
    hist = generate_corpus(GeneratorConfig()).class_histogram
    assert len(hist) == 10 and sum(hist) == 3000
    assert 6 <= max(hist) / min(hist) <= 10


def test_zero_overlap_is_separable():
    ds = generate_corpus(GeneratorConfig(overlap=0.0, seed=11))
    train, test = stratified_split(ds, SplitSpec(0.3, 0))
    assert naive_bayes_accuracy(train, test) >= 0.99


def test_default_overlap_is_not_trivially_separable():
    ds = generate_corpus(GeneratorConfig())
    train, test = stratified_split(ds, SplitSpec(0.3, 0))
    assert naive_bayes_accuracy(train, test) < 0.95


def test_class_pools_are_word_disjoint():
    lex = load_lexicon()
    for a in lex.class_ids:
        for b in lex.class_ids:
            if a < b:
                assert not lex.class_words(a) & lex.class_words(b), (a, b)


@pytest.mark.parametrize("noise", [0.0, 0.05, 0.3])
def test_lengths_and_normalization(noise):
    ds = generate_corpus(GeneratorConfig(total_size=1500, noise=noise, seed=2))
    for r in ds:
        assert MIN_LEN <= len(r.tokens) <= MAX_LEN
        # only casing and trailing punctuation differ from the normalized form
        stripped = turkish_lower(r.text).rstrip("?!.")
        assert stripped.split() == list(r.tokens)
        assert normalize(" ".join(r.tokens)) == list(r.tokens)


def test_unlabeled_matches_text_stream():
    cfg = GeneratorConfig(total_size=50, seed=9)
    assert generate_unlabeled(cfg) == generate_corpus(cfg).texts


def test_config_validation():
    with pytest.raises(GeneratorError, match="overlap"):
        GeneratorConfig(overlap=1.5)
    with pytest.raises(GeneratorError, match="weight"):
        GeneratorConfig(weights=(1.0, 2.0))
    with pytest.raises(GeneratorError, match="classes"):
        generate_corpus(GeneratorConfig(class_count=11, weights=(1.0,) * 11))
