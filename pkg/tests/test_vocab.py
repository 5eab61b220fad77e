import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from tagtriad.vocab import (CLS_ID, ENCODER_SPECIALS, PAD_ID, SEP_ID, UNK, UNK_ID, EncodedSequence, Vocabulary,
                            VocabError, build_vocab, decode, encode, encode_batch)


def test_min_count_threshold():
    v = build_vocab([["a", "a", "b"], ["a"]], min_count=2)
    assert v.words == ("a",)
    assert encode(["b"], v, 3).ids[0] == UNK_ID


def test_order_is_frequency_then_lexicographic():
    v = build_vocab([["c", "b", "a", "b", "c"]])
    assert v.words == ("b", "c", "a")
    assert v.id_to_token[:2] == ("<pad>", "<unk>")


def test_serialization_is_deterministic(tmp_path):
    corpus = [["reklam", "ver"], ["seo", "reklam"]]
    a, b = build_vocab(corpus), build_vocab(corpus)
    assert a.to_json() == b.to_json() and a.hash == b.hash
    path = a.save(tmp_path / "v.json")
    back = Vocabulary.load(path)
    assert back.hash == a.hash and back.token_to_id == a.token_to_id


def test_token_id_bijection():
    v = build_vocab([["x", "y", "z", "x"]], specials=ENCODER_SPECIALS)
    assert all(v.token_to_id[t] == i for i, t in enumerate(v.id_to_token))
    assert v.first_word_id == 5


def test_encode_pads_and_reports_length():
    v = build_vocab([["seo", "yaptıracağım"]])
    seq = encode(["seo", "yaptıracağım"], v, 5)
    assert seq.ids == (v.id("seo"), v.id("yaptıracağım"), PAD_ID, PAD_ID, PAD_ID)
    assert seq.true_length == 2


def test_encode_truncates_tail():
    words = [f"w{i}" for i in range(300)]
    v = build_vocab([words])
    seq = encode(words, v, 250)
    assert seq.true_length == 250
    assert decode(seq, v) == words[:250]


def test_cls_sep_framing():
    v = build_vocab([["a", "b"]], specials=ENCODER_SPECIALS)
    seq = encode(["a", "b", "q"], v, 6, add_cls_sep=True)
    assert seq.ids == (CLS_ID, v.id("a"), v.id("b"), UNK_ID, SEP_ID, PAD_ID)
    assert seq.true_length == 5
    with pytest.raises(VocabError, match="too small"):
        encode(["a"], v, 2, add_cls_sep=True)
    with pytest.raises(VocabError, match="encoder specials"):
        encode(["a"], build_vocab([["a"]]), 5, add_cls_sep=True)


def test_decode_cases():
    v = build_vocab([["a"]])
    assert decode(EncodedSequence((0, 0, 0), 0), v) == []
    assert decode(EncodedSequence((v.id("a"), UNK_ID, 0), 2), v) == ["a", UNK]
    with pytest.raises(VocabError, match="out of range"):
        decode(EncodedSequence((99,), 1), v)


words = st.lists(st.sampled_from(["reklam", "seo", "web", "site", "fiyat", "harita", "çağrı"]), max_size=12)


@settings(max_examples=100, deadline=None)
@given(words, st.integers(1, 16), st.booleans())
def test_round_trip_and_fixed_length(tokens, max_len, framed):
    v = build_vocab([["reklam", "seo", "web", "site", "fiyat", "harita", "çağrı"]], specials=ENCODER_SPECIALS)
    if framed and max_len < 3:
        max_len = 3
    seq = encode(tokens, v, max_len, add_cls_sep=framed)
    assert len(seq.ids) == max_len
    assert all(i == PAD_ID for i in seq.ids[seq.true_length:])
    cap = max_len - 2 if framed else max_len
    if len(tokens) <= cap:
        assert decode(seq, v) == tokens


def test_encode_batch_shapes():
    v = build_vocab([["a", "b"]])
    ids, lengths = encode_batch([["a"], [], ["a", "b", "a"]], v, 4)
    assert ids.shape == (3, 4) and list(lengths) == [1, 0, 3]
