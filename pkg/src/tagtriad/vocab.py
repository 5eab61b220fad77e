"""Word-level vocabularies and fixed-length integer encoding."""

from __future__ import annotations

import hashlib
import json
from collections import Counter
from dataclasses import dataclass
from pathlib import Path

import numpy as np

PAD, UNK, CLS, SEP, MASK = "<pad>", "<unk>", "<cls>", "<sep>", "<mask>"
BASIC_SPECIALS = (PAD, UNK)
ENCODER_SPECIALS = (PAD, UNK, CLS, SEP, MASK)
PAD_ID, UNK_ID, CLS_ID, SEP_ID, MASK_ID = range(5)
VOCAB_VERSION = 1


class VocabError(ValueError):
    pass


class Vocabulary:
    """Immutable token <-> id bijection; special tokens take the lowest ids."""

    def __init__(self, words, counts, specials=BASIC_SPECIALS):
        self.specials = tuple(specials)
        if self.specials[:2] != BASIC_SPECIALS or (len(self.specials) > 2 and self.specials != ENCODER_SPECIALS):
            raise VocabError(f"unsupported special token layout {self.specials}")
        self.id_to_token = self.specials + tuple(words)
        self.counts = tuple(int(c) for c in counts)
        if len(self.counts) != len(words):
            raise VocabError("one count per word required")
        self.token_to_id = {t: i for i, t in enumerate(self.id_to_token)}
        if len(self.token_to_id) != len(self.id_to_token):
            raise VocabError("duplicate token in vocabulary")
        self._serialized = None

    def __len__(self):
        return len(self.id_to_token)

    def __contains__(self, token):
        return token in self.token_to_id

    @property
    def words(self):
        return self.id_to_token[len(self.specials):]

    @property
    def has_encoder_specials(self) -> bool:
        return len(self.specials) == len(ENCODER_SPECIALS)

    @property
    def first_word_id(self) -> int:
        return len(self.specials)

    def id(self, token: str) -> int:
        return self.token_to_id.get(token, UNK_ID)

    def to_json(self) -> str:
        if self._serialized is None:
            payload = {"version": VOCAB_VERSION, "specials": list(self.specials),
                       "tokens": list(self.words), "counts": list(self.counts)}
            self._serialized = json.dumps(payload, ensure_ascii=False, sort_keys=True, separators=(",", ":"))
        return self._serialized

    @property
    def hash(self) -> str:
        return hashlib.sha256(self.to_json().encode("utf-8")).hexdigest()

    @classmethod
    def from_json(cls, text: str) -> "Vocabulary":
        payload = json.loads(text)
        if payload.get("version") != VOCAB_VERSION:
            raise VocabError(f"unsupported vocabulary version {payload.get('version')}")
        return cls(payload["tokens"], payload["counts"], payload["specials"])

    def save(self, path) -> Path:
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(self.to_json(), encoding="utf-8")
        return path

    @classmethod
    def load(cls, path) -> "Vocabulary":
        return cls.from_json(Path(path).read_text(encoding="utf-8"))


@dataclass(frozen=True)
class EncodedSequence:
    ids: tuple[int, ...]
    true_length: int


def build_vocab(train, min_count: int = 1, specials=BASIC_SPECIALS) -> Vocabulary:
    """Vocabulary over the tokens of ``train`` (a Dataset or iterable of token lists).

    Words occurring at least ``min_count`` times are kept, ordered by
    descending frequency and then lexicographically.
    """
    token_lists = train.token_lists if hasattr(train, "token_lists") else train
    counts = Counter()
    n = 0
    for toks in token_lists:
        counts.update(toks)
        n += 1
    if n == 0:
        raise VocabError("cannot build a vocabulary from an empty corpus")
    reserved = set(specials)
    kept = sorted(((w, c) for w, c in counts.items() if c >= min_count and w not in reserved),
                  key=lambda wc: (-wc[1], wc[0]))
    return Vocabulary([w for w, _ in kept], [c for _, c in kept], specials)


def encode(tokens, v: Vocabulary, max_len: int, add_cls_sep: bool = False) -> EncodedSequence:
    if add_cls_sep:
        if not v.has_encoder_specials:
            raise VocabError("CLS/SEP framing needs a vocabulary with encoder specials")
        if max_len < 3:
            raise VocabError(f"max_len {max_len} too small for CLS/SEP framing (need >= 3)")
        body = [v.id(t) for t in list(tokens)[: max_len - 2]]
        ids = [CLS_ID] + body + [SEP_ID]
    else:
        if max_len < 1:
            raise VocabError(f"max_len must be >= 1, got {max_len}")
        ids = [v.id(t) for t in list(tokens)[:max_len]]
    n = len(ids)
    return EncodedSequence(tuple(ids + [PAD_ID] * (max_len - n)), n)


def decode(seq: EncodedSequence, v: Vocabulary) -> list[str]:
    out = []
    for i in seq.ids:
        if not 0 <= i < len(v):
            raise VocabError(f"id {i} out of range for vocabulary of size {len(v)}")
        if i in (PAD_ID, CLS_ID, SEP_ID) and i < len(v.specials):
            continue
        out.append(v.id_to_token[i])
    return out


def encode_batch(token_lists, v: Vocabulary, max_len: int, add_cls_sep: bool = False):
    """Encode many sentences; returns (ids int64 array [N, max_len], lengths int64 array [N])."""
    seqs = [encode(t, v, max_len, add_cls_sep) for t in token_lists]
    ids = np.array([s.ids for s in seqs], dtype=np.int64).reshape(len(seqs), max_len)
    lengths = np.array([s.true_length for s in seqs], dtype=np.int64)
    return ids, lengths
