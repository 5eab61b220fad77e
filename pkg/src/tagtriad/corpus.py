"""Labeled short-sentence datasets: loading, normalization, stopwords, splitting."""

from __future__ import annotations

import csv
import io
import json
import math
import string
import unicodedata
from dataclasses import dataclass, field, replace
from fractions import Fraction
from importlib import resources
from pathlib import Path

import numpy as np

DEFAULT_CLASS_COUNT = 10


class DatasetError(ValueError):
    pass


@dataclass(frozen=True)
class LabeledSentence:
    id: str
    text: str
    label: int
    tokens: tuple[str, ...] = ()


@dataclass(frozen=True)
class Dataset:
    records: tuple[LabeledSentence, ...]
    class_count: int = DEFAULT_CLASS_COUNT

    def __post_init__(self):
        object.__setattr__(self, "records", tuple(self.records))
        for i, r in enumerate(self.records):
            if not 0 <= r.label < self.class_count:
                raise DatasetError(f"record {i}: label {r.label} outside [0, {self.class_count})")

    def __len__(self):
        return len(self.records)

    def __iter__(self):
        return iter(self.records)

    @property
    def class_histogram(self) -> list[int]:
        counts = [0] * self.class_count
        for r in self.records:
            counts[r.label] += 1
        return counts

    @property
    def labels(self) -> list[int]:
        return [r.label for r in self.records]

    @property
    def token_lists(self) -> list[list[str]]:
        return [list(r.tokens) for r in self.records]

    @property
    def texts(self) -> list[str]:
        return [r.text for r in self.records]

    def subset(self, indices) -> "Dataset":
        return Dataset(tuple(self.records[i] for i in indices), self.class_count)


@dataclass(frozen=True)
class SplitSpec:
    test_fraction: float = 0.30
    seed: int = 0
    stratified: bool = True

    def __post_init__(self):
        if not 0.0 < self.test_fraction < 1.0:
            raise ValueError(f"test_fraction must lie in (0, 1), got {self.test_fraction}")


@dataclass(frozen=True)
class NormalizationProfile:
    turkish_casing: bool = True
    strip_punctuation: bool = True
    extra_punctuation: frozenset = field(default_factory=frozenset)


DEFAULT_PROFILE = NormalizationProfile()

# ASCII punctuation plus the Unicode General Punctuation block.
PUNCTUATION = frozenset(string.punctuation) | frozenset(chr(c) for c in range(0x2000, 0x2070))
_TURKISH_UPPER = str.maketrans({"İ": "i", "I": "ı"})
_COMBINING_DOT = "̇"


def _is_punct(ch: str) -> bool:
    return ch in PUNCTUATION or unicodedata.category(ch)[0] in "PSC" and not ch.isspace()


def turkish_lower(text: str) -> str:
    text = unicodedata.normalize("NFKC", text).translate(_TURKISH_UPPER).lower()
    return text.replace(_COMBINING_DOT, "")


def normalize(text: str, profile: NormalizationProfile = DEFAULT_PROFILE) -> list[str]:
    """Lowercase (Turkish-aware), replace punctuation by spaces and split on whitespace."""
    if profile.turkish_casing:
        text = turkish_lower(text)
    else:
        text = unicodedata.normalize("NFKC", text).lower()
    if profile.strip_punctuation:
        extra = profile.extra_punctuation
        text = "".join(" " if (_is_punct(ch) or ch in extra or ch.isupper()) else ch for ch in text)
    return [t for t in text.split() if t]


def load_stopwords(path=None) -> frozenset[str]:
    """One token per line; ``#`` starts a comment. Defaults to the bundled Turkish list."""
    if path is None:
        raw = resources.files("tagtriad.data").joinpath("stopwords_tr.txt").read_text(encoding="utf-8")
    else:
        raw = Path(path).read_text(encoding="utf-8")
    words = set()
    for line in raw.splitlines():
        line = line.split("#", 1)[0].strip()
        if line:
            words.update(normalize(line))
    return frozenset(words)


def remove_stopwords(tokens, stoplist) -> list[str]:
    return [t for t in tokens if t not in stoplist]


def _parse_label(value, where: str) -> int:
    if isinstance(value, bool):
        raise DatasetError(f"{where}: label must be an integer, got {value!r}")
    if isinstance(value, int):
        return value
    if isinstance(value, float) and value.is_integer():
        return int(value)
    if isinstance(value, str):
        try:
            return int(value.strip())
        except ValueError:
            pass
    raise DatasetError(f"{where}: label must be an integer, got {value!r}")


def _make_record(idx: int, rec_id, text, label, where: str, class_count: int, profile) -> LabeledSentence:
    if not isinstance(text, str) or not text.strip():
        raise DatasetError(f"{where}: missing or empty text")
    label = _parse_label(label, where)
    if not 0 <= label < class_count:
        raise DatasetError(f"{where} (record {idx}): label {label} outside [0, {class_count})")
    rid = str(rec_id) if rec_id is not None else str(idx)
    return LabeledSentence(rid, text, label, tuple(normalize(text, profile)))


def load_dataset(path, format: str | None = None, class_count: int = DEFAULT_CLASS_COUNT,
                 profile: NormalizationProfile = DEFAULT_PROFILE) -> Dataset:
    """Read a JSONL or CSV file of ``{text, label}`` records into a normalized Dataset."""
    path = Path(path)
    if not path.is_file():
        raise DatasetError(f"no such dataset file: {path}")
    if format is None:
        format = "csv" if path.suffix.lower() == ".csv" else "jsonl"
    raw = path.read_text(encoding="utf-8")
    return parse_dataset(raw, format, class_count, profile)


def parse_dataset(raw: str, format: str = "jsonl", class_count: int = DEFAULT_CLASS_COUNT,
                  profile: NormalizationProfile = DEFAULT_PROFILE) -> Dataset:
    records = []
    if format == "jsonl":
        for lineno, line in enumerate(raw.splitlines(), start=1):
            if not line.strip():
                continue
            where = f"line {lineno}"
            try:
                obj = json.loads(line)
            except json.JSONDecodeError as exc:
                raise DatasetError(f"{where}: malformed JSON ({exc.msg})") from None
            if not isinstance(obj, dict) or "text" not in obj or "label" not in obj:
                raise DatasetError(f"{where}: record needs 'text' and 'label' fields")
            records.append(_make_record(len(records), obj.get("id"), obj["text"], obj["label"], where,
                                        class_count, profile))
    elif format == "csv":
        reader = csv.reader(io.StringIO(raw))
        header = next(reader, None)
        if header is None:
            raise DatasetError("empty dataset")
        cols = [h.strip().lower() for h in header]
        if "text" not in cols or "label" not in cols:
            raise DatasetError("line 1: CSV header must contain 'text' and 'label'")
        ti, li = cols.index("text"), cols.index("label")
        ii = cols.index("id") if "id" in cols else None
        for row in reader:
            lineno = reader.line_num
            if not row or not any(c.strip() for c in row):
                continue
            where = f"line {lineno}"
            if len(row) != len(cols):
                raise DatasetError(f"{where}: expected {len(cols)} fields, found {len(row)}")
            records.append(_make_record(len(records), row[ii] if ii is not None else None, row[ti], row[li],
                                        where, class_count, profile))
    else:
        raise DatasetError(f"unknown dataset format {format!r} (expected jsonl or csv)")
    if not records:
        raise DatasetError("empty dataset")
    ids = [r.id for r in records]
    if len(set(ids)) != len(ids):
        raise DatasetError("duplicate record ids")
    return Dataset(tuple(records), class_count)


def from_pairs(pairs, class_count: int = DEFAULT_CLASS_COUNT,
               profile: NormalizationProfile = DEFAULT_PROFILE) -> Dataset:
    """Build a Dataset from (text, label) pairs."""
    recs = [_make_record(i, None, t, y, f"pair {i}", class_count, profile) for i, (t, y) in enumerate(pairs)]
    return Dataset(tuple(recs), class_count)


def dump_jsonl(ds: Dataset) -> str:
    return "".join(json.dumps({"id": r.id, "text": r.text, "label": r.label}, ensure_ascii=False) + "\n"
                   for r in ds.records)


def write_jsonl(ds: Dataset, path) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(dump_jsonl(ds), encoding="utf-8")
    return path


def _fisher_yates(items: list, rng: np.random.Generator) -> list:
    items = list(items)
    for i in range(len(items) - 1, 0, -1):
        j = int(rng.integers(0, i + 1))
        items[i], items[j] = items[j], items[i]
    return items


def split_test_size(n: int, test_fraction: float) -> int:
    # exact decimal arithmetic so 0.29 * 100 floors to 29
    return math.floor(Fraction(str(test_fraction)) * n)


def stratified_split(ds: Dataset, spec: SplitSpec) -> tuple[Dataset, Dataset]:
    """Seeded split; per class, floor(test_fraction * class size) records go to test."""
    from .nncore import derive_rng

    if spec.stratified:
        groups = {}
        for i, r in enumerate(ds.records):
            groups.setdefault(r.label, []).append(i)
        for c, idx in groups.items():
            if len(idx) < 2:
                raise DatasetError(f"class {c} has {len(idx)} record(s); stratified split needs at least 2")
    else:
        groups = {-1: list(range(len(ds)))}
    test_idx = set()
    for c in sorted(groups):
        idx = groups[c]
        shuffled = _fisher_yates(idx, derive_rng(spec.seed, "split", c + 1))
        test_idx.update(shuffled[: split_test_size(len(idx), spec.test_fraction)])
    train = [i for i in range(len(ds)) if i not in test_idx]
    test = [i for i in range(len(ds)) if i in test_idx]
    return ds.subset(train), ds.subset(test)


def with_tokens(ds: Dataset, fn) -> Dataset:
    """Copy of ``ds`` with every record's tokens passed through ``fn``."""
    return Dataset(tuple(replace(r, tokens=tuple(fn(list(r.tokens)))) for r in ds.records), ds.class_count)
