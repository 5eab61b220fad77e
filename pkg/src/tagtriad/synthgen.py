"""Synthetic, imbalanced ten-category corpus of short Turkish service-request sentences.

Sentences are built from slot templates (``data/synth_templates.txt``) filled
from word pools (``data/synth_lexicon.txt``). The ``overlap`` ratio controls
how often a slot is filled from the pool shared by all classes instead of the
class's own pool, which is what makes the task non-trivial.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path

import numpy as np

from .corpus import Dataset, LabeledSentence, normalize
from .nncore import derive_rng

SLOTS = ("key", "obj", "verb", "ctx", "fill", "alt")
SHARED = "*"
MIN_LEN, MAX_LEN = 2, 25
# largest class ~8x the smallest
DEFAULT_WEIGHTS = (16.0, 10.0, 12.0, 7.0, 5.0, 3.0, 8.0, 6.0, 2.0, 9.0)


class GeneratorError(ValueError):
    pass


@dataclass(frozen=True)
class Lexicon:
    pools: dict  # (slot, pool) -> tuple of phrases (each a tuple of words)
    templates: dict  # pool -> tuple of templates (each a tuple of slot names)

    @property
    def class_ids(self) -> list[int]:
        return sorted({int(p) for (_, p) in self.pools if p != SHARED})

    def class_words(self, c: int) -> set[str]:
        return {w for (slot, p), phrases in self.pools.items() if p == str(c) for ph in phrases for w in ph}


def _read_data(name: str, path=None) -> str:
    if path is not None:
        return Path(path).read_text(encoding="utf-8")
    return resources.files("tagtriad.data").joinpath(name).read_text(encoding="utf-8")


def load_lexicon(lexicon_path=None, templates_path=None) -> Lexicon:
    pools = {}
    for n, line in enumerate(_read_data("synth_lexicon.txt", lexicon_path).splitlines(), 1):
        if not line.strip() or line.lstrip().startswith("#"):
            continue
        parts = line.split("\t")
        if len(parts) != 3 or parts[0] not in SLOTS:
            raise GeneratorError(f"lexicon line {n}: expected '<slot>\\t<pool>\\t<entries>'")
        phrases = tuple(tuple(e.split()) for e in parts[2].split("|") if e.strip())
        pools[(parts[0], parts[1].strip())] = phrases
    templates = {}
    for n, line in enumerate(_read_data("synth_templates.txt", templates_path).splitlines(), 1):
        if not line.strip() or line.lstrip().startswith("#"):
            continue
        pool, _, body = line.partition("\t")
        slots = tuple(tok.strip("{}") for tok in body.split())
        if not slots or any(s not in SLOTS for s in slots) or "key" not in slots:
            raise GeneratorError(f"template line {n}: slots must come from {SLOTS} and include {{key}}")
        templates.setdefault(pool.strip(), []).append(slots)
    return Lexicon(pools, {k: tuple(v) for k, v in templates.items()})


@dataclass(frozen=True)
class GeneratorConfig:
    class_count: int = 10
    total_size: int = 3000
    weights: tuple = DEFAULT_WEIGHTS
    overlap: float = 0.4
    noise: float = 0.05
    seed: int = 42
    zipf: float = 1.0
    lexicon: Lexicon | None = field(default=None, compare=False)

    def __post_init__(self):
        if not 0.0 <= self.overlap <= 1.0:
            raise GeneratorError(f"overlap must lie in [0, 1], got {self.overlap}")
        if not 0.0 <= self.noise <= 1.0:
            raise GeneratorError(f"noise must lie in [0, 1], got {self.noise}")
        if len(self.weights) != self.class_count or any(w <= 0 for w in self.weights):
            raise GeneratorError("need one positive weight per class")
        if self.total_size < 1:
            raise GeneratorError("total_size must be positive")


def _zipf_pick(rng, phrases, s: float):
    w = 1.0 / np.arange(1, len(phrases) + 1) ** s
    return phrases[int(rng.choice(len(phrases), p=w / w.sum()))]


_TYPO_ALPHABET = "abcçdefgğhıijklmnoöprsştuüvyz"


def _typo(word: str, rng) -> str:
    if len(word) < 3:
        return word
    i = int(rng.integers(0, len(word) - 1))
    kind = int(rng.integers(0, 3))
    if kind == 0:  # swap neighbours
        return word[:i] + word[i + 1] + word[i] + word[i + 2:]
    if kind == 1:  # drop a letter
        return word[:i] + word[i + 1:]
    return word[:i] + _TYPO_ALPHABET[int(rng.integers(0, len(_TYPO_ALPHABET)))] + word[i + 1:]


def _turkish_capitalize(text: str) -> str:
    head = {"i": "İ", "ı": "I"}.get(text[:1], text[:1].upper())
    return head + text[1:]


def _distractor(label: int, cfg: GeneratorConfig, lex: Lexicon, rng) -> list[str]:
    """Another class's key, object and verb followed by a contrast connector."""
    other = int(rng.integers(0, cfg.class_count - 1))
    other = str(other + (other >= label))
    words = list(_zipf_pick(rng, lex.pools[("key", other)], cfg.zipf))
    for slot in ("obj", "verb"):
        if lex.pools.get((slot, other)):
            words.extend(_zipf_pick(rng, lex.pools[(slot, other)], cfg.zipf))
    words.extend(_zipf_pick(rng, lex.pools[("alt", SHARED)], cfg.zipf))
    return words


def _sentence(label: int, cfg: GeneratorConfig, lex: Lexicon, rng) -> str:
    c = str(label)
    templates = lex.templates.get(SHARED, ()) + lex.templates.get(c, ())
    slots = templates[int(rng.integers(0, len(templates)))]
    words = []
    for slot in slots:
        shared = (slot, SHARED) in lex.pools and rng.random() < cfg.overlap
        if slot in ("fill", "alt") and not shared:
            continue
        if slot == "alt":
            words.extend(_distractor(label, cfg, lex, rng))
            continue
        if slot == "key" or not shared:
            pool = lex.pools.get((slot, c))
            if not pool:
                continue
        else:
            pool = lex.pools[(slot, SHARED)]
        words.extend(_zipf_pick(rng, pool, cfg.zipf))
    if cfg.noise > 0:
        noisy, dropped = [], 0
        for w in words:
            r = rng.random()
            if r < cfg.noise / 2 and len(words) - dropped > MIN_LEN:
                dropped += 1
                continue
            noisy.append(_typo(w, rng) if r < cfg.noise else w)
        words = noisy
    words = words[:MAX_LEN]
    text = " ".join(words)
    if cfg.noise > 0:
        if rng.random() < cfg.noise:
            text = _turkish_capitalize(text)
        if rng.random() < cfg.noise:
            text += ("?", "!", "...", ".")[int(rng.integers(0, 4))]
    return text


def sample_labels(cfg: GeneratorConfig, rng) -> np.ndarray:
    w = np.asarray(cfg.weights, dtype=np.float64)
    return rng.choice(cfg.class_count, size=cfg.total_size, p=w / w.sum())


def generate_corpus(cfg: GeneratorConfig = GeneratorConfig()) -> Dataset:
    """Deterministic (per seed) labeled corpus drawn according to ``cfg``."""
    lex = cfg.lexicon or load_lexicon()
    if cfg.class_count > len(lex.class_ids):
        raise GeneratorError(f"lexicon defines {len(lex.class_ids)} classes, {cfg.class_count} requested")
    for c in range(cfg.class_count):
        if not lex.pools.get(("key", str(c))):
            raise GeneratorError(f"class {c} has no key words")
    labels = sample_labels(cfg, derive_rng(cfg.seed, "synth-labels"))
    records = []
    for i, y in enumerate(labels):
        text = _sentence(int(y), cfg, lex, derive_rng(cfg.seed, "synth-sentence", i))
        records.append(LabeledSentence(f"s{i:06d}", text, int(y), tuple(normalize(text))))
    return Dataset(tuple(records), cfg.class_count)


def generate_unlabeled(cfg: GeneratorConfig) -> list[str]:
    """Sentences only, for masked-LM pretraining."""
    return [r.text for r in generate_corpus(cfg).records]
