"""End-to-end training and inference for the three pipelines, plus on-disk artifacts.

An artifact directory holds ``checkpoint.json``, ``vocab.json``,
``config.txt`` and, after training, ``metrics_summary.csv``, learning curves and
report files.
"""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from . import config as C
from . import nncore as nn
from .corpus import Dataset, SplitSpec, load_dataset, load_stopwords, normalize, remove_stopwords, stratified_split
from .doc2vec import (Doc2VecConfig, Doc2VecError, Doc2VecModel, MNLRConfig, MNLRModel, infer_vector, predict_mnlr,
                      train_doc2vec, train_mnlr)
from .lstm import LSTMClassifier, LSTMConfig, train_lstm
from .metrics import evaluate, render_report, summary_row, write_metrics_summary
from .synthgen import GeneratorConfig, generate_corpus, generate_unlabeled
from .transformer import EncoderConfig, TransformerClassifier, finetune, pretrain_mlm
from .vocab import ENCODER_SPECIALS, Vocabulary, build_vocab, encode_batch

CHECKPOINT = "checkpoint.json"
PRETRAINED = "pretrained.json"
VOCAB = "vocab.json"


class PipelineError(RuntimeError):
    pass


class VocabMismatch(PipelineError):
    pass


# -- models behind one interface -------------------------------------------------
@dataclass
class Doc2VecPipeline:
    d2v: Doc2VecModel
    mnlr: MNLRModel
    stopwords: frozenset | None
    seed: int = 0
    empty_docs: int = 0
    kind: str = "doc2vec_mnlr"

    @property
    def vocab(self) -> Vocabulary:
        return self.d2v.vocab

    def features(self, token_lists) -> np.ndarray:
        rows, empty = [], 0
        for toks in token_lists:
            toks = remove_stopwords(toks, self.stopwords) if self.stopwords else list(toks)
            try:
                rows.append(infer_vector(self.d2v, toks, seed=self.seed))
            except Doc2VecError:
                # nothing left to anchor on: zero vector, counted
                rows.append(np.zeros(self.d2v.config.dim))
                empty += 1
        self.empty_docs = empty
        return np.array(rows).reshape(len(rows), self.d2v.config.dim)

    def predict_proba(self, token_lists) -> np.ndarray:
        return predict_mnlr(self.mnlr, self.features(token_lists))

    def tensors(self) -> dict:
        return {"doc_vectors": self.d2v.doc_vectors, "word_in_vectors": self.d2v.word_in_vectors,
                "word_out_vectors": self.d2v.word_out_vectors, "mnlr.W": self.mnlr.W, "mnlr.b": self.mnlr.b}

    def config(self) -> dict:
        return {"doc2vec": asdict(self.d2v.config), "mnlr_l2": self.mnlr.l2, "seed": self.seed,
                "stopwords": self.stopwords is not None}


@dataclass
class LSTMPipeline:
    model: LSTMClassifier
    vocab: Vocabulary
    kind: str = "lstm"

    def predict_proba(self, token_lists) -> np.ndarray:
        ids, lengths = encode_batch(token_lists, self.vocab, self.model.cfg.max_len)
        return self.model.predict_proba(ids, lengths)

    def tensors(self) -> dict:
        return self.model.state()

    def config(self) -> dict:
        return asdict(self.model.cfg)


@dataclass
class BertPipeline:
    model: TransformerClassifier
    vocab: Vocabulary
    kind: str = "bert_finetuned"

    def predict_proba(self, token_lists) -> np.ndarray:
        ids, lengths = encode_batch(token_lists, self.vocab, self.model.cfg.max_len, add_cls_sep=True)
        return self.model.predict_proba(ids, lengths)

    def tensors(self) -> dict:
        return self.model.state()

    def config(self) -> dict:
        return asdict(self.model.cfg)


def save_model(m, out_dir, name: str = CHECKPOINT) -> Path:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    m.vocab.save(out / VOCAB)
    meta = {"vocab": m.vocab.to_json()}
    if isinstance(m, BertPipeline):
        meta["provenance"] = m.model.provenance
        meta["pretrain_curve"] = m.model.pretrain_curve
    if isinstance(m, Doc2VecPipeline):
        meta["stopwords"] = sorted(m.stopwords) if m.stopwords else None
        meta["skipped_docs"] = m.d2v.skipped_docs
    return nn.save_checkpoint(out / name, m.kind, m.tensors(), m.config(), m.vocab.hash, meta)


def load_model(path, vocab_path=None):
    """Load a trained pipeline from a checkpoint file or an artifact directory.

    If ``vocab_path`` is given, its hash must equal the checkpoint's.
    """
    path = Path(path)
    if path.is_dir():
        path = path / CHECKPOINT
    ck = nn.load_checkpoint(path, expect_kind=("lstm", "doc2vec_mnlr", "bert_finetuned", "bert_pretrained"))
    vocab = Vocabulary.from_json(ck["meta"]["vocab"])
    if vocab.hash != ck["vocab_hash"]:
        raise VocabMismatch(f"{path}: embedded vocabulary does not match its recorded hash")
    if vocab_path is not None:
        other = Vocabulary.load(vocab_path)
        if other.hash != ck["vocab_hash"]:
            raise VocabMismatch(f"vocabulary hash mismatch: {vocab_path} has {other.hash[:12]}, "
                                f"checkpoint {path} was built with {ck['vocab_hash'][:12]}; "
                                "retrain or pass the matching vocab.json")
    t, cfg = ck["tensors"], ck["config"]
    if ck["kind"] == "lstm":
        return LSTMPipeline(LSTMClassifier(LSTMConfig(**cfg), vocab.hash, t), vocab)
    if ck["kind"].startswith("bert"):
        model = TransformerClassifier(EncoderConfig(**cfg), vocab.hash, t, ck["meta"].get("provenance"))
        model.pretrain_curve = list(ck["meta"].get("pretrain_curve", []))
        return BertPipeline(model, vocab, ck["kind"])
    d2v_cfg = Doc2VecConfig(**cfg["doc2vec"])
    d2v = Doc2VecModel(vocab, t["doc_vectors"], t["word_in_vectors"], t["word_out_vectors"], d2v_cfg,
                       ck["meta"].get("skipped_docs", []))
    mnlr = MNLRModel(t["mnlr.W"], t["mnlr.b"], cfg["mnlr_l2"])
    sw = ck["meta"].get("stopwords")
    return Doc2VecPipeline(d2v, mnlr, frozenset(sw) if sw is not None else None, cfg["seed"])


# -- data ------------------------------------------------------------------------
def synth_config(cfg: dict, **over) -> GeneratorConfig:
    kw = dict(class_count=cfg["class_count"], total_size=cfg["synth.size"], overlap=cfg["synth.overlap"],
              noise=cfg["synth.noise"], seed=cfg["synth.seed"])
    kw.update(over)
    if kw["class_count"] != 10:
        from .synthgen import DEFAULT_WEIGHTS
        kw["weights"] = tuple(DEFAULT_WEIGHTS[i % len(DEFAULT_WEIGHTS)] for i in range(kw["class_count"]))
    return GeneratorConfig(**kw)


def load_splits(cfg: dict) -> tuple[Dataset, Dataset]:
    """Train/test datasets from explicit files, a single file to split, or the synthetic generator."""
    k = cfg["class_count"]
    if cfg["train"] or cfg["test"]:
        if not (cfg["train"] and cfg["test"]):
            raise PipelineError("give both train and test paths, or neither")
        return load_dataset(cfg["train"], class_count=k), load_dataset(cfg["test"], class_count=k)
    ds = load_dataset(cfg["data"], class_count=k) if cfg["data"] else generate_corpus(synth_config(cfg))
    return stratified_split(ds, SplitSpec(cfg["test_fraction"], cfg["seed"]))


def carve_validation(train: Dataset, cfg: dict) -> tuple[Dataset, Dataset]:
    return stratified_split(train, SplitSpec(cfg["valid_fraction"], cfg["seed"] + 1))


def pretraining_corpus(cfg: dict) -> list[list[str]]:
    if cfg["bert.pretrain_corpus"]:
        path = Path(cfg["bert.pretrain_corpus"])
        if not path.is_file():
            raise PipelineError(f"pretraining corpus not found: {path}")
        lines = path.read_text(encoding="utf-8").splitlines()
        return [t for t in (normalize(s) for s in lines) if t]
    texts = generate_unlabeled(synth_config(cfg, total_size=cfg["bert.pretrain_size"], seed=cfg["bert.pretrain_seed"]))
    return [t for t in (normalize(s) for s in texts) if t]


# -- training --------------------------------------------------------------------
@dataclass
class TrainResult:
    model: object
    curves: object = None
    notes: dict = field(default_factory=dict)


def encoder_config(cfg: dict, vocab_size: int) -> EncoderConfig:
    keys = ("layers", "d_model", "heads", "d_ff", "max_positions", "max_len", "dropout", "mask_rate", "batch_size",
            "pretrain_epochs", "pretrain_lr", "warmup_frac", "finetune_epochs", "finetune_lr")
    b = C.section(cfg, "bert")
    return EncoderConfig(vocab_size=vocab_size, class_count=cfg["class_count"], seed=cfg["seed"],
                         **{k: b[k] for k in keys})


def pretrain(cfg: dict, train: Dataset | None = None, log=None) -> BertPipeline:
    corpus = pretraining_corpus(cfg)
    extra = train.token_lists if train is not None else []
    vocab = build_vocab(corpus + extra, specials=ENCODER_SPECIALS)
    model = pretrain_mlm(corpus, vocab, encoder_config(cfg, len(vocab)), log=log)
    return BertPipeline(model, vocab, "bert_pretrained")


def train_pipeline(cfg: dict, train: Dataset, log=None) -> TrainResult:
    pipeline, seed = cfg["pipeline"], cfg["seed"]
    fit, valid = carve_validation(train, cfg)
    if pipeline == "doc2vec_mnlr":
        d = C.section(cfg, "doc2vec")
        sw = load_stopwords() if d.pop("stopwords") else None
        docs = [remove_stopwords(t, sw) if sw else t for t in train.token_lists]
        d2v = train_doc2vec(docs, Doc2VecConfig(seed=seed, **d))
        m = Doc2VecPipeline(d2v, None, sw, seed)
        X = m.features(train.token_lists)
        m.mnlr = train_mnlr(X, train.labels, cfg["class_count"], MNLRConfig(seed=seed, **C.section(cfg, "mnlr")))
        return TrainResult(m, None, {"empty_docs": m.empty_docs})
    if pipeline == "lstm":
        vocab = build_vocab(fit.token_lists)
        lcfg = LSTMConfig(vocab_size=len(vocab), class_count=cfg["class_count"], seed=seed, **C.section(cfg, "lstm"))
        model, curves = train_lstm(LSTMClassifier(lcfg, vocab.hash), fit, valid, vocab)
        return TrainResult(LSTMPipeline(model, vocab), curves)
    if pipeline == "bert":
        if cfg["bert.pretrained"]:
            pre = load_model(cfg["bert.pretrained"])
            if not isinstance(pre, BertPipeline):
                raise PipelineError(f"{cfg['bert.pretrained']} is not an encoder checkpoint")
        else:
            pre = pretrain(cfg, fit, log)
        ecfg = encoder_config(cfg, len(pre.vocab))
        if pre.model.cfg.vocab_size != ecfg.vocab_size:
            raise PipelineError("pretrained checkpoint vocabulary size differs from the configuration")
        model, curves = finetune(pre.model, fit, valid, pre.vocab, ecfg, log=log)
        return TrainResult(BertPipeline(model, pre.vocab), curves, {"pretrained": pre})
    raise C.ConfigError(f"unknown pipeline {pipeline!r}")


def evaluate_model(m, ds: Dataset, split: str):
    probs = m.predict_proba(ds.token_lists)
    return evaluate(ds.labels, probs.argmax(axis=1).tolist(), ds.class_count, split)


def run_training(cfg: dict, log=None) -> dict:
    """Train one pipeline and write every artifact; returns the summary row."""
    out = Path(cfg["out"])
    C.write_config(cfg, out)
    train, test = load_splits(cfg)
    res = train_pipeline(cfg, train, log)
    save_model(res.model, out)
    if "pretrained" in res.notes and not cfg["bert.pretrained"]:
        save_model(res.notes["pretrained"], out, PRETRAINED)
    if res.curves is not None:
        res.curves.to_csv(out / "curves.csv")
    r_train, r_test = evaluate_model(res.model, train, "train"), evaluate_model(res.model, test, "test")
    for r in (r_train, r_test):
        render_report(r, out, cfg["pipeline"])
    row = summary_row(cfg["pipeline"], r_train, r_test)
    write_metrics_summary([row], out / "metrics_summary.csv")
    return row


def tag_lines(m, sentences) -> list[str]:
    """``sentence<TAB>label<TAB>confidence`` per input sentence (confidence = max probability)."""
    sentences = [s.rstrip("\r\n") for s in sentences]
    keep = [s for s in sentences if s.strip()]
    if not keep:
        return []
    probs = m.predict_proba([normalize(s) for s in keep])
    return [f"{s}\t{int(p.argmax())}\t{float(p.max()):.4f}" for s, p in zip(keep, probs)]


def describe(m) -> str:
    return json.dumps({"kind": m.kind, "vocab_size": len(m.vocab), "vocab_hash": m.vocab.hash}, sort_keys=True)
