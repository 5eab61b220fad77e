"""Small BERT-style encoder: masked-LM pretraining, then classification fine-tuning.

Post-layer-norm blocks with learned position embeddings. The masked-LM decoder
shares its weights with the token embedding table. The classifier reads the
final hidden state at the leading CLS position.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass, replace

import numpy as np

from . import nncore as nn
from .lstm import LearningCurves, TrainingError, loss_and_accuracy
from .vocab import CLS_ID, MASK_ID, PAD_ID, SEP_ID, EncodedSequence, Vocabulary, encode_batch


class EncoderError(ValueError):
    pass


@dataclass(frozen=True)
class EncoderConfig:
    vocab_size: int
    layers: int = 4
    d_model: int = 128
    heads: int = 4
    d_ff: int = 512
    max_positions: int = 64
    max_len: int = 32
    class_count: int = 10
    dropout: float = 0.1
    mask_rate: float = 0.15
    batch_size: int = 32
    pretrain_epochs: int = 4
    pretrain_lr: float = 5e-4
    warmup_frac: float = 0.05
    finetune_epochs: int = 3
    finetune_lr: float = 5e-5
    ln_eps: float = 1e-5
    seed: int = 0

    def __post_init__(self):
        for name in ("vocab_size", "layers", "d_model", "heads", "d_ff", "max_positions", "max_len", "class_count"):
            if getattr(self, name) <= 0:
                raise EncoderError(f"{name} must be positive")
        if self.d_model % self.heads:
            raise EncoderError(f"d_model {self.d_model} is not divisible by heads {self.heads}")
        if self.max_len > self.max_positions:
            raise EncoderError(f"max_len {self.max_len} exceeds max_positions {self.max_positions}")
        if not 0.0 <= self.dropout < 1.0:
            raise EncoderError(f"dropout must lie in [0, 1), got {self.dropout}")


def _layer_names(l: int):
    return [f"layer{l}.{n}" for n in ("Wqkv", "bqkv", "Wo", "bo", "ln1_g", "ln1_b", "W1", "b1", "W2", "b2",
                                       "ln2_g", "ln2_b")]


def init_encoder_params(cfg: EncoderConfig, seed: int) -> dict:
    rng = nn.derive_rng(seed, "encoder-init")
    d, dt = cfg.d_model, nn.get_default_dtype()
    std = 0.02
    p = {
        "tok_emb": nn.init_normal(rng, (cfg.vocab_size, d), std),
        "pos_emb": nn.init_normal(rng, (cfg.max_positions, d), std),
        "emb_ln_g": np.ones(d, dtype=dt),
        "emb_ln_b": np.zeros(d, dtype=dt),
    }
    for l in range(cfg.layers):
        pre = f"layer{l}."
        p[pre + "Wqkv"] = nn.init_normal(rng, (d, 3 * d), std)
        p[pre + "bqkv"] = np.zeros(3 * d, dtype=dt)
        p[pre + "Wo"] = nn.init_normal(rng, (d, d), std)
        p[pre + "bo"] = np.zeros(d, dtype=dt)
        p[pre + "ln1_g"] = np.ones(d, dtype=dt)
        p[pre + "ln1_b"] = np.zeros(d, dtype=dt)
        p[pre + "W1"] = nn.init_normal(rng, (d, cfg.d_ff), std)
        p[pre + "b1"] = np.zeros(cfg.d_ff, dtype=dt)
        p[pre + "W2"] = nn.init_normal(rng, (cfg.d_ff, d), std)
        p[pre + "b2"] = np.zeros(d, dtype=dt)
        p[pre + "ln2_g"] = np.ones(d, dtype=dt)
        p[pre + "ln2_b"] = np.zeros(d, dtype=dt)
    p["mlm.W"] = nn.init_normal(rng, (d, d), std)
    p["mlm.b"] = np.zeros(d, dtype=dt)
    p["mlm.ln_g"] = np.ones(d, dtype=dt)
    p["mlm.ln_b"] = np.zeros(d, dtype=dt)
    p["mlm.bias"] = np.zeros(cfg.vocab_size, dtype=dt)
    return p


def init_classifier_head(cfg: EncoderConfig, seed: int) -> dict:
    rng = nn.derive_rng(seed, "classifier-init")
    return {"cls.W": nn.init_normal(rng, (cfg.d_model, cfg.class_count), 0.02),
            "cls.b": np.zeros(cfg.class_count, dtype=nn.get_default_dtype())}


def attention_block(x: nn.Tensor, keep, p: dict, prefix: str, heads: int, dropout: float = 0.0,
                    rng=None, train: bool = False, eps: float = 1e-5, probs_out: list | None = None) -> nn.Tensor:
    """One encoder layer: masked multi-head self-attention then GELU feed-forward.

    ``x`` is [B, T, d]; ``keep`` is a boolean [B, T] array, False at PAD
    positions. Each sub-layer is followed by residual addition and layer norm.
    """
    bsz, t, d = x.shape
    if p[prefix + "Wqkv"].shape != (d, 3 * d) or d % heads:
        raise nn.ShapeError(f"attention_block: input width {d} does not fit {prefix}Wqkv {p[prefix + 'Wqkv'].shape}")
    keep = np.asarray(keep, dtype=bool)
    if keep.shape != (bsz, t):
        raise nn.ShapeError(f"attention_block: mask shape {keep.shape} != {(bsz, t)}")
    dk = d // heads
    qkv = x @ p[prefix + "Wqkv"] + p[prefix + "bqkv"]

    def split(i):
        part = nn.slice_(qkv, -1, i * d, (i + 1) * d)
        return nn.transpose(part.reshape(bsz, t, heads, dk), (0, 2, 1, 3))

    q, k, v = split(0), split(1), split(2)
    scores = (q @ nn.swapaxes(k, -1, -2)) * (1.0 / math.sqrt(dk))
    probs = nn.softmax(scores, axis=-1, mask=keep[:, None, None, :])
    if probs_out is not None:
        probs_out.append(probs.data)
    probs = nn.dropout(probs, dropout, rng, train)
    ctx = nn.transpose(probs @ v, (0, 2, 1, 3)).reshape(bsz, t, d)
    attn = nn.dropout(ctx @ p[prefix + "Wo"] + p[prefix + "bo"], dropout, rng, train)
    x = nn.layer_norm(x + attn, p[prefix + "ln1_g"], p[prefix + "ln1_b"], eps)
    ff = nn.gelu(x @ p[prefix + "W1"] + p[prefix + "b1"]) @ p[prefix + "W2"] + p[prefix + "b2"]
    ff = nn.dropout(ff, dropout, rng, train)
    return nn.layer_norm(x + ff, p[prefix + "ln2_g"], p[prefix + "ln2_b"], eps)


class TransformerClassifier:
    """Encoder weights plus optional masked-LM and classification heads."""

    def __init__(self, cfg: EncoderConfig, vocab_hash: str = "", params: dict | None = None,
                 provenance: dict | None = None):
        self.cfg = cfg
        self.vocab_hash = vocab_hash
        if params is None:
            params = init_encoder_params(cfg, cfg.seed)
        self.params = {k: v if isinstance(v, nn.Tensor) else nn.parameter(np.array(v), k) for k, v in params.items()}
        self.provenance = dict(provenance or {"pretrained_from": None, "finetuned": False})
        self.pretrain_curve: list = []

    @property
    def finetuned(self) -> bool:
        return bool(self.provenance.get("finetuned")) and "cls.W" in self.params

    def copy(self) -> "TransformerClassifier":
        m = TransformerClassifier(self.cfg, self.vocab_hash, {k: p.data.copy() for k, p in self.params.items()},
                                  self.provenance)
        m.pretrain_curve = list(self.pretrain_curve)
        return m

    def state(self) -> dict:
        return {k: p.data for k, p in self.params.items()}

    def encoder_params(self) -> dict:
        return {k: p for k, p in self.params.items() if not k.startswith(("mlm.", "cls."))}

    # -- forward ------------------------------------------------------------
    def encode(self, ids, lengths, train: bool = False, rng=None, probs_out=None) -> nn.Tensor:
        ids = np.asarray(ids, dtype=np.int64)
        lengths = np.asarray(lengths, dtype=np.int64)
        if ids.size and ids.max() >= self.cfg.vocab_size:
            raise IndexError(f"token id {int(ids.max())} >= vocabulary size {self.cfg.vocab_size}")
        t = ids.shape[1]
        p, c = self.params, self.cfg
        keep = np.arange(t)[None, :] < lengths[:, None]
        x = nn.embedding(p["tok_emb"], ids) + nn.slice_(p["pos_emb"], 0, 0, t)
        x = nn.layer_norm(x, p["emb_ln_g"], p["emb_ln_b"], c.ln_eps)
        x = nn.dropout(x, c.dropout, rng, train)
        for l in range(c.layers):
            x = attention_block(x, keep, p, f"layer{l}.", c.heads, c.dropout, rng, train, c.ln_eps, probs_out)
        return x

    def cls_logits(self, ids, lengths, train: bool = False, rng=None) -> nn.Tensor:
        """Logits [B, K] from the CLS position. Sequences are trimmed to the longest true length."""
        if "cls.W" not in self.params:
            raise EncoderError("model has no classifier head; fine-tune it first")
        lengths = np.asarray(lengths, dtype=np.int64)
        ids = np.asarray(ids, dtype=np.int64)[:, : max(1, int(lengths.max()))]
        h = self.encode(ids, lengths, train, rng)
        cls = nn.slice_(h, 1, 0, 1)  # [B, 1, d]
        cls = nn.dropout(cls, self.cfg.dropout, rng, train)
        # batched [1, d] x [d, K] products keep each row's arithmetic independent of batch size
        return (cls @ self.params["cls.W"]).reshape(len(lengths), self.cfg.class_count) + self.params["cls.b"]

    def mlm_logits(self, hidden_rows: nn.Tensor) -> nn.Tensor:
        p = self.params
        h = nn.gelu(hidden_rows @ p["mlm.W"] + p["mlm.b"])
        h = nn.layer_norm(h, p["mlm.ln_g"], p["mlm.ln_b"], self.cfg.ln_eps)
        return h @ p["tok_emb"].T + p["mlm.bias"]

    def predict_proba(self, ids, lengths, batch_size: int = 128) -> np.ndarray:
        """Eval-mode class probabilities; sentences are grouped by true length, so no padding is processed."""
        if not self.finetuned:
            raise EncoderError("prediction needs a fine-tuned checkpoint")
        ids = np.asarray(ids, dtype=np.int64)
        lengths = np.asarray(lengths, dtype=np.int64)
        out = np.zeros((len(lengths), self.cfg.class_count), dtype=self.params["cls.W"].data.dtype)
        with nn.no_grad():
            for n in np.unique(lengths):
                rows = np.flatnonzero(lengths == n)
                for lo in range(0, len(rows), batch_size):
                    r = rows[lo:lo + batch_size]
                    out[r] = nn.softmax_np(self.cls_logits(ids[r], lengths[r]).data)
        return out


def predict_bert(model: TransformerClassifier, seq: EncodedSequence) -> np.ndarray:
    return model.predict_proba(np.array([seq.ids]), np.array([seq.true_length]))[0]


# -- masked language modelling ---------------------------------------------------
def _round_half_up(x: float) -> int:
    return int(math.floor(x + 0.5))


def mlm_mask(seq: EncodedSequence, rate: float, seed, vocab_size: int, first_word_id: int = 5):
    """Pick round(rate * content length) positions (at least one) and corrupt them 80/10/10.

    Returns (corrupted ids, target positions, target ids). CLS, SEP and PAD
    are never selected.
    """
    rng = seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)
    ids = np.array(seq.ids, dtype=np.int64)
    maskable = np.array([i for i in range(seq.true_length) if ids[i] not in (CLS_ID, SEP_ID, PAD_ID)], dtype=np.int64)
    if maskable.size == 0:
        raise EncoderError("no maskable positions in sequence")
    n = min(maskable.size, max(1, _round_half_up(rate * maskable.size)))
    positions = np.sort(rng.choice(maskable, size=n, replace=False))
    targets = ids[positions].copy()
    corrupted = ids.copy()
    u = rng.random(n)
    random_ids = rng.integers(first_word_id, vocab_size, size=n)
    corrupted[positions] = np.where(u < 0.8, MASK_ID, np.where(u < 0.9, random_ids, targets))
    return corrupted, positions, targets


def _lr_at(step: int, total: int, base: float, warmup_frac: float) -> float:
    warm = int(total * warmup_frac)
    if warm and step < warm:
        return base * (step + 1) / warm
    return base * max(0.0, (total - step) / max(1, total - warm))


def mlm_batch(model: TransformerClassifier, ids, lengths, seed: int, tag_step: int):
    """Corrupt a batch and return (corrupted ids, flat positions, targets)."""
    cfg = model.cfg
    corrupted = np.array(ids, copy=True)
    flat, targets = [], []
    t = ids.shape[1]
    for j in range(len(ids)):
        seq = EncodedSequence(tuple(int(x) for x in ids[j]), int(lengths[j]))
        rng = nn.derive_rng(seed, "mlm-mask", tag_step * 100003 + j)
        corrupted[j], pos, tgt = mlm_mask(seq, cfg.mask_rate, rng, cfg.vocab_size)
        flat.extend(j * t + pos)
        targets.extend(tgt)
    return corrupted, np.array(flat, dtype=np.int64), np.array(targets, dtype=np.int64)


def mlm_loss(model: TransformerClassifier, corrupted, lengths, flat_pos, targets, train=False, rng=None) -> nn.Tensor:
    h = model.encode(corrupted, lengths, train, rng)
    b, t, d = h.shape
    rows = nn.getitem(h.reshape(b * t, d), flat_pos)
    return nn.cross_entropy(model.mlm_logits(rows), targets)


def pretrain_mlm(token_lists, vocab: Vocabulary, cfg: EncoderConfig, log=None) -> TransformerClassifier:
    """Masked-LM pretraining on unlabeled sentences; labels never enter this function."""
    token_lists = [list(t) for t in token_lists if len(t)]
    if not token_lists:
        raise EncoderError("pretraining corpus is empty")
    if cfg.vocab_size != len(vocab):
        raise EncoderError(f"config vocab_size {cfg.vocab_size} != vocabulary size {len(vocab)}")
    model = TransformerClassifier(cfg, vocab.hash)
    ids, lengths = encode_batch(token_lists, vocab, cfg.max_len, add_cls_sep=True)
    opt = nn.Adam(model.encoder_params() | {k: v for k, v in model.params.items() if k.startswith("mlm.")},
                  lr=cfg.pretrain_lr)
    n_batches = math.ceil(len(ids) / cfg.batch_size)
    total = cfg.pretrain_epochs * n_batches
    step = 0
    for epoch in range(cfg.pretrain_epochs):
        order = nn.derive_rng(cfg.seed, "mlm-shuffle", epoch).permutation(len(ids))
        losses = []
        for bi in range(n_batches):
            idx = order[bi * cfg.batch_size:(bi + 1) * cfg.batch_size]
            tl = max(1, int(lengths[idx].max()))
            corrupted, flat, targets = mlm_batch(model, ids[idx, :tl], lengths[idx], cfg.seed, step)
            opt.lr = _lr_at(step, total, cfg.pretrain_lr, cfg.warmup_frac)
            opt.zero_grad()
            loss = mlm_loss(model, corrupted, lengths[idx], flat, targets, True,
                            nn.derive_rng(cfg.seed, "mlm-dropout", step))
            if not np.isfinite(loss.data):
                raise TrainingError(f"non-finite MLM loss at epoch {epoch + 1}, batch {bi}")
            loss.backward()
            opt.step()
            losses.append(float(loss.data))
            step += 1
        model.pretrain_curve.append(float(np.mean(losses)))
        if log:
            log(f"mlm epoch {epoch + 1}: loss {model.pretrain_curve[-1]:.4f}")
    model.provenance = {"pretrained_from": f"mlm:{len(token_lists)} sentences", "finetuned": False}
    return model


# -- fine-tuning ---------------------------------------------------------------
def finetune(model: TransformerClassifier, train, valid, vocab: Vocabulary, cfg: EncoderConfig | None = None,
             freeze_encoder: bool = False, log=None):
    """Add a CLS classifier head and train end to end; returns (best-validation snapshot, curves)."""
    cfg = cfg or model.cfg
    if vocab.hash != model.vocab_hash:
        raise TrainingError("vocabulary hash does not match the checkpoint")
    if train.class_count != cfg.class_count or valid.class_count != cfg.class_count:
        raise EncoderError(f"class count mismatch: model has {cfg.class_count}, data has {train.class_count}")
    if len(train) == 0 or len(valid) == 0:
        raise TrainingError("training and validation splits must be non-empty")
    model = model.copy()
    model.cfg = replace(model.cfg, finetune_epochs=cfg.finetune_epochs, finetune_lr=cfg.finetune_lr,
                        seed=cfg.seed, dropout=cfg.dropout, batch_size=cfg.batch_size)
    for k, v in init_classifier_head(cfg, cfg.seed).items():
        model.params[k] = nn.parameter(v, k)
    model.provenance = {"pretrained_from": model.provenance.get("pretrained_from"), "finetuned": True}
    tr_ids, tr_len = encode_batch(train.token_lists, vocab, cfg.max_len, add_cls_sep=True)
    va_ids, va_len = encode_batch(valid.token_lists, vocab, cfg.max_len, add_cls_sep=True)
    tr_y, va_y = np.array(train.labels), np.array(valid.labels)
    trainable = {k: p for k, p in model.params.items() if not k.startswith("mlm.")}
    if freeze_encoder:
        trainable = {k: p for k, p in trainable.items() if k.startswith("cls.")}
    opt = nn.Adam(trainable, lr=cfg.finetune_lr)
    n_batches = math.ceil(len(tr_y) / cfg.batch_size)
    total = cfg.finetune_epochs * n_batches
    curves = LearningCurves()
    best, best_acc = model.copy(), -1.0
    step = 0
    for epoch in range(cfg.finetune_epochs):
        order = nn.derive_rng(cfg.seed, "ft-shuffle", epoch).permutation(len(tr_y))
        for bi in range(n_batches):
            idx = order[bi * cfg.batch_size:(bi + 1) * cfg.batch_size]
            opt.lr = _lr_at(step, total, cfg.finetune_lr, 0.0)
            opt.zero_grad()
            logits = model.cls_logits(tr_ids[idx], tr_len[idx], train=not freeze_encoder,
                                      rng=nn.derive_rng(cfg.seed, "ft-dropout", step))
            loss = nn.cross_entropy(logits, tr_y[idx])
            if not np.isfinite(loss.data):
                raise TrainingError(f"non-finite loss at epoch {epoch + 1}, batch {bi}")
            loss.backward()
            opt.step()
            step += 1
        tl, ta = loss_and_accuracy(model.predict_proba(tr_ids, tr_len), tr_y)
        vl, va = loss_and_accuracy(model.predict_proba(va_ids, va_len), va_y)
        curves.append(tl, ta, vl, va)
        if log:
            log(f"finetune epoch {epoch + 1}: train acc {ta:.4f} valid acc {va:.4f}")
        if va > best_acc:
            best, best_acc = model.copy(), va
    return best, curves


def config_dict(cfg: EncoderConfig) -> dict:
    return asdict(cfg)
