"""Embedding -> dropout -> single-layer LSTM -> linear softmax classifier.

Cell equations (gate blocks stored side by side as i | f | g | o)::

    z  = x W + h U + b
    i  = sigmoid(z_i)    f = sigmoid(z_f)    g = tanh(z_g)    o = sigmoid(z_o)
    c' = f * c + i * g
    h' = o * tanh(c')

Positions at or beyond a sentence's true length are skipped: the state is
carried through unchanged, so padding never influences the logits.
"""

from __future__ import annotations

import csv
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from . import nncore as nn
from .vocab import PAD_ID, Vocabulary, encode, encode_batch


class TrainingError(RuntimeError):
    pass


@dataclass(frozen=True)
class LSTMConfig:
    vocab_size: int
    embed_dim: int = 64
    hidden_dim: int = 64
    class_count: int = 10
    dropout: float = 0.5
    max_len: int = 32
    epochs: int = 10
    batch_size: int = 32
    lr: float = 1e-3
    seed: int = 0

    def __post_init__(self):
        for name in ("vocab_size", "embed_dim", "hidden_dim", "class_count", "max_len", "epochs", "batch_size"):
            if getattr(self, name) <= 0:
                raise ValueError(f"{name} must be positive")
        if not 0.0 <= self.dropout < 1.0:
            raise ValueError(f"dropout must lie in [0, 1), got {self.dropout}")


PAPER_PROFILE = dict(vocab_size=6873, embed_dim=100, hidden_dim=1000, class_count=10, max_len=250, epochs=10)
DESK_PROFILE = dict(embed_dim=64, hidden_dim=64, max_len=32, epochs=10)


def param_count(cfg: LSTMConfig) -> int:
    v, d, h, k = cfg.vocab_size, cfg.embed_dim, cfg.hidden_dim, cfg.class_count
    return v * d + 4 * (d * h + h * h + h) + h * k + k


class LSTMClassifier:
    def __init__(self, cfg: LSTMConfig, vocab_hash: str = "", params: dict | None = None):
        self.cfg = cfg
        self.vocab_hash = vocab_hash
        if params is None:
            params = self._init_params()
        self.params = {k: v if isinstance(v, nn.Tensor) else nn.parameter(np.array(v), k) for k, v in params.items()}

    def _init_params(self):
        c = self.cfg
        rng = nn.derive_rng(c.seed, "lstm-init")
        s = 1.0 / np.sqrt(c.hidden_dim)
        b = np.zeros(4 * c.hidden_dim, dtype=nn.get_default_dtype())
        b[c.hidden_dim:2 * c.hidden_dim] = 1.0  # forget-gate bias
        return {
            "embedding": nn.init_normal(rng, (c.vocab_size, c.embed_dim), 0.1),
            "W": nn.init_uniform(rng, (c.embed_dim, 4 * c.hidden_dim), s),
            "U": nn.init_uniform(rng, (c.hidden_dim, 4 * c.hidden_dim), s),
            "b": b,
            "W_out": nn.init_uniform(rng, (c.hidden_dim, c.class_count), s),
            "b_out": np.zeros(c.class_count, dtype=nn.get_default_dtype()),
        }

    def parameter_count(self) -> int:
        return int(sum(p.size for p in self.params.values()))

    def copy(self) -> "LSTMClassifier":
        return LSTMClassifier(self.cfg, self.vocab_hash, {k: p.data.copy() for k, p in self.params.items()})

    def state(self) -> dict:
        return {k: p.data for k, p in self.params.items()}

    # -- forward ------------------------------------------------------------
    def logits(self, ids, lengths, train: bool = False, rng=None) -> nn.Tensor:
        """Batch forward; ``ids`` is [B, max_len], ``lengths`` the true lengths."""
        ids = np.asarray(ids, dtype=np.int64)
        lengths = np.asarray(lengths, dtype=np.int64)
        if ids.size and ids.max() >= self.cfg.vocab_size:
            raise IndexError(f"token id {int(ids.max())} >= vocabulary size {self.cfg.vocab_size}")
        p = self.params
        bsz = ids.shape[0]
        hdim = self.cfg.hidden_dim
        steps = int(lengths.max()) if lengths.size else 0
        x = nn.embedding(p["embedding"], ids[:, :steps])
        x = nn.dropout(x, self.cfg.dropout, rng, train)
        xw = x @ p["W"] + p["b"]
        h = nn.Tensor(np.zeros((bsz, hdim), dtype=p["W"].data.dtype))
        c = h
        for t in range(steps):
            h_new, c_new = lstm_cell_step_pre(xw[:, t, :], h, c, p["U"], hdim)
            live = (t < lengths)[:, None]
            h = nn.where(live, h_new, h)
            c = nn.where(live, c_new, c)
        return h @ p["W_out"] + p["b_out"]

    def forward(self, seq, train: bool = False, rng=None) -> nn.Tensor:
        """Logits [K] for one EncodedSequence."""
        if len(seq.ids) != self.cfg.max_len:
            raise ValueError(f"sequence length {len(seq.ids)} != max_len {self.cfg.max_len}")
        return self.logits(np.array([seq.ids]), np.array([seq.true_length]), train, rng)[0]

    def predict_proba(self, ids, lengths, batch_size: int = 256) -> np.ndarray:
        out = []
        with nn.no_grad():
            for lo in range(0, len(ids), batch_size):
                out.append(nn.softmax_np(self.logits(ids[lo:lo + batch_size], lengths[lo:lo + batch_size]).data))
        return np.concatenate(out) if out else np.zeros((0, self.cfg.class_count))


def lstm_cell_step_pre(xw: nn.Tensor, h: nn.Tensor, c: nn.Tensor, U: nn.Tensor, hdim: int):
    z = xw + h @ U
    i = nn.sigmoid(nn.slice_(z, -1, 0, hdim))
    f = nn.sigmoid(nn.slice_(z, -1, hdim, 2 * hdim))
    g = nn.tanh(nn.slice_(z, -1, 2 * hdim, 3 * hdim))
    o = nn.sigmoid(nn.slice_(z, -1, 3 * hdim, 4 * hdim))
    c_new = f * c + i * g
    return o * nn.tanh(c_new), c_new


def lstm_cell_step(x, h, c, W, U, b):
    """One LSTM step for input ``x`` and state (h, c); returns (h', c')."""
    x, h, c = nn.as_tensor(x), nn.as_tensor(h), nn.as_tensor(c)
    hdim = U.shape[0]
    if W.shape[1] != 4 * hdim or U.shape != (hdim, 4 * hdim) or x.shape[-1] != W.shape[0] or h.shape[-1] != hdim:
        raise nn.ShapeError(f"lstm_cell_step: x {x.shape}, h {h.shape}, W {W.shape}, U {U.shape}")
    return lstm_cell_step_pre(x @ W + b, h, c, U, hdim)


@dataclass
class LearningCurves:
    train_loss: list = field(default_factory=list)
    train_acc: list = field(default_factory=list)
    valid_loss: list = field(default_factory=list)
    valid_acc: list = field(default_factory=list)

    def append(self, tl, ta, vl, va):
        self.train_loss.append(float(tl))
        self.train_acc.append(float(ta))
        self.valid_loss.append(float(vl))
        self.valid_acc.append(float(va))

    def __len__(self):
        return len(self.train_loss)

    def to_csv(self, path) -> Path:
        path = Path(path)
        with path.open("w", newline="", encoding="utf-8") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["epoch", "train_loss", "train_acc", "valid_loss", "valid_acc"])
            for e in range(len(self)):
                w.writerow([e + 1] + [f"{v:.6f}" for v in (self.train_loss[e], self.train_acc[e],
                                                            self.valid_loss[e], self.valid_acc[e])])
        return path


def loss_and_accuracy(probs: np.ndarray, labels) -> tuple[float, float]:
    labels = np.asarray(labels, dtype=np.int64)
    p = np.clip(probs[np.arange(len(labels)), labels], 1e-300, None)
    return float(-np.log(p).mean()), float((probs.argmax(axis=1) == labels).mean())


def train_lstm(model: LSTMClassifier, train, valid, vocab: Vocabulary, cfg: LSTMConfig | None = None):
    """Adam training; returns (best-validation-accuracy snapshot, LearningCurves)."""
    cfg = cfg or model.cfg
    if vocab.hash != model.vocab_hash:
        raise TrainingError("vocabulary hash does not match the model")
    if len(train) == 0 or len(valid) == 0:
        raise TrainingError("training and validation splits must be non-empty")
    tr_ids, tr_len = encode_batch(train.token_lists, vocab, cfg.max_len)
    va_ids, va_len = encode_batch(valid.token_lists, vocab, cfg.max_len)
    tr_y, va_y = np.array(train.labels), np.array(valid.labels)
    opt = nn.Adam(model.params, lr=cfg.lr)
    curves = LearningCurves()
    best, best_acc = model.copy(), -1.0
    step = 0
    for epoch in range(cfg.epochs):
        order = nn.derive_rng(cfg.seed, "lstm-shuffle", epoch).permutation(len(tr_y))
        for bi, lo in enumerate(range(0, len(order), cfg.batch_size)):
            idx = order[lo:lo + cfg.batch_size]
            opt.zero_grad()
            logits = model.logits(tr_ids[idx], tr_len[idx], train=True, rng=nn.derive_rng(cfg.seed, "lstm-dropout", step))
            loss = nn.cross_entropy(logits, tr_y[idx])
            if not np.isfinite(loss.data):
                raise TrainingError(f"non-finite loss at epoch {epoch + 1}, batch {bi}")
            loss.backward()
            opt.step()
            step += 1
        tl, ta = loss_and_accuracy(model.predict_proba(tr_ids, tr_len), tr_y)
        vl, va = loss_and_accuracy(model.predict_proba(va_ids, va_len), va_y)
        curves.append(tl, ta, vl, va)
        if va > best_acc:
            best, best_acc = model.copy(), va
    return best, curves


def encode_one(tokens, vocab: Vocabulary, cfg: LSTMConfig):
    return encode(tokens, vocab, cfg.max_len)


def config_dict(cfg: LSTMConfig) -> dict:
    return asdict(cfg)


__all__ = ["LSTMConfig", "LSTMClassifier", "LearningCurves", "param_count", "lstm_cell_step", "train_lstm",
           "PAD_ID", "TrainingError"]
