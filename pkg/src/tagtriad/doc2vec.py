"""Paragraph vectors (PV-DBOW / PV-DM, negative sampling) and a multinomial logistic regression head."""

from __future__ import annotations

from dataclasses import asdict, dataclass, field

import numpy as np

from . import nncore as nn
from .vocab import Vocabulary, build_vocab


class Doc2VecError(ValueError):
    pass


@dataclass(frozen=True)
class Doc2VecConfig:
    dim: int = 100
    window: int = 5
    negative: int = 5
    epochs: int = 20
    lr: float = 0.025
    min_lr: float = 0.0001
    mode: str = "pv_dbow"
    min_count: int = 1
    infer_steps: int = 50
    seed: int = 0

    def __post_init__(self):
        if self.dim <= 0:
            raise Doc2VecError(f"vector size must be positive, got {self.dim}")
        if self.mode not in ("pv_dbow", "pv_dm"):
            raise Doc2VecError(f"unknown doc2vec mode {self.mode!r}")


@dataclass
class Doc2VecModel:
    vocab: Vocabulary
    doc_vectors: np.ndarray
    word_in_vectors: np.ndarray
    word_out_vectors: np.ndarray
    config: Doc2VecConfig
    skipped_docs: list = field(default_factory=list)

    @property
    def noise(self) -> np.ndarray:
        return noise_distribution(self.vocab)


def noise_distribution(vocab: Vocabulary, power: float = 0.75) -> np.ndarray:
    """Unigram^power over vocabulary ids; special tokens get zero mass."""
    p = np.zeros(len(vocab))
    p[vocab.first_word_id:] = np.asarray(vocab.counts, dtype=np.float64) ** power
    return p / p.sum()


def _sigmoid(x):
    return 0.5 * (1.0 + np.tanh(0.5 * x))


def _sgns_update(h, targets, out_vecs, noise, k, lr, rng, train_out=True):
    """One negative-sampling step for hidden vector ``h`` against each target id.

    ``noise`` is the cumulative noise distribution.
    Returns the gradient step for ``h``; updates ``out_vecs`` in place when
    ``train_out`` is set.
    """
    negs = np.minimum(np.searchsorted(noise, rng.random((len(targets), k)), side="right"), len(noise) - 1)
    ids = np.concatenate([targets[:, None], negs], axis=1).reshape(-1)
    labels = np.zeros((len(targets), k + 1))
    labels[:, 0] = 1.0
    labels = labels.reshape(-1)
    rows = out_vecs[ids]
    g = (labels - _sigmoid(rows @ h)) * lr
    dh = g @ rows
    if train_out:
        np.add.at(out_vecs, ids, np.outer(g, h))
    return dh


def _init_doc(rng, dim):
    return (rng.random(dim) - 0.5) / dim


def train_doc2vec(token_lists, cfg: Doc2VecConfig = Doc2VecConfig()) -> Doc2VecModel:
    """Learn one vector per document (rows follow ``token_lists``; empty docs keep their init)."""
    token_lists = [list(t) for t in token_lists]
    if not token_lists:
        raise Doc2VecError("empty corpus")
    vocab = build_vocab([t for t in token_lists if t], cfg.min_count) if any(token_lists) else None
    if vocab is None or len(vocab.words) == 0:
        raise Doc2VecError("corpus has no tokens")
    noise = np.cumsum(noise_distribution(vocab))
    init = nn.derive_rng(cfg.seed, "d2v-init")
    n, d = len(token_lists), cfg.dim
    docs = np.stack([_init_doc(init, d) for _ in range(n)])
    win = (init.random((len(vocab), d)) - 0.5) / d
    wout = np.zeros((len(vocab), d))
    encoded = [np.array([vocab.token_to_id[t] for t in toks if t in vocab.token_to_id], dtype=np.int64)
               for toks in token_lists]
    skipped = [i for i, e in enumerate(encoded) if e.size == 0]
    total = cfg.epochs * n
    step = 0
    for epoch in range(cfg.epochs):
        rng = nn.derive_rng(cfg.seed, "d2v-epoch", epoch)
        for i, ids in enumerate(encoded):
            lr = cfg.lr - (cfg.lr - cfg.min_lr) * step / total
            step += 1
            if ids.size == 0:
                continue
            if cfg.mode == "pv_dbow":
                docs[i] += _sgns_update(docs[i], ids, wout, noise, cfg.negative, lr, rng)
            else:
                _pv_dm_doc(docs, i, ids, win, wout, noise, cfg, lr, rng, train_words=True)
    return Doc2VecModel(vocab, docs, win, wout, cfg, skipped)


def _pv_dm_doc(docs, i, ids, win, wout, noise, cfg, lr, rng, train_words):
    for pos in range(ids.size):
        lo, hi = max(0, pos - cfg.window), min(ids.size, pos + cfg.window + 1)
        ctx = np.concatenate([ids[lo:pos], ids[pos + 1:hi]])
        count = ctx.size + 1
        h = (docs[i] + win[ctx].sum(axis=0)) / count
        dh = _sgns_update(h, ids[pos:pos + 1], wout, noise, cfg.negative, lr, rng, train_out=train_words) / count
        docs[i] += dh
        if train_words and ctx.size:
            np.add.at(win, ctx, dh)


def infer_vector(model: Doc2VecModel, tokens, steps: int | None = None, seed: int = 0) -> np.ndarray:
    """Fit a fresh document vector against the frozen word vectors."""
    cfg = model.config
    steps = cfg.infer_steps if steps is None else steps
    ids = np.array([model.vocab.token_to_id[t] for t in tokens if t in model.vocab.token_to_id], dtype=np.int64)
    rng = nn.derive_rng(seed, "d2v-infer")
    vec = _init_doc(rng, cfg.dim)
    if steps == 0:
        return vec
    if ids.size == 0:
        raise Doc2VecError("no anchors for inference: every token is out of vocabulary")
    noise = np.cumsum(model.noise)
    holder = vec[None, :].copy()
    for s in range(steps):
        lr = cfg.lr - (cfg.lr - cfg.min_lr) * s / steps
        if cfg.mode == "pv_dbow":
            holder[0] += _sgns_update(holder[0], ids, model.word_out_vectors, noise, cfg.negative, lr, rng,
                                      train_out=False)
        else:
            _pv_dm_doc(holder, 0, ids, model.word_in_vectors, model.word_out_vectors, noise, cfg, lr, rng,
                       train_words=False)
    return holder[0]


def cosine(a, b) -> float:
    na, nb = np.linalg.norm(a), np.linalg.norm(b)
    if na == 0 or nb == 0:
        return 0.0
    return float(a @ b / (na * nb))


# -- multinomial logistic regression -----------------------------------------
@dataclass(frozen=True)
class MNLRConfig:
    lr: float = 0.5
    l2: float = 1e-4
    epochs: int = 300
    batch_size: int = 64
    decay: float = 0.05
    full_batch_below: float = 0.1  # once lr decays under this, steps use the whole set
    tol: float = 1e-7
    patience: int = 10
    seed: int = 0


@dataclass
class MNLRModel:
    W: np.ndarray  # K x d
    b: np.ndarray  # K
    l2: float
    loss_curve: list = field(default_factory=list)

    @property
    def class_count(self) -> int:
        return self.W.shape[0]


def _full_loss(W, b, X, y, l2):
    logits = X @ W.T + b
    m = logits.max(axis=1, keepdims=True)
    lse = m[:, 0] + np.log(np.exp(logits - m).sum(axis=1))
    return float((lse - logits[np.arange(len(y)), y]).mean() + l2 * (W * W).sum())


def train_mnlr(X, y, class_count: int | None = None, cfg: MNLRConfig = MNLRConfig()) -> MNLRModel:
    """Mini-batch gradient descent on mean cross-entropy + l2 * ||W||^2.

    After the decayed step size drops under ``full_batch_below`` the same number of
    steps per epoch is taken on the full set, so the recorded loss stops jittering.
    """
    X = np.asarray(X, dtype=np.float64)
    y = np.asarray(y, dtype=np.int64)
    if X.ndim != 2 or X.shape[0] != y.shape[0] or X.shape[0] == 0:
        raise Doc2VecError(f"dimension mismatch: X {X.shape} vs y {y.shape}")
    k = class_count if class_count is not None else int(y.max()) + 1
    W = nn.parameter(np.zeros((k, X.shape[1])), "W")
    b = nn.parameter(np.zeros(k), "b")
    opt = nn.SGD({"W": W, "b": b}, cfg.lr)
    rng = nn.derive_rng(cfg.seed, "mnlr")
    curve = [_full_loss(W.data, b.data, X, y, cfg.l2)]
    stall = 0
    for epoch in range(cfg.epochs):
        opt.lr = cfg.lr / (1.0 + cfg.decay * epoch)
        order = rng.permutation(len(y))
        full = opt.lr < cfg.full_batch_below
        for lo in range(0, len(y), cfg.batch_size):
            idx = slice(None) if full else order[lo:lo + cfg.batch_size]
            opt.zero_grad()
            logits = nn.Tensor(X[idx]) @ W.T + b
            loss = nn.cross_entropy(logits, y[idx]) + (W * W).sum() * cfg.l2
            loss.backward()
            opt.step()
        curve.append(_full_loss(W.data, b.data, X, y, cfg.l2))
        if curve[-2] - curve[-1] < cfg.tol * max(1.0, abs(curve[-2])):
            stall += 1
            if stall >= cfg.patience:
                break
        else:
            stall = 0
    return MNLRModel(W.data.copy(), b.data.copy(), cfg.l2, curve)


def predict_mnlr(model: MNLRModel, x) -> np.ndarray:
    """Class probabilities softmax(Wx + b); works on one vector or a batch of rows."""
    x = np.asarray(x, dtype=np.float64)
    if x.shape[-1] != model.W.shape[1]:
        raise Doc2VecError(f"dimension mismatch: model expects {model.W.shape[1]}, got {x.shape[-1]}")
    return nn.softmax_np(x @ model.W.T + model.b, axis=-1)


def argmax_lowest(probs) -> np.ndarray:
    """Argmax along the last axis; ties go to the lowest class index (numpy's rule)."""
    return np.argmax(probs, axis=-1)


def config_dict(cfg) -> dict:
    return asdict(cfg)
